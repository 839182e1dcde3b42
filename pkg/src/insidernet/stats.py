"""Topological metrics and null-ensemble summaries (Z-scores, percentile envelopes)."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from .network import CoTradeGraph, connected_components, multi_firm_insiders

ULTRA_STRONG = 0.9


@dataclass(frozen=True)
class MetricVector:
    nodes: int
    edges: int
    avg_degree: float
    n_components: int
    giant_component_size: int
    multi_firm_insiders: int
    prop_multi_firm: float
    avg_edge_weight: float
    ultra_strong_ties: int

    @classmethod
    def names(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def as_dict(self) -> dict[str, float]:
        return asdict(self)

    @property
    def undefined(self) -> tuple[str, ...]:
        return tuple(k for k, v in asdict(self).items() if isinstance(v, float) and math.isnan(v))


def compute_metrics(g: CoTradeGraph, population: int | None = None) -> MetricVector:
    """The nine summary metrics; averages are NaN on an empty graph.

    ``prop_multi_firm`` divides by the insider population of the input data
    (``g.population`` unless overridden), not by the node count.
    """
    n = len(g)
    m = g.n_edges
    comps = connected_components(g)
    multi = len(multi_firm_insiders(g))
    pop = g.population if population is None else population
    weights = [e.weight for e in g.edges.values()]
    return MetricVector(
        nodes=n,
        edges=m,
        avg_degree=2 * m / n if n else math.nan,
        n_components=len(comps),
        giant_component_size=comps[0].size if comps else 0,
        multi_firm_insiders=multi,
        prop_multi_firm=multi / pop if pop else math.nan,
        avg_edge_weight=math.fsum(weights) / m if m else math.nan,
        ultra_strong_ties=sum(w > ULTRA_STRONG for w in weights),
    )


def nearest_rank(values: Sequence[float], pct: float) -> float:
    """Nearest-rank percentile of ``values`` (``pct`` in [0, 100])."""
    xs = sorted(values)
    if not xs:
        raise ValueError("no values")
    rank = max(1, math.ceil(pct / 100 * len(xs)))
    return float(xs[rank - 1])


@dataclass(frozen=True)
class MetricSummary:
    metric: str
    observed: float
    n_replicas: int
    mean: float
    std: float
    p5: float
    p95: float
    z_score: float | None
    undefined: bool
    p_value: float
    p_value_two_sided: float
    direction: str  # "excess" or "deficit"


@dataclass(frozen=True)
class NullSummary:
    model: str
    metrics: dict[str, MetricSummary]

    def __getitem__(self, name: str) -> MetricSummary:
        return self.metrics[name]


def summarize_metric(name: str, observed: float, values: Sequence[float]) -> MetricSummary:
    vals = np.array([v for v in values if not (isinstance(v, float) and math.isnan(v))], dtype=float)
    if len(vals) < 2 or (isinstance(observed, float) and math.isnan(observed)):
        nan = math.nan
        return MetricSummary(name, observed, len(vals), nan, nan, nan, nan, None, True, nan, nan, "excess")
    mean = math.fsum(vals) / len(vals)
    std = float(np.sqrt(math.fsum((vals - mean) ** 2) / (len(vals) - 1)))
    p_ge = float(np.mean(vals >= observed))
    p_le = float(np.mean(vals <= observed))
    excess = observed >= mean
    undefined = std == 0.0
    return MetricSummary(
        metric=name,
        observed=observed,
        n_replicas=len(vals),
        mean=mean,
        std=std,
        p5=nearest_rank(vals, 5),
        p95=nearest_rank(vals, 95),
        z_score=None if undefined else (observed - mean) / std,
        undefined=undefined,
        p_value=p_ge if excess else p_le,
        p_value_two_sided=min(1.0, 2 * min(p_ge, p_le)),
        direction="excess" if excess else "deficit",
    )


def summarize_nulls(
    observed: MetricVector, replicas: Sequence[MetricVector], model: str = "null"
) -> NullSummary:
    """Per-metric mean, sample std, nearest-rank 5/95% envelope, Z and empirical p."""
    if len(replicas) < 2:
        raise ValueError("need at least 2 replicas")
    out = {}
    for name in MetricVector.names():
        out[name] = summarize_metric(name, getattr(observed, name), [getattr(r, name) for r in replicas])
    return NullSummary(model, out)


# ---------------------------------------------------------------------------
# reports

REPORT_COLUMNS = ("metric", "model", "observed", "mean", "std", "p5", "p95", "z", "p_value", "n_replicas")


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return "" if math.isnan(x) else repr(x)
    return str(x)


def report_rows(observed: MetricVector, summaries: Sequence[NullSummary]) -> list[dict[str, str]]:
    rows = []
    if not summaries:
        for name, val in observed.as_dict().items():
            rows.append({c: "" for c in REPORT_COLUMNS} | {"metric": name, "model": "none", "observed": _fmt(val)})
        return rows
    for s in summaries:
        for name in MetricVector.names():
            m = s[name]
            rows.append(
                {
                    "metric": name,
                    "model": s.model,
                    "observed": _fmt(m.observed),
                    "mean": _fmt(m.mean),
                    "std": _fmt(m.std),
                    "p5": _fmt(m.p5),
                    "p95": _fmt(m.p95),
                    "z": _fmt(m.z_score),
                    "p_value": _fmt(m.p_value),
                    "n_replicas": str(m.n_replicas),
                }
            )
    return rows


def write_report_csv(observed: MetricVector, summaries: Sequence[NullSummary], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=REPORT_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(report_rows(observed, summaries))


def _jsonable(x):
    if isinstance(x, float) and math.isnan(x):
        return None
    return x


def write_report_json(observed: MetricVector, summaries: Sequence[NullSummary], path: str | Path) -> None:
    payload = {
        "observed": {k: _jsonable(v) for k, v in observed.as_dict().items()},
        "nulls": {
            s.model: {k: {kk: _jsonable(vv) for kk, vv in asdict(v).items()} for k, v in s.metrics.items()}
            for s in summaries
        },
    }
    Path(path).write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")


def write_replica_metrics(replicas: Sequence[MetricVector], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["replica", *MetricVector.names()])
        for i, r in enumerate(replicas):
            w.writerow([i, *(_fmt(v) for v in r.as_dict().values())])


def read_replica_metrics(path: str | Path) -> list[MetricVector]:
    """Inverse of :func:`write_replica_metrics`; blank cells read back as NaN."""
    kinds = {f.name: f.type for f in fields(MetricVector)}
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            vals = {}
            for name, kind in kinds.items():
                raw = row[name]
                if kind in (int, "int"):
                    vals[name] = int(raw)
                else:
                    vals[name] = float(raw) if raw else math.nan
            out.append(MetricVector(**vals))
    return out
