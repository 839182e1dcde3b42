"""Egonet anomaly scoring: power-law out-line distance blended with LOF."""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from .network import CoTradeGraph

LOF_EPS = 1e-12


class Law(str, enum.Enum):
    EDPL = "edpl"  # edges vs nodes
    EWPL = "ewpl"  # total weight vs edges
    ELWPL = "elwpl"  # principal eigenvalue vs total weight
    ERPL = "erpl"  # edge weight vs its rank within the egonet


# (x feature, y feature) for the three egonet-level laws
LAW_AXES = {
    Law.EDPL: ("n_nodes", "n_edges"),
    Law.EWPL: ("n_edges", "total_weight"),
    Law.ELWPL: ("total_weight", "lambda_w"),
}


@dataclass(frozen=True)
class EgonetFeatures:
    ego: str
    n_nodes: int
    n_edges: int
    total_weight: float
    lambda_w: float
    incident_weights: tuple[float, ...]


def _egonet(adj: dict[str, dict[str, float]], ego: str) -> EgonetFeatures:
    nbrs = adj[ego]
    if not nbrs:
        raise ValueError(f"ego {ego!r} has no edges")
    members = [ego, *sorted(nbrs)]
    index = {n: i for i, n in enumerate(members)}
    mat = np.zeros((len(members), len(members)))
    n_edges = 0
    weights = []
    for n in members:
        for m, w in adj[n].items():
            j = index.get(m)
            if j is not None and index[n] < j:
                mat[index[n], j] = mat[j, index[n]] = w
                n_edges += 1
                weights.append(w)
    lam = float(np.linalg.eigvalsh(mat)[-1])
    return EgonetFeatures(
        ego=ego,
        n_nodes=len(members),
        n_edges=n_edges,
        total_weight=math.fsum(weights),
        lambda_w=lam,
        incident_weights=tuple(sorted(nbrs.values(), reverse=True)),
    )


def egonet_features(g: CoTradeGraph, ego: str, adj: dict | None = None) -> EgonetFeatures:
    """Features of the subgraph induced by ``ego`` and its neighbours."""
    adj = g.adjacency() if adj is None else adj
    if ego not in adj:
        raise ValueError(f"ego {ego!r} is not in the graph (isolated insiders are excluded)")
    return _egonet(adj, ego)


def all_egonet_features(g: CoTradeGraph) -> list[EgonetFeatures]:
    adj = g.adjacency()
    return [_egonet(adj, n) for n in sorted(adj)]


# ---------------------------------------------------------------------------
# power laws


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    coefficient: float
    r_squared: float
    which: Law | None = None
    n_points: int = 0

    def predict(self, x):
        return self.coefficient * np.power(x, self.exponent)


def fit_power_law(points: Sequence[tuple[float, float]], which: Law | None = None) -> PowerLawFit:
    """Least-squares line through (log x, log y): y = C x^exponent."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 3:
        raise ValueError("need at least 3 points")
    if (pts <= 0).any():
        raise ValueError("power-law fit needs positive x and y")
    lx, ly = np.log(pts[:, 0]), np.log(pts[:, 1])
    dx = lx - lx.mean()
    sxx = float(dx @ dx)
    if sxx == 0.0:
        raise ValueError("degenerate fit: all x values are equal")
    slope = float(dx @ (ly - ly.mean())) / sxx
    intercept = float(ly.mean() - slope * lx.mean())
    resid = ly - (intercept + slope * lx)
    sst = float(((ly - ly.mean()) ** 2).sum())
    r2 = 1.0 if sst == 0 else max(0.0, 1.0 - float(resid @ resid) / sst)
    return PowerLawFit(slope, math.exp(intercept), r2, which, len(pts))


def outline_score(y: float, x: float, fit: PowerLawFit) -> float:
    """Out-line distance of (x, y) from the fitted curve (natural log)."""
    expected = fit.coefficient * x**fit.exponent
    return _outline(y, expected)


def _outline(y, expected):
    y = np.asarray(y, dtype=float)
    expected = np.asarray(expected, dtype=float)
    ratio = np.maximum(y, expected) / np.minimum(y, expected)
    out = ratio * np.log(np.abs(y - expected) + 1.0)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# local outlier factor


def local_outlier_factor(points, k: int) -> np.ndarray:
    """LOF of each point with exactly ``k`` nearest neighbours (ties by index).

    Reachability distances are floored at 1e-12 so duplicate points keep a
    finite local density.
    """
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    if not 0 < k < n:
        raise ValueError(f"need 0 < k < number of points, got k={k}, n={n}")
    nbrs = np.empty((n, k), dtype=np.int64)
    nd = np.empty((n, k))
    # row blocks keep memory at O(block * n)
    for lo in range(0, n, 512):
        hi = min(n, lo + 512)
        d = np.sqrt(((pts[lo:hi, None, :] - pts[None, :, :]) ** 2).sum(-1))
        d[np.arange(hi - lo), np.arange(lo, hi)] = np.inf
        idx = np.argsort(d, axis=1, kind="stable")[:, :k]
        nbrs[lo:hi] = idx
        nd[lo:hi] = np.take_along_axis(d, idx, axis=1)
    kdist = nd[:, -1]
    reach = np.maximum(np.maximum(kdist[nbrs], nd), LOF_EPS)
    lrd = 1.0 / reach.mean(axis=1)
    return lrd[nbrs].mean(axis=1) / lrd


# ---------------------------------------------------------------------------
# ranking


@dataclass(frozen=True)
class OutlierScore:
    ego: str
    outline: float
    lof: float
    combined: float
    combined_rank: int
    features: EgonetFeatures


def _law_xy(feats: Sequence[EgonetFeatures], law: Law) -> tuple[np.ndarray, np.ndarray]:
    fx, fy = LAW_AXES[law]
    x = np.array([getattr(f, fx) for f in feats], dtype=float)
    y = np.array([getattr(f, fy) for f in feats], dtype=float)
    return x, y


def rank_anomalies(
    g: CoTradeGraph,
    law: Law | str = Law.EDPL,
    k: int | None = None,
    log_base: float = math.e,
) -> list[OutlierScore]:
    """Rank egos by the mean of their normalised out-line and LOF ranks.

    Each score is ranked ascending (ties averaged) and divided by the number
    of egos, so the most anomalous ego on a criterion gets 1. Output is
    sorted by combined score descending, ties broken by ego id.
    """
    law = Law(law)
    if law is Law.ERPL:
        raise ValueError("ERPL is an edge-level law and cannot rank egos")
    feats = all_egonet_features(g)
    n = len(feats)
    k = min(20, n - 1) if k is None else k
    if n < k + 1 or n < 3:
        raise ValueError(f"need at least k+1 (and >= 3) egos, have {n}")
    x, y = _law_xy(feats, law)
    keep = (x > 0) & (y > 0)
    fit = fit_power_law(np.column_stack([x[keep], y[keep]]), law)
    outline = _outline(y, fit.predict(x)) / math.log(log_base)
    lof = local_outlier_factor(np.column_stack([np.log(x), np.log(y)]), k)
    # round before ranking so float noise around the fitted curve does not break ties
    combined = (rankdata(np.round(outline, 12)) / n + rankdata(np.round(lof, 12)) / n) / 2
    order = sorted(range(n), key=lambda i: (-combined[i], feats[i].ego))
    return [
        OutlierScore(feats[i].ego, float(outline[i]), float(lof[i]), float(combined[i]), r, feats[i])
        for r, i in enumerate(order, start=1)
    ]


# ---------------------------------------------------------------------------
# power-law conditions


@dataclass(frozen=True)
class ConditionCheck:
    law: Law
    fit: PowerLawFit | None
    lower: float
    upper: float
    passed: bool | None  # None = inconclusive

    @property
    def status(self) -> str:
        return {True: "pass", False: "fail", None: "inconclusive"}[self.passed]


CONDITION_RANGES = {
    Law.EDPL: (1.0, 2.0),
    Law.EWPL: (1.0, math.inf),
    Law.ELWPL: (0.5, 1.0),
    Law.ERPL: (-math.inf, 0.0),
}


def _check(law: Law, fit: PowerLawFit | None) -> ConditionCheck:
    lo, hi = CONDITION_RANGES[law]
    passed = None if fit is None else bool(lo <= fit.exponent <= hi)
    return ConditionCheck(law, fit, lo, hi, passed)


def _try_fit(points, law):
    try:
        return fit_power_law(points, law)
    except ValueError:
        return None


def verify_conditions(g: CoTradeGraph) -> dict[Law, ConditionCheck]:
    """Fit the four egonet laws and test each exponent against its range.

    The rank law is fitted per ego (incident weight vs its descending rank)
    for every ego with at least 3 edges; the median exponent is reported.
    Too few usable points makes a law inconclusive rather than failed.
    """
    feats = all_egonet_features(g)
    out = {}
    for law in (Law.EDPL, Law.EWPL, Law.ELWPL):
        x, y = _law_xy(feats, law)
        keep = (x > 0) & (y > 0)
        out[law] = _check(law, _try_fit(np.column_stack([x[keep], y[keep]]), law) if keep.sum() >= 3 else None)

    per_ego = []
    for f in feats:
        if len(f.incident_weights) >= 3:
            ranks = np.arange(1, len(f.incident_weights) + 1, dtype=float)
            fit = _try_fit(np.column_stack([ranks, f.incident_weights]), Law.ERPL)
            if fit is not None:
                per_ego.append(fit)
    if per_ego:
        exps = [p.exponent for p in per_ego]
        med = float(np.median(exps))
        r2 = float(np.median([p.r_squared for p in per_ego]))
        c = float(np.median([p.coefficient for p in per_ego]))
        out[Law.ERPL] = _check(Law.ERPL, PowerLawFit(med, c, r2, Law.ERPL, len(per_ego)))
    else:
        out[Law.ERPL] = _check(Law.ERPL, None)
    return out


def write_oddball_csv(scores: Sequence[OutlierScore], path: str | Path, top: int | None = None) -> None:
    rows = scores if top is None else scores[:top]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("rank", "insider_id", "outline", "lof", "combined", "n_nodes", "n_edges", "total_weight", "lambda_w"))
        for s in rows:
            f = s.features
            w.writerow(
                (s.combined_rank, s.ego, repr(s.outline), repr(s.lof), repr(s.combined),
                 f.n_nodes, f.n_edges, repr(f.total_weight), repr(f.lambda_w))
            )
