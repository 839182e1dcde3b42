"""End-to-end orchestration: ingest, build, nulls, stats, analyze, calibrate.

Each stage writes its artifacts into the output directory. While a run is in
progress an ``INCOMPLETE`` marker sits in that directory; it is removed only
after every stage succeeds, and otherwise names the stage that failed.
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path
from typing import Callable, Sequence

from . import centrality, oddball
from .calibration import calibrate_threshold, empirical_false_positive_rate, n_pairs_exact
from .config import PipelineConfig
from .ingest import (
    InsiderFirmLog,
    TradeEvent,
    aggregate_daily,
    filter_institutions,
    parse_form4_directory,
    read_trades_csv,
    write_events_csv,
    write_rejects_csv,
)
from .network import (
    CoTradeGraph,
    build_graph,
    component_firm_histogram,
    component_size_histogram,
    connected_components,
    write_edge_csv,
    write_graphml,
    write_json_adjacency,
)
from .nulls import generate_calibrated, generate_shuffled, logs_to_events
from .stats import (
    MetricVector,
    NullSummary,
    compute_metrics,
    summarize_nulls,
    write_replica_metrics,
    write_report_csv,
    write_report_json,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CODES = {"ingest": 10, "build": 20, "null": 30, "stats": 40, "analyze": 50, "calibrate": 60}
MARKER = "INCOMPLETE"


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException | str):
        super().__init__(f"{stage} stage failed: {cause}")
        self.stage = stage
        self.exit_code = EXIT_CODES[stage]


def write_json(payload, path: str | Path) -> None:
    Path(path).write_text(json.dumps(payload, indent=1, sort_keys=True, default=str) + "\n")


# ---------------------------------------------------------------------------
# stages


def ingest(cfg: PipelineConfig) -> tuple[list[TradeEvent], dict]:
    """Load trades from a Form 4 directory or a canonical CSV and drop institutions."""
    src = Path(cfg.input)
    if not src.exists():
        raise FileNotFoundError(f"input path {src} does not exist")
    if src.is_dir():
        result = parse_form4_directory(src, horizon=cfg.horizon, amendments=cfg.amendments)
    else:
        result = read_trades_csv(src, horizon=cfg.horizon)
    events, n_inst = filter_institutions(result.events)
    info = {
        "source": "form4" if src.is_dir() else "csv",
        "events_parsed": len(result.events),
        "institution_events_removed": n_inst,
        "events_kept": len(events),
        "rejects": len(result.rejects),
    }
    return events, info | {"_rejects": result.rejects}


def _null_replica(job) -> MetricVector:
    model, cfg, data, population, index = job
    if model == "calibrated":
        events = generate_calibrated(data, cfg.calibrated_null(), index)
    else:
        events = generate_shuffled(data, cfg.shuffle_null(), index)
    g = build_graph(aggregate_daily(events), cfg.edge_filter(), threads=1, population=population)
    return compute_metrics(g, population)


def null_ensemble(
    model: str,
    cfg: PipelineConfig,
    logs: Sequence[InsiderFirmLog],
    population: int,
    replica_dir: Path | None = None,
) -> list[MetricVector]:
    """Metric vectors of ``cfg.replicas`` replicas of one null model, in replica order.

    Each replica is a pure function of (seed, replica index), so the result is
    the same for any thread count.
    """
    if model not in ("calibrated", "shuffle"):
        raise ValueError(f"unknown null model {model!r}")
    data = list(logs) if model == "calibrated" else logs_to_events(logs)
    jobs = [(model, cfg, data, population, i) for i in range(cfg.replicas)]
    if cfg.threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
            out = list(pool.map(_null_replica, jobs, chunksize=max(1, len(jobs) // (4 * cfg.threads))))
    else:
        out = [_null_replica(j) for j in jobs]
    if replica_dir is not None:
        for i in range(cfg.replicas):
            if model == "calibrated":
                events = generate_calibrated(data, cfg.calibrated_null(), i)
            else:
                events = generate_shuffled(data, cfg.shuffle_null(), i)
            write_events_csv(events, replica_dir / f"{i:04d}.csv")
    return out


def null_manifest(model: str, cfg: PipelineConfig) -> dict:
    params = asdict(cfg.calibrated_null()) if model == "calibrated" else asdict(cfg.shuffle_null())
    return {
        "model": model,
        "seed": cfg.seed,
        "replicas": cfg.replicas,
        "stream": 1 if model == "calibrated" else 2,
        "params": params,
        "edge_filter": {
            "min_trades": cfg.min_trades,
            "min_overlap_weeks": cfg.min_overlap_weeks,
            "score_threshold": cfg.score_threshold,
            "require_tenure_overlap": cfg.require_tenure_overlap,
            "method": cfg.method,
            "kernel_width": cfg.kernel_width,
        },
    }


def write_graph_outputs(g: CoTradeGraph, out: Path) -> None:
    write_edge_csv(g, out / "edges.csv")
    write_json_adjacency(g, out / "graph.json")
    write_graphml(g, out / "graph.graphml")
    comps = connected_components(g)
    write_json(
        {
            "summary": asdict(g.summary) if g.summary is not None else None,
            "population": g.population,
            "nodes": len(g),
            "edges": g.n_edges,
            "component_sizes": {str(k): v for k, v in sorted(component_size_histogram(comps).items())},
            "component_firms": {str(k): v for k, v in sorted(component_firm_histogram(comps).items())},
        },
        out / "build_summary.json",
    )


def analyze(g: CoTradeGraph, cfg: PipelineConfig, out: Path) -> dict:
    """Centrality rankings, OddBall scores and power-law checks; small graphs get empty tables."""
    notes: dict[str, str] = {}
    close_path, eig_path, odd_path = out / "centrality_closeness.csv", out / "centrality_eigenvector.csv", out / "oddball.csv"
    if g.n_edges == 0:
        notes["centrality"] = "graph has no edges"
        for p in (close_path, eig_path):
            p.write_text("rank,insider_id,score,component_id\n")
    else:
        close = centrality.closeness(g, cfg.closeness_distance)
        centrality.write_ranking_csv(g, close, close_path, cfg.top)
        eig = centrality.eigenvector(g, cfg.eigen_tol, cfg.eigen_max_iter)
        centrality.write_ranking_csv(g, eig, eig_path, cfg.top)
        notes["eigenvalue"] = repr(eig.eigenvalue)
        notes["eigen_iterations"] = str(eig.iterations)

    n = len(g)
    if n < 3:
        notes["oddball"] = f"needs at least 3 egos, graph has {n}"
        odd_path.write_text("rank,insider_id,outline,lof,combined,n_nodes,n_edges,total_weight,lambda_w\n")
    else:
        try:
            scores = oddball.rank_anomalies(g, cfg.oddball_law, k=min(cfg.lof_k, n - 1))
        except ValueError as exc:
            # degenerate feature clouds (e.g. every egonet the same shape) cannot be fitted
            notes["oddball"] = str(exc)
            scores = []
        oddball.write_oddball_csv(scores, odd_path, cfg.top)

    checks = oddball.verify_conditions(g) if n else {}
    write_json(
        {
            "notes": notes,
            "conditions": {
                law.value: {
                    "status": c.status,
                    "lower": None if math.isinf(c.lower) else c.lower,
                    "upper": None if math.isinf(c.upper) else c.upper,
                    "exponent": None if c.fit is None else c.fit.exponent,
                    "r_squared": None if c.fit is None else c.fit.r_squared,
                    "n_points": None if c.fit is None else c.fit.n_points,
                }
                for law, c in checks.items()
            },
        },
        out / "analysis.json",
    )
    return notes


def calibrate(cfg: PipelineConfig, logs: Sequence[InsiderFirmLog]) -> dict:
    firms: dict[str, set[str]] = {}
    for log in logs:
        firms.setdefault(log.firm_id, set()).add(log.insider_id)
    insiders = {log.insider_id for log in logs}
    ccfg = cfg.calibration(len(firms), len(insiders))
    res = calibrate_threshold(ccfg)
    payload = {
        "config": asdict(ccfg),
        "result": res.as_dict(),
        "n_pairs_exact": n_pairs_exact(len(v) for v in firms.values()),
        "tau_star_exact_pairs": None,
    }
    exact = payload["n_pairs_exact"]
    if exact > 0:
        payload["tau_star_exact_pairs"] = calibrate_threshold(ccfg, n_pairs=exact).tau_star
    return payload


# ---------------------------------------------------------------------------
# driver


def _stage(name: str, marker: Path, fn: Callable, *args):
    marker.write_text(f"running {name}\n")
    logger.info("stage %s", name)
    try:
        return fn(*args)
    except StageError:
        raise
    except Exception as exc:  # noqa: BLE001 - every failure maps to the stage exit code
        marker.write_text(f"failed {name}: {exc}\n")
        raise StageError(name, exc) from exc


def run_pipeline(cfg: PipelineConfig) -> int:
    """Run every stage; returns 0 or the failing stage's exit code."""
    out = Path(cfg.output)
    try:
        cfg.validate()
    except (ValueError, KeyError) as exc:
        logger.error("invalid config: %s", exc)
        return EXIT_CODES["ingest"]
    out.mkdir(parents=True, exist_ok=True)
    marker = out / MARKER
    marker.write_text("starting\n")
    cfg.write(out / "config.txt")
    try:
        _run(cfg, out, marker)
    except StageError as exc:
        logger.error("%s", exc)
        return exc.exit_code
    marker.unlink()
    return EXIT_OK


def _run(cfg: PipelineConfig, out: Path, marker: Path) -> None:
    def do_ingest():
        events, info = ingest(cfg)
        write_rejects_csv(info.pop("_rejects"), out / "rejects.csv")
        write_events_csv(events, out / "trades.csv")
        logs = aggregate_daily(events)
        info["insider_firm_pairs"] = len(logs)
        info["insiders"] = len({l.insider_id for l in logs})
        info["firms"] = len({l.firm_id for l in logs})
        write_json(info, out / "ingest_summary.json")
        if not logs:
            raise ValueError("no trades survived ingestion")
        return logs

    logs = _stage("ingest", marker, do_ingest)

    def do_build():
        g = build_graph(logs, cfg.edge_filter(), threads=cfg.threads)
        write_graph_outputs(g, out)
        return g

    g = _stage("build", marker, do_build)
    observed = compute_metrics(g)

    def do_nulls():
        found = {}
        if cfg.replicas == 0:
            logger.info("replicas = 0: null stages skipped")
            return found
        for model in cfg.models:
            mdir = out / "nulls" / model
            mdir.mkdir(parents=True, exist_ok=True)
            reps = null_ensemble(model, cfg, logs, g.population, mdir if cfg.write_replicas else None)
            write_replica_metrics(reps, mdir / "replica_metrics.csv")
            write_json(null_manifest(model, cfg), mdir / "manifest.json")
            found[model] = reps
        return found

    ensembles = _stage("null", marker, do_nulls)

    def do_stats():
        summaries: list[NullSummary] = [
            summarize_nulls(observed, reps, model) for model, reps in ensembles.items()
        ] if all(len(r) >= 2 for r in ensembles.values()) else []
        if ensembles and not summaries:
            raise ValueError("at least 2 replicas are needed for null summaries")
        write_report_csv(observed, summaries, out / "stats.csv")
        write_report_json(observed, summaries, out / "stats.json")

    _stage("stats", marker, do_stats)
    _stage("analyze", marker, analyze, g, cfg, out)
    _stage("calibrate", marker, lambda: write_json(_calibration_payload(cfg, logs), out / "calibration.json"))


def _calibration_payload(cfg: PipelineConfig, logs) -> dict:
    payload = calibrate(cfg, logs)
    if cfg.calib_simulate > 0:
        rate = empirical_false_positive_rate(
            cfg.min_trades, cfg.min_trades, cfg.score_threshold, cfg.allowed_days, cfg.calib_simulate, cfg.seed
        )
        payload["simulated_false_positive_rate"] = rate
        payload["simulated_trials"] = cfg.calib_simulate
    return payload
