"""Command-line interface.

Every subcommand builds a :class:`PipelineConfig` from defaults, an optional
``--config`` file, repeated ``--set key=value`` overrides and finally its own
flags, in that order. Logs go to stderr; data goes to files or stdout.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import centrality, oddball
from .calibration import (
    CalibrationConfig,
    InfeasibleThreshold,
    calibrate_threshold,
    empirical_false_positive_rate,
    pair_tail_bound,
)
from .config import PipelineConfig
from .ingest import load_logs, write_events_csv, write_rejects_csv
from .network import build_graph, read_edge_csv
from .pipeline import (
    EXIT_CODES,
    ingest,
    null_ensemble,
    null_manifest,
    run_pipeline,
    write_graph_outputs,
    write_json,
)
from .similarity import KernelConfig, assignment_similarity, combined_similarity
from .stats import (
    compute_metrics,
    read_replica_metrics,
    summarize_nulls,
    write_replica_metrics,
    write_report_csv,
    write_report_json,
)

logger = logging.getLogger("insidernet")


class CliError(Exception):
    def __init__(self, stage: str, message: str):
        super().__init__(message)
        self.exit_code = EXIT_CODES[stage]


# flag dest -> config key, for flags shared by several subcommands
_FLAG_KEYS = {
    "seed": "seed",
    "threads": "threads",
    "replicas": "replicas",
    "horizon_start": "horizon_start",
    "horizon_end": "horizon_end",
    "amendments": "amendments",
    "min_trades": "min_trades",
    "min_overlap_weeks": "min_overlap_weeks",
    "threshold": "score_threshold",
    "method": "method",
    "width": "kernel_width",
    "p_buy": "p_buy",
    "bin": "shuffle_bin",
    "top": "top",
    "distance": "closeness_distance",
    "law": "oddball_law",
    "lof_k": "lof_k",
    "input": "input",
    "output": "output",
    "write_replicas": "write_replicas",
}


def resolve_config(args: argparse.Namespace) -> PipelineConfig:
    cfg = PipelineConfig.read(args.config) if getattr(args, "config", None) else PipelineConfig()
    sets = {}
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise ValueError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        sets[k] = v
    flags = {
        key: str(getattr(args, dest)).lower() if isinstance(getattr(args, dest), bool) else str(getattr(args, dest))
        for dest, key in _FLAG_KEYS.items()
        if getattr(args, dest, None) is not None
    }
    return cfg.with_overrides(sets).with_overrides(flags)


# ---------------------------------------------------------------------------
# argument groups


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key (repeatable)")
    p.add_argument("--threads", type=int, help="worker processes for parallel stages")


def _horizon(p):
    p.add_argument("--horizon-start", help="first admissible trade date (YYYY-MM-DD)")
    p.add_argument("--horizon-end", help="last admissible trade date (YYYY-MM-DD)")


def _filters(p):
    p.add_argument("--min-trades", type=int)
    p.add_argument("--min-overlap-weeks", type=int)
    p.add_argument("--threshold", type=float, help="strict lower bound on the combined score")
    p.add_argument("--method", choices=("best_match", "assignment"))
    p.add_argument("--width", type=int, help="kernel width in days")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="insidernet", description="Insider co-trading network toolkit")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse Form 4 XML or a trades CSV into the canonical CSV")
    _common(p)
    _horizon(p)
    p.add_argument("--input", required=True, help="Form 4 directory or trades CSV")
    p.add_argument("--output", required=True, help="canonical trades CSV to write ('-' for stdout)")
    p.add_argument("--rejects", help="CSV of rejected rows")
    p.add_argument("--amendments", choices=("latest", "all"))
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("pair-score", help="similarity of two insiders at one firm (JSON to stdout)")
    _common(p)
    _horizon(p)
    p.add_argument("--trades", required=True)
    p.add_argument("--firm", required=True)
    p.add_argument("--x", required=True, help="first insider id")
    p.add_argument("--y", required=True, help="second insider id")
    p.add_argument("--width", type=int)
    p.set_defaults(func=cmd_pair_score)

    p = sub.add_parser("build", help="build the co-trading graph and write its exports")
    _common(p)
    _horizon(p)
    _filters(p)
    p.add_argument("--trades", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("null", help="generate null replicas and their metric vectors")
    _common(p)
    _horizon(p)
    _filters(p)
    p.add_argument("model", choices=("calibrated", "shuffle"))
    p.add_argument("--trades", required=True)
    p.add_argument("--out", required=True, help="directory receiving <model>/ replica files")
    p.add_argument("--replicas", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--p-buy", type=float)
    p.add_argument("--bin", choices=("quarter", "month"))
    p.add_argument("--no-replica-csv", action="store_true", help="write only metrics and manifest")
    p.set_defaults(func=cmd_null)

    p = sub.add_parser("stats", help="observed metrics with null summaries")
    _common(p)
    _horizon(p)
    _filters(p)
    p.add_argument("--trades", required=True)
    p.add_argument("--null-dir", action="append", default=[], help="directory written by 'null' (repeatable)")
    p.add_argument("--out", required=True, help="report CSV")
    p.add_argument("--json", help="report JSON")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("analyze", help="centrality or OddBall rankings of a built graph")
    asub = p.add_subparsers(dest="analysis", required=True)
    c = asub.add_parser("centrality")
    _common(c)
    c.add_argument("--edges", required=True, help="edges.csv written by 'build'")
    c.add_argument("--measure", choices=("closeness", "eigenvector"), required=True)
    c.add_argument("--distance", choices=("unit", "inverse_weight"))
    c.add_argument("--top", type=int)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_centrality)
    o = asub.add_parser("oddball")
    _common(o)
    o.add_argument("--edges", required=True)
    o.add_argument("--law", choices=("edpl", "ewpl", "elwpl"))
    o.add_argument("--lof-k", type=int)
    o.add_argument("--top", type=int)
    o.add_argument("--out", required=True)
    o.set_defaults(func=cmd_oddball)

    p = sub.add_parser("calibrate", help="family-wise calibrated threshold (JSON to stdout)")
    p.add_argument("--firms", type=int, default=CalibrationConfig.n_firms)
    p.add_argument("--insiders", type=int, default=CalibrationConfig.n_insiders)
    p.add_argument("--alpha", type=float, default=CalibrationConfig.alpha)
    p.add_argument("--min-trades", type=int, default=CalibrationConfig.m)
    p.add_argument("--allowed-days", type=int, default=CalibrationConfig.allowed_days)
    p.add_argument("--tau", type=float, default=0.8, help="threshold for the bound and simulation")
    p.add_argument("--simulate", type=int, default=0, metavar="TRIALS", help="Monte-Carlo trials at --tau")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("run", help="full pipeline into one artifact directory")
    _common(p)
    _horizon(p)
    _filters(p)
    p.add_argument("--input")
    p.add_argument("--output")
    p.add_argument("--seed", type=int)
    p.add_argument("--replicas", type=int)
    p.add_argument("--write-replicas", action="store_const", const=True)
    p.set_defaults(func=cmd_run)
    return ap


# ---------------------------------------------------------------------------
# handlers


def _logs(cfg: PipelineConfig, trades: str):
    path = Path(trades)
    if not path.is_file():
        raise FileNotFoundError(f"trades CSV {path} not found")
    return load_logs(path, horizon=cfg.horizon)


def cmd_ingest(args) -> int:
    cfg = resolve_config(args)
    try:
        events, info = ingest(cfg)
    except Exception as exc:  # noqa: BLE001
        raise CliError("ingest", str(exc)) from exc
    rejects = info.pop("_rejects")
    write_events_csv(events, sys.stdout if args.output == "-" else args.output)
    if args.rejects:
        write_rejects_csv(rejects, args.rejects)
    logger.info("ingest: %s", json.dumps(info, sort_keys=True))
    return 0


def cmd_pair_score(args) -> int:
    cfg = resolve_config(args)
    try:
        logs = {(l.firm_id, l.insider_id): l for l in _logs(cfg, args.trades)}
        x, y = logs[(args.firm, args.x)], logs[(args.firm, args.y)]
    except KeyError as exc:
        raise CliError("build", f"no trades for {exc.args[0]}") from exc
    except Exception as exc:  # noqa: BLE001
        raise CliError("ingest", str(exc)) from exc
    kcfg = KernelConfig(cfg.kernel_width)
    best = combined_similarity(x, y, kcfg)
    assign = assignment_similarity(x, y, kcfg)
    payload = {
        "firm": args.firm,
        "x": args.x,
        "y": args.y,
        "best_match": {
            "acquire": best.s_acquire,
            "dispose": best.s_dispose,
            "combined": best.combined,
            "matched_weeks": best.matched_weeks,
        },
        "assignment": {
            "acquire": assign.acquire.score,
            "dispose": assign.dispose.score,
            "combined": assign.combined,
            "overlap_weeks": assign.overlap_weeks,
            "exceeds_one": assign.exceeds_one,
        },
        "trades": {"x": x.n_trades, "y": y.n_trades},
    }
    print(json.dumps(payload, indent=1, sort_keys=True))
    return 0


def cmd_build(args) -> int:
    cfg = resolve_config(args)
    try:
        logs = _logs(cfg, args.trades)
    except Exception as exc:  # noqa: BLE001
        raise CliError("ingest", str(exc)) from exc
    try:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        g = build_graph(logs, cfg.edge_filter(), threads=cfg.threads)
        write_graph_outputs(g, out)
    except Exception as exc:  # noqa: BLE001
        raise CliError("build", str(exc)) from exc
    return 0


def cmd_null(args) -> int:
    cfg = resolve_config(args)
    try:
        logs = _logs(cfg, args.trades)
    except Exception as exc:  # noqa: BLE001
        raise CliError("ingest", str(exc)) from exc
    try:
        mdir = Path(args.out) / args.model
        mdir.mkdir(parents=True, exist_ok=True)
        population = len({l.insider_id for l in logs})
        reps = null_ensemble(args.model, cfg, logs, population, None if args.no_replica_csv else mdir)
        write_replica_metrics(reps, mdir / "replica_metrics.csv")
        write_json(null_manifest(args.model, cfg), mdir / "manifest.json")
    except Exception as exc:  # noqa: BLE001
        raise CliError("null", str(exc)) from exc
    return 0


def cmd_stats(args) -> int:
    cfg = resolve_config(args)
    try:
        logs = _logs(cfg, args.trades)
    except Exception as exc:  # noqa: BLE001
        raise CliError("ingest", str(exc)) from exc
    try:
        observed = compute_metrics(build_graph(logs, cfg.edge_filter(), threads=cfg.threads))
        summaries = []
        for d in args.null_dir:
            manifest = json.loads((Path(d) / "manifest.json").read_text())
            reps = read_replica_metrics(Path(d) / "replica_metrics.csv")
            summaries.append(summarize_nulls(observed, reps, manifest["model"]))
        write_report_csv(observed, summaries, args.out)
        if args.json:
            write_report_json(observed, summaries, args.json)
    except Exception as exc:  # noqa: BLE001
        raise CliError("stats", str(exc)) from exc
    return 0


def _edges(path: str):
    try:
        return read_edge_csv(path)
    except Exception as exc:  # noqa: BLE001
        raise CliError("analyze", f"cannot read edges: {exc}") from exc


def cmd_centrality(args) -> int:
    cfg = resolve_config(args)
    g = _edges(args.edges)
    try:
        if args.measure == "closeness":
            ranking = centrality.closeness(g, cfg.closeness_distance)
        else:
            ranking = centrality.eigenvector(g, cfg.eigen_tol, cfg.eigen_max_iter)
        centrality.write_ranking_csv(g, ranking, args.out, cfg.top)
    except Exception as exc:  # noqa: BLE001
        raise CliError("analyze", str(exc)) from exc
    return 0


def cmd_oddball(args) -> int:
    cfg = resolve_config(args)
    g = _edges(args.edges)
    try:
        scores = oddball.rank_anomalies(g, cfg.oddball_law, k=min(cfg.lof_k, max(len(g) - 1, 1)))
        oddball.write_oddball_csv(scores, args.out, cfg.top)
    except Exception as exc:  # noqa: BLE001
        raise CliError("analyze", str(exc)) from exc
    return 0


def cmd_calibrate(args) -> int:
    try:
        ccfg = CalibrationConfig(
            allowed_days=args.allowed_days,
            m=args.min_trades,
            n=args.min_trades,
            n_firms=args.firms,
            n_insiders=args.insiders,
            alpha=args.alpha,
        )
        res = calibrate_threshold(ccfg)
        payload = {"config": ccfg.__dict__, "result": res.as_dict()}
        payload["tau"] = args.tau
        payload["chernoff_at_tau"] = pair_tail_bound(ccfg.m, ccfg.n, args.tau, ccfg.allowed_days)
        if args.simulate:
            payload["simulated_trials"] = args.simulate
            payload["simulated_false_positive_rate"] = empirical_false_positive_rate(
                ccfg.m, ccfg.n, args.tau, ccfg.allowed_days, args.simulate, args.seed
            )
    except (ValueError, InfeasibleThreshold) as exc:
        raise CliError("calibrate", str(exc)) from exc
    print(json.dumps(payload, indent=1, sort_keys=True))
    return 0


def cmd_run(args) -> int:
    try:
        cfg = resolve_config(args)
    except (ValueError, KeyError) as exc:
        raise CliError("ingest", f"bad configuration: {exc}") from exc
    if not cfg.input:
        raise CliError("ingest", "no input given (--input or 'input' config key)")
    return run_pipeline(cfg)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose > 1 else logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except CliError as exc:
        logger.error("%s", exc)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
