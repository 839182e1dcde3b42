"""Synthetic trade datasets with planted coordination, for tests and demos."""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date
from itertools import combinations

import networkx as nx
import numpy as np

from .ingest import DEFAULT_HORIZON, Direction, TradeEvent
from .network import CoTradeGraph, Edge
from .nulls import CalibratedNullConfig, open_day_calendar


@dataclass(frozen=True)
class PlantedConfig:
    n_background: int = 175
    n_firms: int = 20
    n_cliques: int = 5
    clique_size: int = 5
    clique_events: int = 12
    clique_span_days: int = 730
    dense_cliques: int = 2
    background_trades: tuple[int, int] = (8, 20)
    background_min_span_days: int = 2500
    dual_board: int = 3
    horizon: tuple[date, date] = DEFAULT_HORIZON
    p_buy: float = 0.528
    seed: int = 7


@dataclass
class PlantedDataset:
    events: list[TradeEvent]
    planted_edges: set[tuple[str, str]]
    cliques: list[list[str]]
    dual_board: list[str] = field(default_factory=list)

    @property
    def insiders(self) -> set[str]:
        return {e.insider_id for e in self.events}


def _background_dates(rng, open_ord: np.ndarray, count: int, span: tuple[int, int]) -> np.ndarray:
    a, b = np.searchsorted(open_ord, span[0]), np.searchsorted(open_ord, span[1], "right")
    return open_ord[rng.integers(a, b, size=count)]


def _sparse_anchors(rng, cfg: PlantedConfig, h0: int, h1: int) -> list[int]:
    start = int(rng.integers(h0, h1 - cfg.clique_span_days))
    # Mon-Thu anchors so the +1 day offset stays on a weekday
    anchors = [o for o in range(start, start + cfg.clique_span_days) if date.fromordinal(o).weekday() < 4]
    chosen: list[int] = []
    for o in rng.permutation(anchors):
        if all(abs(int(o) - p) >= 14 for p in chosen):
            chosen.append(int(o))
        if len(chosen) == cfg.clique_events:
            break
    return sorted(chosen)


def _dense_anchors(rng, cfg: PlantedConfig) -> list[int]:
    """One event per ISO week for consecutive weeks, starting at a 91-day block."""
    h0, h1 = cfg.horizon[0].toordinal(), cfg.horizon[1].toordinal()
    n_blocks = (h1 - h0) // 91 - 1
    start = h0 + 91 * int(rng.integers(0, n_blocks))
    monday = start - date.fromordinal(start).weekday() + 7
    return [monday + 7 * w + int(rng.integers(0, 4)) for w in range(cfg.clique_events)]


def planted_cliques(cfg: PlantedConfig = PlantedConfig()) -> PlantedDataset:
    """Uncoordinated background insiders plus ``n_cliques`` coordinated groups.

    Background insiders draw their dates uniformly from the open-day calendar
    within a long random tenure (a calibrated-null world). Clique members trade
    on shared event days, each member on the day itself or the next one, so
    every within-clique pair is at most one day apart on every event. Each
    event lands in its own ISO week. The first ``dense_cliques`` groups trade
    weekly in a single burst starting at a quarter boundary; the rest spread
    their events at least two weeks apart over ``clique_span_days``.

    The first ``dual_board`` background insiders also hold a second, independent
    trading record at another firm.
    """
    rng = np.random.default_rng(cfg.seed)
    open_ord = np.array(
        [d.toordinal() for d in open_day_calendar(CalibratedNullConfig(horizon=cfg.horizon))], dtype=np.int64
    )
    h0, h1 = cfg.horizon[0].toordinal(), cfg.horizon[1].toordinal()
    events: list[TradeEvent] = []

    def add(insider, firm, ordinals, buys):
        for o, b in zip(ordinals, buys):
            events.append(
                TradeEvent(insider, firm, date.fromordinal(int(o)), Direction.ACQUIRE if b else Direction.DISPOSE)
            )

    firms = [f"F{i:03d}" for i in range(cfg.n_firms)]
    background = [f"B{i:04d}" for i in range(cfg.n_background)]

    def bg_record(insider, firm):
        count = int(rng.integers(cfg.background_trades[0], cfg.background_trades[1] + 1))
        length = int(rng.integers(cfg.background_min_span_days, h1 - h0 + 1))
        start = int(rng.integers(h0, h1 - length + 1))
        days = _background_dates(rng, open_ord, count, (start, start + length))
        add(insider, firm, days, rng.random(count) < cfg.p_buy)

    for i, b in enumerate(background):
        bg_record(b, firms[i % cfg.n_firms])
    dual = background[: cfg.dual_board]
    for i, b in enumerate(dual):
        bg_record(b, firms[(i + cfg.n_firms // 2) % cfg.n_firms])

    cliques: list[list[str]] = []
    planted: set[tuple[str, str]] = set()
    for c in range(cfg.n_cliques):
        firm = firms[c % cfg.n_firms]
        members = [f"C{c}M{j}" for j in range(cfg.clique_size)]
        cliques.append(members)
        if c < cfg.dense_cliques:
            chosen = _dense_anchors(rng, cfg)
        else:
            chosen = _sparse_anchors(rng, cfg, h0, h1)
        buys = rng.random(len(chosen)) < cfg.p_buy
        for m in members:
            offsets = rng.integers(0, 2, size=len(chosen))
            add(m, firm, np.array(chosen) + offsets, buys)
        planted.update(combinations(sorted(members), 2))

    events.sort(key=lambda e: (e.firm_id, e.insider_id, e.date, e.direction.value))
    return PlantedDataset(events, planted, cliques, list(dual))


def heavy_vicinity_graph(
    n: int = 1000, attach: int = 2, factor: float = 10.0, ego_degree: int = 50, seed: int = 0
) -> tuple[CoTradeGraph, str]:
    """Preferential-attachment graph with one ego whose incident weights are inflated.

    Background weights are uniform on (0.8, 1]. The ego is the lowest-id node
    whose degree is closest to ``ego_degree``, so it sits mid-distribution in
    structure and stands out only through weight.
    """
    rng = np.random.default_rng(seed)
    base = nx.barabasi_albert_graph(n, attach, seed=int(rng.integers(2**31)))
    ego_idx = min(base.nodes, key=lambda v: (abs(base.degree(v) - ego_degree), v))
    name = lambda v: f"n{v:05d}"  # noqa: E731
    edges = {}
    for u, v in sorted(base.edges):
        w = float(rng.uniform(0.8, 1.0)) or 1.0
        if ego_idx in (u, v):
            w *= factor
        a, b = sorted((name(u), name(v)))
        edges[(a, b)] = Edge(a, b, w, "F", {"F": w})
    aff = {name(v): frozenset({"F"}) for v in base.nodes}
    return CoTradeGraph(dict(sorted(edges.items())), aff, population=n), name(ego_idx)
