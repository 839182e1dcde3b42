"""Co-trading network construction (within-firm pair scoring + edge filters)."""

from __future__ import annotations

import csv
import enum
import json
import logging
from collections import Counter, defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

from .ingest import InsiderFirmLog
from .similarity import DEFAULT_KERNEL, KernelConfig, assignment_similarity, combined_similarity

logger = logging.getLogger(__name__)


class Method(str, enum.Enum):
    BEST_MATCH = "best_match"
    ASSIGNMENT = "assignment"


@dataclass(frozen=True)
class EdgeFilterConfig:
    min_trades: int = 8
    min_overlap_weeks: int = 4
    score_threshold: float = 0.8
    require_tenure_overlap: bool = True
    method: Method = Method.BEST_MATCH
    kernel: KernelConfig = DEFAULT_KERNEL

    def __post_init__(self):
        if self.min_trades < 1:
            raise ValueError("min_trades must be >= 1")
        if not 0 <= self.score_threshold <= 1:
            raise ValueError("score_threshold must lie in [0, 1]")
        object.__setattr__(self, "method", Method(self.method))


@dataclass
class Edge:
    u: str
    v: str
    weight: float
    firm: str
    contexts: dict[str, float] = field(default_factory=dict)


@dataclass
class BuildSummary:
    firms: int = 0
    pairs_examined: int = 0
    pass_min_trades: int = 0
    pass_tenure: int = 0
    pass_overlap: int = 0
    pass_score: int = 0
    assignment_scores_above_one: int = 0

    def add(self, other: "BuildSummary") -> None:
        for k, v in asdict(other).items():
            setattr(self, k, getattr(self, k) + v)


@dataclass
class CoTradeGraph:
    """Weighted undirected insider graph; only insiders with >= 1 edge are nodes."""

    edges: dict[tuple[str, str], Edge]
    affiliations: dict[str, frozenset[str]]
    population: int = 0
    summary: BuildSummary = field(default_factory=BuildSummary)

    @property
    def nodes(self) -> list[str]:
        return sorted({n for e in self.edges for n in e})

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def adjacency(self) -> dict[str, dict[str, float]]:
        adj: dict[str, dict[str, float]] = {n: {} for n in self.nodes}
        for (u, v), e in sorted(self.edges.items()):
            adj[u][v] = e.weight
            adj[v][u] = e.weight
        return adj

    def edge_firms(self, node: str) -> set[str]:
        firms: set[str] = set()
        for (u, v), e in self.edges.items():
            if node in (u, v):
                firms.update(e.contexts)
        return firms

    def to_networkx(self):
        import networkx as nx

        g = nx.Graph()
        for n in self.nodes:
            g.add_node(n, firms=";".join(sorted(self.affiliations.get(n, ()))))
        for (u, v), e in sorted(self.edges.items()):
            g.add_edge(u, v, weight=e.weight, w=e.weight, firm=e.firm)
        return g


def _tenure_overlap(a: InsiderFirmLog, b: InsiderFirmLog) -> bool:
    return a.first_date <= b.last_date and b.first_date <= a.last_date


def _score_firm(job) -> tuple[list[tuple[str, str, str, float]], BuildSummary]:
    firm, logs, cfg = job
    summary = BuildSummary(firms=1)
    n = len(logs)
    summary.pairs_examined = n * (n - 1) // 2
    active = sorted((l for l in logs if l.n_trades >= cfg.min_trades), key=lambda l: l.insider_id)
    found = []
    for x, y in combinations(active, 2):
        summary.pass_min_trades += 1
        if cfg.require_tenure_overlap and not _tenure_overlap(x, y):
            continue
        summary.pass_tenure += 1
        if cfg.method is Method.ASSIGNMENT:
            res = assignment_similarity(x, y, cfg.kernel)
            summary.assignment_scores_above_one += int(res.exceeds_one)
        else:
            res = combined_similarity(x, y, cfg.kernel)
        if res.matched_weeks < cfg.min_overlap_weeks:
            continue
        summary.pass_overlap += 1
        if not res.combined > cfg.score_threshold:
            continue
        summary.pass_score += 1
        found.append((x.insider_id, y.insider_id, firm, res.combined))
    return found, summary


def _group_by_firm(logs: Iterable[InsiderFirmLog]) -> dict[str, list[InsiderFirmLog]]:
    by_firm: dict[str, dict[str, InsiderFirmLog]] = defaultdict(dict)
    for log in logs:
        if log.insider_id in by_firm[log.firm_id]:
            raise ValueError(f"duplicate log for ({log.insider_id}, {log.firm_id}); aggregate first")
        by_firm[log.firm_id][log.insider_id] = log
    return {f: [d[k] for k in sorted(d)] for f, d in sorted(by_firm.items())}


def build_graph(
    logs: Sequence[InsiderFirmLog],
    cfg: EdgeFilterConfig = EdgeFilterConfig(),
    threads: int = 1,
    population: int | None = None,
) -> CoTradeGraph:
    """Score every within-firm insider pair and keep those passing all filters.

    A pair sharing several firms is scored per firm; the graph keeps the
    strongest context as the edge weight and records every passing context.
    ``population`` is the insider count used for proportions (defaults to the
    number of distinct insiders in ``logs``).
    """
    by_firm = _group_by_firm(logs)
    jobs = [(f, ls, cfg) for f, ls in by_firm.items()]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_score_firm, jobs, chunksize=max(1, len(jobs) // (4 * threads))))
    else:
        results = [_score_firm(j) for j in jobs]

    summary = BuildSummary()
    edges: dict[tuple[str, str], Edge] = {}
    for found, s in results:
        summary.add(s)
        for u, v, firm, w in found:
            key = (u, v) if u < v else (v, u)
            e = edges.get(key)
            if e is None:
                edges[key] = Edge(key[0], key[1], w, firm, {firm: w})
                continue
            e.contexts[firm] = w
            if w > e.weight or (w == e.weight and firm < e.firm):
                e.weight, e.firm = w, firm

    affiliations: dict[str, set[str]] = defaultdict(set)
    for log in logs:
        affiliations[log.insider_id].add(log.firm_id)
    pop = population if population is not None else len(affiliations)
    logger.info(
        "build_graph: %d firms, %d pairs, %d edges", summary.firms, summary.pairs_examined, len(edges)
    )
    return CoTradeGraph(
        edges=dict(sorted(edges.items())),
        affiliations={k: frozenset(v) for k, v in sorted(affiliations.items())},
        population=pop,
        summary=summary,
    )


# ---------------------------------------------------------------------------
# structure


@dataclass(frozen=True)
class Component:
    index: int
    nodes: tuple[str, ...]
    firms: frozenset[str]

    @property
    def size(self) -> int:
        return len(self.nodes)


def connected_components(g: CoTradeGraph) -> list[Component]:
    """Components ordered by decreasing size, ties by smallest node id."""
    adj = g.adjacency()
    seen: set[str] = set()
    raw = []
    for start in adj:
        if start in seen:
            continue
        stack, comp = [start], []
        seen.add(start)
        while stack:
            n = stack.pop()
            comp.append(n)
            for m in adj[n]:
                if m not in seen:
                    seen.add(m)
                    stack.append(m)
        raw.append(tuple(sorted(comp)))
    raw.sort(key=lambda c: (-len(c), c[0]))
    node_comp = {n: i for i, c in enumerate(raw) for n in c}
    firms: dict[int, set[str]] = defaultdict(set)
    for (u, _), e in g.edges.items():
        firms[node_comp[u]].update(e.contexts)
    return [Component(i, c, frozenset(firms[i])) for i, c in enumerate(raw)]


def component_size_histogram(components: Sequence[Component]) -> dict[int, int]:
    return dict(sorted(Counter(c.size for c in components).items()))


def component_firm_histogram(components: Sequence[Component]) -> dict[int, int]:
    """Number of components by count of distinct firms whose ties form them."""
    return dict(sorted(Counter(len(c.firms) for c in components).items()))


def multi_firm_insiders(g: CoTradeGraph) -> list[str]:
    """Nodes whose incident edges come from at least two distinct firm contexts."""
    firms: dict[str, set[str]] = defaultdict(set)
    for (u, v), e in g.edges.items():
        firms[u].update(e.contexts)
        firms[v].update(e.contexts)
    return sorted(n for n, fs in firms.items() if len(fs) >= 2)


def density(g: CoTradeGraph) -> float:
    n = len(g)
    return 2 * g.n_edges / (n * (n - 1)) if n > 1 else 0.0


# ---------------------------------------------------------------------------
# export


def write_edge_csv(g: CoTradeGraph, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("u", "v", "weight", "firm"))
        for (u, v), e in g.edges.items():
            w.writerow((u, v, repr(e.weight), e.firm))


def read_edge_csv(path: str | Path) -> CoTradeGraph:
    """Reload an edge list; affiliations are reconstructed from edge firms only."""
    edges: dict[tuple[str, str], Edge] = {}
    aff: dict[str, set[str]] = defaultdict(set)
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            u, v = sorted((row["u"], row["v"]))
            w = float(row["weight"])
            edges[(u, v)] = Edge(u, v, w, row["firm"], {row["firm"]: w})
            aff[u].add(row["firm"])
            aff[v].add(row["firm"])
    return CoTradeGraph(
        edges=dict(sorted(edges.items())),
        affiliations={k: frozenset(v) for k, v in sorted(aff.items())},
        population=len(aff),
    )


def write_json_adjacency(g: CoTradeGraph, path: str | Path) -> None:
    payload = {
        "nodes": [{"id": n, "firms": sorted(g.affiliations.get(n, ()))} for n in g.nodes],
        "adjacency": {
            n: [{"id": m, "w": w} for m, w in sorted(nbrs.items())] for n, nbrs in g.adjacency().items()
        },
        "edges": [
            {"u": u, "v": v, "w": e.weight, "firm": e.firm, "contexts": dict(sorted(e.contexts.items()))}
            for (u, v), e in g.edges.items()
        ],
    }
    Path(path).write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")


def write_graphml(g: CoTradeGraph, path: str | Path) -> None:
    import networkx as nx

    nxg = g.to_networkx()
    for _, _, d in nxg.edges(data=True):
        d.pop("weight", None)
    nx.write_graphml(nxg, str(path))
