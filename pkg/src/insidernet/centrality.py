"""Closeness and eigenvector centrality on the co-trading graph."""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .network import CoTradeGraph, connected_components


class Measure(str, enum.Enum):
    CLOSENESS = "closeness"
    EIGENVECTOR = "eigenvector"


class ConvergenceError(RuntimeError):
    def __init__(self, residual: float, iterations: int):
        super().__init__(f"power iteration did not converge after {iterations} iterations (residual {residual:.3e})")
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class CentralityRanking:
    measure: Measure
    scores: dict[str, float]
    ranking: tuple[str, ...]
    eigenvalue: float | None = None
    residual: float | None = None
    iterations: int | None = None

    def top(self, k: int) -> list[tuple[str, float]]:
        return [(n, self.scores[n]) for n in self.ranking[:k]]


def _rank(scores: dict[str, float]) -> tuple[str, ...]:
    return tuple(sorted(scores, key=lambda n: (-scores[n], n)))


def _matrix(g: CoTradeGraph, lengths: str = "unit") -> tuple[list[str], csr_matrix]:
    nodes = g.nodes
    index = {n: i for i, n in enumerate(nodes)}
    rows, cols, vals = [], [], []
    for (u, v), e in g.edges.items():
        if lengths == "weight":
            val = e.weight
        elif lengths == "inverse_weight":
            val = 1.0 / e.weight
        else:
            val = 1.0
        rows += [index[u], index[v]]
        cols += [index[v], index[u]]
        vals += [val, val]
    n = len(nodes)
    return nodes, csr_matrix((vals, (rows, cols)), shape=(n, n))


def closeness(g: CoTradeGraph, distance: str = "unit") -> CentralityRanking:
    """Component-scaled closeness: ((n_c-1)/(N-1)) * ((n_c-1)/sum of distances).

    ``distance="unit"`` counts hops; ``"inverse_weight"`` uses 1/weight edge
    lengths so strong ties are short. Nodes in singleton components score 0.
    """
    if distance not in ("unit", "inverse_weight"):
        raise ValueError(f"unknown distance mode {distance!r}")
    if g.n_edges == 0:
        raise ValueError("closeness needs a nonempty graph")
    nodes, mat = _matrix(g, distance)
    big_n = len(nodes)
    dist = shortest_path(mat, method="D", directed=False, unweighted=(distance == "unit"))
    scores = {}
    for i, n in enumerate(nodes):
        row = dist[i]
        reach = np.isfinite(row)
        n_c = int(reach.sum())
        total = float(row[reach].sum())
        if n_c <= 1 or total == 0 or big_n <= 1:
            scores[n] = 0.0
        else:
            scores[n] = ((n_c - 1) / (big_n - 1)) * ((n_c - 1) / total)
    return CentralityRanking(Measure.CLOSENESS, scores, _rank(scores))


def eigenvector(g: CoTradeGraph, tol: float = 1e-10, max_iter: int = 1000) -> CentralityRanking:
    """Principal eigenvector of the weighted adjacency by power iteration.

    Iterates on ``A/s + I`` with ``s`` the largest weighted degree (same
    eigenvectors, spectrum shifted to be positive) so bipartite components do
    not oscillate. Converged when
    ``||A v - lam v|| <= tol * lam`` with ``lam`` the Rayleigh quotient.
    """
    if g.n_edges == 0:
        raise ValueError("eigenvector centrality needs a nonempty graph")
    nodes, a = _matrix(g, "weight")
    # rescale to unit max row sum so the iterates do not depend on weight units
    scale = float(abs(a).sum(axis=1).max())
    b = a / scale
    v = np.ones(len(nodes)) / math.sqrt(len(nodes))
    residual = math.inf
    mu = 0.0
    for it in range(1, max_iter + 1):
        w = b @ v + v
        v = w / np.linalg.norm(w)
        bv = b @ v
        mu = float(v @ bv)
        residual = float(np.linalg.norm(bv - mu * v))
        if residual <= tol * mu:
            break
    else:
        raise ConvergenceError(residual * scale, max_iter)
    v = np.abs(v)
    v /= np.linalg.norm(v)
    scores = {n: float(x) for n, x in zip(nodes, v)}
    return CentralityRanking(Measure.EIGENVECTOR, scores, _rank(scores), mu * scale, residual * scale, it)


def write_ranking_csv(g: CoTradeGraph, ranking: CentralityRanking, path: str | Path, top: int | None = None) -> None:
    comp_of = {n: c.index for c in connected_components(g) for n in c.nodes}
    ids = ranking.ranking if top is None else ranking.ranking[:top]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("rank", "insider_id", "score", "component_id"))
        for r, n in enumerate(ids, start=1):
            w.writerow((r, n, repr(ranking.scores[n]), comp_of[n]))
