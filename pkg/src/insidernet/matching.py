"""Exact maximum-weight bipartite matching (Hungarian, shortest augmenting paths).

Weights are nonnegative integers; a zero weight means "not allowed". The
solver pads to a square matrix and runs the potential-based Hungarian method,
which finds a maximum-weight perfect matching on the padded problem. Padded and
zero-weight pairs are then dropped, leaving a maximum-weight matching of the
original graph.
"""

from __future__ import annotations

import numpy as np


def max_weight_matching(weights) -> tuple[list[tuple[int, int]], int]:
    """Return ``(pairs, total)`` for a maximum-weight matching of ``weights``.

    ``weights[i][j] > 0`` marks an eligible pair (row i, column j). Pairs are
    returned sorted by row index; only positive-weight pairs are reported.
    """
    w = np.asarray(weights, dtype=np.int64)
    if w.ndim != 2:
        raise ValueError("weights must be a 2-D matrix")
    if (w < 0).any():
        raise ValueError("weights must be nonnegative")
    n_rows, n_cols = w.shape
    if n_rows == 0 or n_cols == 0 or not w.any():
        return [], 0

    k = max(n_rows, n_cols)
    cost = np.zeros((k, k), dtype=np.int64)
    cost[:n_rows, :n_cols] = -w

    # 1-indexed potentials / assignment, e-maxx formulation
    inf = np.iinfo(np.int64).max // 4
    u = np.zeros(k + 1, dtype=np.int64)
    v = np.zeros(k + 1, dtype=np.int64)
    p = np.zeros(k + 1, dtype=np.int64)  # p[j] = row matched to column j
    way = np.zeros(k + 1, dtype=np.int64)
    for i in range(1, k + 1):
        p[0] = i
        j0 = 0
        minv = np.full(k + 1, inf, dtype=np.int64)
        used = np.zeros(k + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            cur = cost[i0 - 1] - u[i0] - v[1:]
            free = ~used[1:]
            better = free & (cur < minv[1:])
            minv[1:][better] = cur[better]
            way[1:][better] = j0
            cand = np.where(free, minv[1:], inf)
            j1 = int(np.argmin(cand)) + 1
            delta = cand[j1 - 1]
            u[p[used]] += delta
            v[used] -= delta
            minv[1:][free] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while True:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
            if j0 == 0:
                break

    pairs = []
    total = 0
    for j in range(1, k + 1):
        i = p[j] - 1
        col = j - 1
        if i < n_rows and col < n_cols and w[i, col] > 0:
            pairs.append((int(i), int(col)))
            total += int(w[i, col])
    pairs.sort()
    return pairs, total
