"""Pure-numpy Brandes accumulation, level-synchronous BFS formulation.

Semantics match the compiled kernel exactly: ordered-pair dependency sums
over a CSR adjacency; callers halve for undirected betweenness. Used when
the compiled extension is unavailable (or forced via PGAL_KERNEL=python).
"""
from __future__ import annotations

import numpy as np


def brandes(indptr: np.ndarray, indices: np.ndarray) -> np.ndarray:
    indptr = np.asarray(indptr, dtype=np.int64)
    indices = np.asarray(indices, dtype=np.int64)
    n = indptr.size - 1
    bc = np.zeros(n, dtype=np.float64)
    if n == 0:
        return bc

    for s in range(n):
        dist = np.full(n, -1, dtype=np.int64)
        sigma = np.zeros(n, dtype=np.float64)
        dist[s] = 0
        sigma[s] = 1.0
        frontier = np.array([s], dtype=np.int64)
        depth = 0
        levels = []  # (srcs, dsts) edge arrays between depth d and d+1
        while frontier.size:
            starts = indptr[frontier]
            counts = indptr[frontier + 1] - starts
            total = int(counts.sum())
            if total == 0:
                break
            srcs = np.repeat(frontier, counts)
            offsets = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
            dsts = indices[np.repeat(starts, counts) + offsets]

            fresh = dsts[dist[dsts] < 0]
            if fresh.size:
                dist[np.unique(fresh)] = depth + 1
            on_level = dist[dsts] == depth + 1
            if not on_level.any():
                break
            ls, ld = srcs[on_level], dsts[on_level]
            sigma += np.bincount(ld, weights=sigma[ls], minlength=n)
            levels.append((ls, ld))
            frontier = np.unique(ld)
            depth += 1

        delta = np.zeros(n, dtype=np.float64)
        for ls, ld in reversed(levels):
            contrib = sigma[ls] / sigma[ld] * (1.0 + delta[ld])
            delta += np.bincount(ls, weights=contrib, minlength=n)
        bc += delta
        bc[s] -= delta[s]
    return bc
