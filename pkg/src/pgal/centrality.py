"""Centrality metrics on the base and perturbed graphs.

PageRank follows the recursive definition mu_i = damping * sum_j A_ij *
mu_j / deg(j) + (1 - damping) / n solved by power iteration, with dangling
nodes spreading their mass uniformly. Betweenness is Brandes' algorithm
over unordered node pairs on the unweighted graph, endpoints excluded,
unnormalized. Both treat the graph as unweighted; the degree metric uses
weighted degrees.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from pgal import _kernels
from pgal.graph import Graph, degree_vector

METRICS = ("pagerank", "betweenness", "degree")


@dataclass(frozen=True)
class CentralityConfig:
    metric: str = "pagerank"
    damping: float = 0.85
    tolerance: float = 1e-10
    max_iterations: int = 200

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}; expected one of {METRICS}")
        if not 0.0 < self.damping < 1.0:
            raise ValueError("damping must be in (0, 1)")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


class PageRankResult(NamedTuple):
    scores: np.ndarray
    iterations: int
    converged: bool


def pagerank_from_adjacency(adj: sp.spmatrix, damping: float = 0.85,
                            tolerance: float = 1e-10,
                            max_iterations: int = 200) -> PageRankResult:
    """Power iteration on an explicit (symmetric, nonnegative) adjacency."""
    n = adj.shape[0]
    if n == 0:
        return PageRankResult(np.zeros(0), 0, True)
    adj = sp.csr_matrix(adj, dtype=np.float64)
    deg = np.asarray(adj.sum(axis=1)).ravel()
    dangling = deg == 0.0
    inv_deg = np.zeros(n)
    inv_deg[~dangling] = 1.0 / deg[~dangling]

    x = np.full(n, 1.0 / n)
    base = (1.0 - damping) / n
    for it in range(1, max_iterations + 1):
        spread = adj.dot(x * inv_deg)
        spread += x[dangling].sum() / n
        new = damping * spread + base
        delta = np.abs(new - x).sum()
        x = new
        if delta < tolerance:
            return PageRankResult(x, it, True)
    return PageRankResult(x, max_iterations, False)


def pagerank(g: Graph, cfg: CentralityConfig | None = None) -> PageRankResult:
    cfg = cfg or CentralityConfig()
    return pagerank_from_adjacency(g.adjacency(weighted=False), cfg.damping,
                                   cfg.tolerance, cfg.max_iterations)


def betweenness_from_csr(indptr: np.ndarray, indices: np.ndarray) -> np.ndarray:
    """Unordered-pair betweenness from CSR arrays (endpoints excluded)."""
    raw = _kernels.brandes(np.ascontiguousarray(indptr, dtype=np.int64),
                           np.ascontiguousarray(indices, dtype=np.int64))
    return raw / 2.0


def betweenness(g: Graph) -> np.ndarray:
    adj = g.adjacency(weighted=False)
    return betweenness_from_csr(adj.indptr, adj.indices)


def centrality_scores(g: Graph, cfg: CentralityConfig) -> np.ndarray:
    """Dispatch on cfg.metric; returns one score per node."""
    if cfg.metric == "pagerank":
        return pagerank(g, cfg).scores
    if cfg.metric == "betweenness":
        return betweenness(g)
    return degree_vector(g)
