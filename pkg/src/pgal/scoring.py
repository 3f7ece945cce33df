"""Candidate scoring: prediction instability, centrality sensitivity,
percentile fusion, and the round-indexed mixing schedule.

Instability is the generalized Jensen-Shannon divergence of a candidate's
predicted label distributions across the perturbed graphs; sensitivity is
the population variance of its centrality across the same graphs. Both are
converted to strict-less percentile ranks within the candidate pool before
being mixed with a Beta(1, beta_t)-sampled weight gamma_t; beta_t decreases
linearly over rounds so the mix shifts from the structural signal to the
prediction-variance signal.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class DistributionTensor:
    """Per-candidate prediction stacks: dists[i, j] is the label distribution
    of candidate i on perturbed graph j."""

    candidate_ids: np.ndarray  # (k,) node indices
    dists: np.ndarray          # (k, a, c)

    def __post_init__(self):
        object.__setattr__(self, "candidate_ids",
                           np.ascontiguousarray(self.candidate_ids, dtype=np.int64))
        object.__setattr__(self, "dists",
                           np.ascontiguousarray(self.dists, dtype=np.float64))
        if self.dists.ndim != 3:
            raise ValueError("dists must have shape (candidates, graphs, classes)")
        if self.dists.shape[0] != self.candidate_ids.size:
            raise ValueError("one distribution stack per candidate required")
        if self.dists.size:
            sums = self.dists.sum(axis=2)
            if np.abs(sums - 1.0).max() > 1e-9:
                raise ValueError("every row must sum to 1 within 1e-9")


@dataclass(frozen=True)
class ScoreTable:
    """Scores for one selection round over the current candidate pool."""

    candidate_ids: np.ndarray
    instability: np.ndarray
    sensitivity: np.ndarray
    perc_instability: np.ndarray
    perc_sensitivity: np.ndarray
    combined: np.ndarray
    gamma: float
    beta: float


@dataclass(frozen=True)
class GammaSchedule:
    """Linear beta decrease from beta_start to beta_end over total_rounds."""

    beta_start: float = 9.0
    beta_end: float = 0.25
    total_rounds: int = 1

    def __post_init__(self):
        if not self.beta_start >= self.beta_end > 0:
            raise ValueError("need beta_start >= beta_end > 0")
        if self.total_rounds < 1:
            raise ValueError("total_rounds must be >= 1")


def entropy(p: np.ndarray) -> float:
    """Shannon entropy, natural log, with 0 * ln 0 = 0."""
    p = np.asarray(p, dtype=np.float64)
    nz = p > 0.0
    return float(-(p[nz] * np.log(p[nz])).sum())


def jsd(distributions) -> float:
    """Generalized Jensen-Shannon divergence of >= 1 distributions:
    entropy of the mean minus mean of the entropies."""
    arr = np.asarray(distributions, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1:
        raise ValueError("need a nonempty list of equal-length distributions")
    mean = arr.mean(axis=0)
    per_row = np.where(arr > 0.0, arr * np.log(np.where(arr > 0.0, arr, 1.0)), 0.0)
    return entropy(mean) + per_row.sum() / arr.shape[0]


def instability(tensor: DistributionTensor) -> np.ndarray:
    """Per-candidate JSD across the perturbed-graph axis."""
    d = tensor.dists
    if d.shape[0] == 0:
        return np.zeros(0)
    mean = d.mean(axis=1)                                    # (k, c)
    h_mean = -np.where(mean > 0, mean * np.log(np.where(mean > 0, mean, 1.0)), 0.0).sum(axis=1)
    h_rows = -np.where(d > 0, d * np.log(np.where(d > 0, d, 1.0)), 0.0).sum(axis=2)
    return h_mean - h_rows.mean(axis=1)


def sensitivity(centrality_per_graph, candidate_ids) -> np.ndarray:
    """Population variance of each candidate's centrality across graphs."""
    stacked = np.asarray(centrality_per_graph, dtype=np.float64)
    if stacked.ndim != 2 or stacked.shape[0] < 1:
        raise ValueError("need >= 1 centrality vectors over a common node set")
    ids = np.asarray(candidate_ids, dtype=np.int64)
    return stacked[:, ids].var(axis=0)


def percentile(scores: np.ndarray) -> np.ndarray:
    """Fraction of candidates with strictly smaller score; ties score 0 credit."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size == 0:
        raise ValueError("need at least one candidate")
    ranks = np.searchsorted(np.sort(scores), scores, side="left")
    return ranks / scores.size


def sample_gamma(beta: float, stream_seed, size: int | None = None):
    """Beta(1, beta) draw(s) by inverse CDF: gamma = 1 - u ** (1 / beta)."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    rng = np.random.default_rng(stream_seed)
    u = rng.random() if size is None else rng.random(size)
    return 1.0 - u ** (1.0 / beta)


def next_beta(sched: GammaSchedule, t: int) -> float:
    """beta at round t (1-indexed), linearly interpolated."""
    if not 1 <= t <= sched.total_rounds:
        raise ValueError(f"round {t} outside [1, {sched.total_rounds}]")
    step = (sched.beta_end - sched.beta_start) / max(sched.total_rounds - 1, 1)
    return sched.beta_start + (t - 1) * step


def build_score_table(candidate_ids, inst, sens, gamma, beta) -> ScoreTable:
    perc_i = percentile(inst)
    perc_s = percentile(sens)
    combined = gamma * perc_i + (1.0 - gamma) * perc_s
    return ScoreTable(np.asarray(candidate_ids, dtype=np.int64),
                      np.asarray(inst, dtype=np.float64),
                      np.asarray(sens, dtype=np.float64),
                      perc_i, perc_s, combined, float(gamma), float(beta))


def select_batch(table: ScoreTable, b: int) -> np.ndarray:
    """The b candidates with the largest combined score; ties broken by
    smaller node id. Equals the exhaustive size-b subset argmax because the
    batch objective is a sum of per-node scores."""
    k = table.candidate_ids.size
    if k == 0:
        raise ValueError("candidate pool is empty")
    if not 1 <= b <= k:
        raise ValueError(f"batch size {b} outside [1, {k}]")
    order = np.lexsort((table.candidate_ids, -table.combined))
    return table.candidate_ids[order[:b]]
