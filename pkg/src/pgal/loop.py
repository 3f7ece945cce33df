"""Round-based pool selection: train, perturb, score, query, update.

One run seeds the labeled set with a few random candidates (counted against
the budget), then repeats rounds of: train the GCN on the labeled set, build
a fresh perturbed-graph set, score the pool, pick a batch, and query the
simulated oracle, until exactly `budget` nodes are labeled. All randomness
derives from the run's master seed through named substreams, so runs are
reproducible and independent runs can execute concurrently.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from pgal import gcn, scoring
from pgal.centrality import CentralityConfig, centrality_scores
from pgal.graph import KIND_ASSERTION, NO_LABEL, SPLIT_TRAIN, Graph
from pgal.perturb import PerturbationConfig, make_perturbation_set
from pgal.scoring import DistributionTensor, GammaSchedule, ScoreTable

PHASES = ("train", "perturb", "centrality", "inference", "select")

# substream tags hung off the master seed
_TAG_SEED_SET = 0
_TAG_GCN = 1
_TAG_PERTURB = 2
_TAG_GAMMA = 3
_TAG_BASELINE = 4
_TAG_EVAL = 9


class OracleViolation(RuntimeError):
    """A query broke the labeling protocol (wrong kind, split, or no label)."""


def derive_seed(*key) -> int:
    """Stable 64-bit seed from a tuple of nonnegative ints."""
    state = np.random.SeedSequence(list(key)).generate_state(2, np.uint32)
    return int(state[0]) << 32 | int(state[1])


def derive_eval_seed(master_seed: int) -> int:
    """Seed for the post-selection evaluation model of a run."""
    return derive_seed(master_seed, _TAG_EVAL)


@dataclass(frozen=True)
class Strategy:
    """Selection strategy descriptor.

    kind: "perturbation" (instability + sensitivity), "random",
    "centrality" (top-k on the base graph), or "entropy".
    metric applies to perturbation/centrality kinds; raw_centrality replaces
    the sensitivity variance with the base graph's centrality (ablation).
    """

    kind: str
    metric: Optional[str] = None
    raw_centrality: bool = False

    @property
    def name(self) -> str:
        if self.kind == "perturbation":
            base = f"ours-{self.metric}"
            return base + ("-raw" if self.raw_centrality else "")
        if self.kind == "centrality":
            return f"centrality-{self.metric}"
        return self.kind


STRATEGY_NAMES = ("ours-pagerank", "ours-betweenness", "random",
                  "centrality-degree", "centrality-pagerank",
                  "centrality-betweenness", "entropy")


def strategy_from_name(name: str) -> Strategy:
    if name in ("ours-pagerank", "ours-betweenness"):
        return Strategy("perturbation", metric=name.split("-", 1)[1])
    if name.startswith("centrality-"):
        metric = name.split("-", 1)[1]
        if metric not in ("degree", "pagerank", "betweenness"):
            raise ValueError(f"unknown centrality metric {metric!r}")
        return Strategy("centrality", metric=metric)
    if name == "random":
        return Strategy("random")
    if name == "entropy":
        return Strategy("entropy")
    raise ValueError(f"unknown strategy {name!r}; expected one of {STRATEGY_NAMES}")


@dataclass(frozen=True)
class LoopConfig:
    initial_labeled: int = 2
    perturbation: PerturbationConfig = field(default_factory=PerturbationConfig)
    centrality: CentralityConfig = field(default_factory=CentralityConfig)
    gcn: gcn.GcnHyper = field(default_factory=gcn.GcnHyper)
    beta_start: float = 9.0
    beta_end: float = 0.25


@dataclass
class RoundRecord:
    round: int
    beta: Optional[float]
    gamma: Optional[float]
    queried: list
    phase_ms: dict
    table: Optional[ScoreTable]


@dataclass
class SelectionTrace:
    strategy: str
    master_seed: int
    initial_labeled: list
    rounds: list

    def queried_in_order(self) -> list:
        out = []
        for rec in self.rounds:
            out.extend(rec.queried)
        return out


@dataclass
class ALState:
    """Bookkeeping for one run; invariant: labeled and pool are disjoint and
    len(labeled) + remaining == budget at every round boundary."""

    labeled: dict            # node index -> class
    pool: list               # candidate node indices, ascending
    last_query: list
    initial_count: int
    budget: int
    batch_size: int
    round: int

    @property
    def remaining(self) -> int:
        return self.budget - len(self.labeled)


def oracle_label(g: Graph, node: int) -> int:
    """Simulated oracle: return the stored label of a queryable candidate."""
    if g.kinds[node] != KIND_ASSERTION:
        raise OracleViolation(f"node {g.node_ids[node]} is not an assertion")
    if g.splits[node] != SPLIT_TRAIN:
        raise OracleViolation(f"node {g.node_ids[node]} is outside the train split")
    if g.labels[node] == NO_LABEL:
        raise OracleViolation(f"node {g.node_ids[node]} has no ground-truth label")
    return int(g.labels[node])


def baseline_random(pool, k: int, stream_seed) -> list:
    pool = np.asarray(pool, dtype=np.int64)
    if k > pool.size:
        raise ValueError(f"cannot draw {k} nodes from a pool of {pool.size}")
    rng = np.random.default_rng(stream_seed)
    return sorted(int(i) for i in rng.choice(pool, size=k, replace=False))


def baseline_centrality(g: Graph, pool, k: int, metric: str,
                        precomputed=None) -> list:
    """Top-k pool nodes by base-graph centrality, smaller id on ties."""
    pool = np.asarray(pool, dtype=np.int64)
    scores = precomputed if precomputed is not None else centrality_scores(
        g, CentralityConfig(metric=metric))
    order = np.lexsort((pool, -scores[pool]))
    return [int(i) for i in pool[order[:min(k, pool.size)]]]


def baseline_entropy(model: gcn.Model, g: Graph, pool, k: int) -> list:
    """Top-k pool nodes by prediction entropy on the unperturbed graph."""
    pool = np.asarray(pool, dtype=np.int64)
    probs = gcn.predict_distributions(model, g)[pool]
    ent = -np.where(probs > 0, probs * np.log(np.where(probs > 0, probs, 1.0)), 0.0).sum(axis=1)
    order = np.lexsort((pool, -ent))
    return [int(i) for i in pool[order[:min(k, pool.size)]]]


def _timed(phase_ms, phase, fn, *args, **kwargs):
    start = time.perf_counter()
    out = fn(*args, **kwargs)
    phase_ms[phase] = phase_ms.get(phase, 0.0) + (time.perf_counter() - start) * 1e3
    return out


def run_active_learning(g: Graph, strategy: Strategy, budget: int, batch_size: int,
                        cfg: LoopConfig, master_seed: int):
    """Run one selection process to budget exhaustion.

    Returns (labeled, trace): the final node -> class mapping of size
    `budget` and the per-round selection trace.
    """
    pool_all = g.candidate_pool()
    if budget > pool_all.size:
        raise ValueError(f"budget {budget} exceeds candidate pool size {pool_all.size}")
    if batch_size < 1:
        raise ValueError("batch size must be >= 1")
    n_seed = min(cfg.initial_labeled, budget)

    seed_rng = np.random.default_rng(
        np.random.SeedSequence([master_seed, _TAG_SEED_SET]))
    seed_nodes = sorted(int(i) for i in seed_rng.choice(pool_all, size=n_seed, replace=False))
    labeled = {node: oracle_label(g, node) for node in seed_nodes}
    pool = [int(i) for i in pool_all if int(i) not in labeled]

    total_rounds = max(1, -(-(budget - n_seed) // batch_size))  # ceil division
    sched = GammaSchedule(cfg.beta_start, cfg.beta_end, total_rounds)
    state = ALState(labeled, pool, [], n_seed, budget, batch_size, 0)
    trace = SelectionTrace(strategy.name, master_seed, seed_nodes, [])

    base_centrality = None  # cache for the centrality baseline / raw ablation

    while state.remaining > 0:
        state.round += 1
        t = state.round
        k = min(batch_size, state.remaining)
        pool_arr = np.asarray(state.pool, dtype=np.int64)
        phase_ms = {p: 0.0 for p in PHASES}
        beta = gamma = None
        table = None

        needs_model = strategy.kind in ("perturbation", "entropy")
        model = None
        if needs_model:
            hyper = replace(cfg.gcn, init_seed=derive_seed(master_seed, _TAG_GCN, t))
            model = _timed(phase_ms, "train", gcn.train, g, state.labeled, hyper)

        if strategy.kind == "perturbation":
            pert_cfg = replace(cfg.perturbation,
                               master_seed=derive_seed(master_seed, _TAG_PERTURB))
            pert = _timed(phase_ms, "perturb", make_perturbation_set, g, pert_cfg, t)

            def _infer():
                return np.stack([gcn.predict_distributions(model, gi)[pool_arr]
                                 for gi in pert.graphs], axis=1)
            dists = _timed(phase_ms, "inference", _infer)
            tensor = DistributionTensor(pool_arr, dists)

            metric_cfg = replace(cfg.centrality, metric=strategy.metric)
            if strategy.raw_centrality:
                if base_centrality is None:
                    base_centrality = _timed(phase_ms, "centrality",
                                             centrality_scores, g, metric_cfg)
                sens = base_centrality[pool_arr]
            else:
                def _centralities():
                    return np.stack([centrality_scores(gi, metric_cfg)
                                     for gi in pert.graphs], axis=0)
                per_graph = _timed(phase_ms, "centrality", _centralities)
                sens = scoring.sensitivity(per_graph, pool_arr)

            def _select():
                inst = scoring.instability(tensor)
                beta_t = scoring.next_beta(sched, t)
                gamma_t = float(scoring.sample_gamma(
                    beta_t, np.random.SeedSequence([master_seed, _TAG_GAMMA, t])))
                tbl = scoring.build_score_table(pool_arr, inst, sens, gamma_t, beta_t)
                return tbl, [int(i) for i in scoring.select_batch(tbl, k)]
            (table, queried) = _timed(phase_ms, "select", _select)
            beta, gamma = table.beta, table.gamma
        elif strategy.kind == "random":
            queried = _timed(phase_ms, "select", baseline_random, state.pool, k,
                             np.random.SeedSequence([master_seed, _TAG_BASELINE, t]))
        elif strategy.kind == "centrality":
            if base_centrality is None:
                base_centrality = _timed(phase_ms, "centrality", centrality_scores,
                                         g, replace(cfg.centrality, metric=strategy.metric))
            queried = _timed(phase_ms, "select", baseline_centrality,
                             g, state.pool, k, strategy.metric, base_centrality)
        elif strategy.kind == "entropy":
            queried = _timed(phase_ms, "select", baseline_entropy,
                             model, g, state.pool, k)
        else:
            raise ValueError(f"unknown strategy kind {strategy.kind!r}")

        for node in queried:
            state.labeled[node] = oracle_label(g, node)
        state.pool = [i for i in state.pool if i not in set(queried)]
        state.last_query = list(queried)
        trace.rounds.append(RoundRecord(t, beta, gamma, list(queried), phase_ms, table))

    return dict(state.labeled), trace


def trace_round_dicts(trace: SelectionTrace, g: Graph) -> list:
    """Round records as JSON-ready dicts (external node ids)."""
    out = []
    for rec in trace.rounds:
        scores = []
        if rec.table is not None:
            tbl = rec.table
            for j, nid in enumerate(tbl.candidate_ids):
                scores.append({"id": g.node_ids[int(nid)],
                               "inst": float(tbl.instability[j]),
                               "sens": float(tbl.sensitivity[j]),
                               "perc_inst": float(tbl.perc_instability[j]),
                               "perc_sens": float(tbl.perc_sensitivity[j]),
                               "combined": float(tbl.combined[j])})
        out.append({"round": rec.round,
                    "beta": rec.beta,
                    "gamma": rec.gamma,
                    "queried": [g.node_ids[i] for i in rec.queried],
                    "phase_ms": dict(rec.phase_ms),
                    "scores": scores})
    return out


def write_trace(trace: SelectionTrace, g: Graph, path) -> None:
    """JSON Lines trace file, one record per round."""
    with open(path, "w") as fh:
        for rec in trace_round_dicts(trace, g):
            fh.write(json.dumps(rec) + "\n")
