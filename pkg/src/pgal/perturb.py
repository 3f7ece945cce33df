"""Structural perturbation operators and perturbed-graph sets.

Three operators produce variants of a base graph that differ only in their
edge set: Bernoulli edge dropping, uniform random edge addition (bipartite
pairs only), and random-walk path dropping. Node metadata is never touched,
so predictions and centralities on the variants stay node-aligned with the
base graph.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from pgal.graph import KIND_ASSERTION, KIND_USER, Graph

OP_EDGE_DROP = "edge-drop"
OP_EDGE_ADD = "edge-add"
OP_PATH_DROP = "path-drop"


@dataclass(frozen=True)
class PerturbationConfig:
    """Counts and strengths for one perturbed-graph set.

    edge_drop_count / edge_add_count / path_drop_count give the number of
    variants produced by each operator; their sum is the set size.
    """

    edge_drop_count: int = 4
    edge_add_count: int = 3
    path_drop_count: int = 3
    drop_probability: float = 0.1
    add_fraction: float = 0.1
    walk_starts_fraction: float = 0.05
    walk_length: int = 5
    master_seed: int = 0

    def __post_init__(self):
        if min(self.edge_drop_count, self.edge_add_count, self.path_drop_count) < 0:
            raise ValueError("operator counts must be nonnegative")
        if self.total < 1:
            raise ValueError("a perturbation set needs at least one graph")
        if not 0.0 <= self.drop_probability <= 1.0:
            raise ValueError("drop_probability must be in [0, 1]")
        if self.add_fraction < 0:
            raise ValueError("add_fraction must be nonnegative")
        if self.walk_starts_fraction < 0:
            raise ValueError("walk_starts_fraction must be nonnegative")
        if self.walk_length < 1:
            raise ValueError("walk_length must be >= 1")
        if self.master_seed < 0:
            raise ValueError("master_seed must be nonnegative")

    @property
    def total(self) -> int:
        return self.edge_drop_count + self.edge_add_count + self.path_drop_count


@dataclass(frozen=True)
class Provenance:
    operator: str
    seed_key: tuple


@dataclass(frozen=True)
class PerturbedGraphSet:
    """Ordered perturbed variants of one base graph plus their provenance."""

    base_digest: str
    graphs: tuple
    provenance: tuple

    def __len__(self):
        return len(self.graphs)

    def __iter__(self):
        return iter(self.graphs)


def drop_edges(g: Graph, p: float, stream_seed) -> Graph:
    """Keep each edge independently with probability 1 - p."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must be in [0, 1]")
    rng = np.random.default_rng(stream_seed)
    keep = rng.random(g.edge_count) >= p
    return g.with_edges(g.edges[keep], g.weights[keep])


def add_random_edges(g: Graph, k: int, stream_seed) -> Graph:
    """Add k new user-assertion edges, uniform without replacement over
    absent bipartite pairs; weight 1.0."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    if k == 0:
        return g.with_edges(g.edges, g.weights)
    users = np.flatnonzero(g.kinds == KIND_USER)
    asserts = np.flatnonzero(g.kinds == KIND_ASSERTION)
    nu, na = users.size, asserts.size
    total_pairs = nu * na

    user_pos = np.full(g.n, -1, np.int64)
    assert_pos = np.full(g.n, -1, np.int64)
    user_pos[users] = np.arange(nu)
    assert_pos[asserts] = np.arange(na)

    e = g.edges
    eu = np.where(g.kinds[e[:, 0]] == KIND_USER, e[:, 0], e[:, 1])
    ea = np.where(g.kinds[e[:, 0]] == KIND_ASSERTION, e[:, 0], e[:, 1])
    existing = np.sort(user_pos[eu] * na + assert_pos[ea])
    absent = total_pairs - existing.size
    if k > absent:
        raise ValueError(f"requested {k} new edges but only {absent} absent pairs exist")

    rng = np.random.default_rng(stream_seed)
    if total_pairs <= 200_000 or k * 4 >= absent:
        codes = np.setdiff1d(np.arange(total_pairs, dtype=np.int64), existing)
        chosen = rng.choice(codes, size=k, replace=False)
    else:
        picked = []
        taken = set()
        while len(picked) < k:
            draw = rng.integers(0, total_pairs, size=2 * (k - len(picked)))
            occupied = np.isin(draw, existing)
            for code, bad in zip(draw, occupied):
                if bad or code in taken:
                    continue
                taken.add(int(code))
                picked.append(int(code))
                if len(picked) == k:
                    break
        chosen = np.asarray(picked, dtype=np.int64)

    new_u = users[chosen // na]
    new_a = asserts[chosen % na]
    new_edges = np.concatenate([g.edges, np.column_stack([new_u, new_a])])
    new_weights = np.concatenate([g.weights, np.ones(k)])
    return g.with_edges(new_edges, new_weights)


def drop_paths(g: Graph, starts: int, walk_length: int, stream_seed) -> Graph:
    """Remove every edge traversed by `starts` independent random walks.

    Each walk begins at a uniformly chosen node and takes `walk_length`
    uniform-neighbor steps on the base graph; a walk starting at an isolated
    node halts immediately. All traversed edges are removed afterwards.
    """
    if walk_length < 1:
        raise ValueError("walk_length must be >= 1")
    if starts < 0:
        raise ValueError("starts must be nonnegative")
    if starts == 0 or g.edge_count == 0:
        return g.with_edges(g.edges, g.weights)

    adj = g.adjacency()
    indptr, indices = adj.indptr, adj.indices
    rng = np.random.default_rng(stream_seed)
    removed = set()
    for _ in range(starts):
        cur = int(rng.integers(0, g.n))
        for _ in range(walk_length):
            lo, hi = indptr[cur], indptr[cur + 1]
            if hi == lo:
                break
            nxt = int(indices[lo + rng.integers(0, hi - lo)])
            removed.add((min(cur, nxt), max(cur, nxt)))
            cur = nxt

    if not removed:
        return g.with_edges(g.edges, g.weights)
    codes = g.edges[:, 0] * g.n + g.edges[:, 1]
    removed_codes = np.fromiter((a * g.n + b for a, b in removed), dtype=np.int64)
    keep = ~np.isin(codes, removed_codes)
    return g.with_edges(g.edges[keep], g.weights[keep])


def make_perturbation_set(g: Graph, cfg: PerturbationConfig,
                          round_index: int = 0) -> PerturbedGraphSet:
    """Build the configured perturbed variants of g.

    Order: edge-drop graphs, then edge-add, then path-drop. Variant i draws
    from an independent stream seeded by (master_seed, round_index, i), so
    the set is reproducible and members may be generated concurrently.
    """
    add_k = int(round(cfg.add_fraction * g.edge_count))
    walk_starts = int(round(cfg.walk_starts_fraction * g.n))

    ops = ([OP_EDGE_DROP] * cfg.edge_drop_count
           + [OP_EDGE_ADD] * cfg.edge_add_count
           + [OP_PATH_DROP] * cfg.path_drop_count)
    graphs = []
    provenance = []
    for i, op in enumerate(ops):
        key = (cfg.master_seed, round_index, i)
        stream = np.random.SeedSequence(list(key))
        if op == OP_EDGE_DROP:
            gi = drop_edges(g, cfg.drop_probability, stream)
        elif op == OP_EDGE_ADD:
            gi = add_random_edges(g, add_k, stream)
        else:
            gi = drop_paths(g, walk_starts, cfg.walk_length, stream)
        graphs.append(gi)
        provenance.append(Provenance(op, key))
    return PerturbedGraphSet(g.metadata_digest(), tuple(graphs), tuple(provenance))
