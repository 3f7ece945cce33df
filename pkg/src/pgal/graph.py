"""Bipartite user/assertion graphs: in-memory form, file I/O, synthetic benchmarks.

The graph is undirected and bipartite: every edge joins a user node to an
assertion node. Assertions are the only nodes that carry labels and splits;
train-split labeled assertions form the pool a selection strategy may query.
Instances are immutable after construction and safe to share across threads.
"""
from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

KIND_USER = 0
KIND_ASSERTION = 1

SPLIT_NONE = 0
SPLIT_TRAIN = 1
SPLIT_VAL = 2
SPLIT_TEST = 3

NO_LABEL = -1

_KIND_NAMES = {"user": KIND_USER, "assertion": KIND_ASSERTION}
_KIND_STRINGS = {v: k for k, v in _KIND_NAMES.items()}
_SPLIT_NAMES = {"train": SPLIT_TRAIN, "val": SPLIT_VAL, "test": SPLIT_TEST}
_SPLIT_STRINGS = {SPLIT_TRAIN: "train", SPLIT_VAL: "val", SPLIT_TEST: "test", SPLIT_NONE: None}


class GraphFormatError(ValueError):
    """A nodes/edges file violates the on-disk format."""


def _canonical_edges(edges, weights):
    """Sort each edge as (low, high) and lexsort rows; weights follow."""
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    weights = np.asarray(weights, dtype=np.float64).reshape(-1)
    lo = edges.min(axis=1)
    hi = edges.max(axis=1)
    order = np.lexsort((hi, lo))
    stacked = np.column_stack([lo[order], hi[order]])
    return stacked, weights[order]


class Graph:
    """Immutable sparse undirected bipartite graph with node metadata.

    Parameters
    ----------
    node_ids : sequence of str
        External identifiers; position defines the internal node index.
    kinds : array of {KIND_USER, KIND_ASSERTION}
    labels : array of int
        Class index in [0, class_count) or NO_LABEL.
    splits : array of {SPLIT_NONE, SPLIT_TRAIN, SPLIT_VAL, SPLIT_TEST}
    edges : (m, 2) int array
        Undirected edge endpoints as node indices.
    weights : (m,) float array
        Positive edge weights, 1.0 for unweighted data.
    class_count : int
    features : (n, d) float array or None
        None means identity features (d == n).
    """

    __slots__ = ("node_ids", "kinds", "labels", "splits", "edges", "weights",
                 "class_count", "features", "_adj_cache", "_index")

    def __init__(self, node_ids, kinds, labels, splits, edges, weights,
                 class_count, features=None):
        self.node_ids = tuple(node_ids)
        n = len(self.node_ids)
        self.kinds = np.ascontiguousarray(kinds, dtype=np.uint8)
        self.labels = np.ascontiguousarray(labels, dtype=np.int64)
        self.splits = np.ascontiguousarray(splits, dtype=np.uint8)
        self.edges, self.weights = _canonical_edges(edges, weights)
        self.class_count = int(class_count)
        self.features = None if features is None else np.asarray(features, dtype=np.float64)
        self._adj_cache = {}
        self._index = None
        self._validate(n)

    def _validate(self, n):
        if self.kinds.shape != (n,) or self.labels.shape != (n,) or self.splits.shape != (n,):
            raise ValueError("node metadata arrays must all have length n")
        if self.class_count < 1:
            raise ValueError("class_count must be >= 1")
        if len(set(self.node_ids)) != n:
            raise ValueError("node ids must be unique")
        e, w = self.edges, self.weights
        if w.shape[0] != e.shape[0]:
            raise ValueError("weights must align with edges")
        if e.size:
            if e.min() < 0 or e.max() >= n:
                raise ValueError("edge references unknown node index")
            if (e[:, 0] == e[:, 1]).any():
                raise ValueError("self-loops are not allowed")
            if (self.kinds[e[:, 0]] == self.kinds[e[:, 1]]).any():
                raise ValueError("edges must connect a user to an assertion")
            dup = (np.diff(e[:, 0]) == 0) & (np.diff(e[:, 1]) == 0)
            if dup.any():
                raise ValueError("duplicate edges are not allowed")
            if (w <= 0).any():
                raise ValueError("edge weights must be positive")
        labeled = self.labels != NO_LABEL
        if labeled.any():
            bad = labeled & ((self.labels < 0) | (self.labels >= self.class_count))
            if bad.any():
                raise ValueError("label out of range [0, class_count)")
        if self.features is not None and self.features.shape[0] != n:
            raise ValueError("feature matrix must have one row per node")

    # -- basic shape ------------------------------------------------------

    @property
    def n(self):
        return len(self.node_ids)

    @property
    def edge_count(self):
        return self.edges.shape[0]

    @property
    def feature_dim(self):
        return self.n if self.features is None else self.features.shape[1]

    def index_of(self, node_id):
        if self._index is None:
            self._index = {nid: i for i, nid in enumerate(self.node_ids)}
        return self._index[node_id]

    # -- derived views ----------------------------------------------------

    def adjacency(self, weighted=False):
        """Symmetric CSR adjacency; cached per weighted flag."""
        key = bool(weighted)
        if key not in self._adj_cache:
            e = self.edges
            rows = np.concatenate([e[:, 0], e[:, 1]])
            cols = np.concatenate([e[:, 1], e[:, 0]])
            if weighted:
                data = np.concatenate([self.weights, self.weights])
            else:
                data = np.ones(2 * e.shape[0], dtype=np.float64)
            adj = sp.csr_matrix((data, (rows, cols)), shape=(self.n, self.n))
            self._adj_cache[key] = adj
        return self._adj_cache[key]

    def candidate_pool(self):
        """Indices of labeled, train-split assertion nodes (the queryable pool)."""
        mask = ((self.kinds == KIND_ASSERTION)
                & (self.splits == SPLIT_TRAIN)
                & (self.labels != NO_LABEL))
        return np.flatnonzero(mask)

    def test_assertions(self):
        mask = ((self.kinds == KIND_ASSERTION)
                & (self.splits == SPLIT_TEST)
                & (self.labels != NO_LABEL))
        return np.flatnonzero(mask)

    def with_edges(self, edges, weights):
        """New graph sharing this graph's node metadata but different edges."""
        return Graph(self.node_ids, self.kinds, self.labels, self.splits,
                     edges, weights, self.class_count, self.features)

    def metadata_digest(self):
        """Hash of everything except the edge set (nodes, kinds, labels, splits)."""
        h = hashlib.sha256()
        h.update("\x00".join(self.node_ids).encode())
        h.update(self.kinds.tobytes())
        h.update(self.labels.tobytes())
        h.update(self.splits.tobytes())
        h.update(str(self.class_count).encode())
        return h.hexdigest()

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        feats_equal = ((self.features is None and other.features is None)
                       or (self.features is not None and other.features is not None
                           and np.array_equal(self.features, other.features)))
        return (self.node_ids == other.node_ids
                and self.class_count == other.class_count
                and np.array_equal(self.kinds, other.kinds)
                and np.array_equal(self.labels, other.labels)
                and np.array_equal(self.splits, other.splits)
                and np.array_equal(self.edges, other.edges)
                and np.array_equal(self.weights, other.weights)
                and feats_equal)

    __hash__ = None

    def __repr__(self):
        return (f"Graph(n={self.n}, edges={self.edge_count}, "
                f"classes={self.class_count})")


def degree_vector(g: Graph) -> np.ndarray:
    """Per-node degree; weighted degree when edge weights are present."""
    deg = np.zeros(g.n, dtype=np.float64)
    if g.edge_count:
        np.add.at(deg, g.edges[:, 0], g.weights)
        np.add.at(deg, g.edges[:, 1], g.weights)
    return deg


# -- file I/O --------------------------------------------------------------


def load_graph(nodes_path, edges_path, class_count=None) -> Graph:
    """Load a graph from a JSON Lines nodes file and a CSV edges file.

    Nodes file: one record per line, {"id": str, "kind": "user"|"assertion",
    "label": int|null, "split": "train"|"val"|"test"|null}.
    Edges file: CSV with header "src,dst,weight"; weight optional (default 1.0).
    Duplicate edges are collapsed to the first occurrence; isolated nodes are
    retained.
    """
    nodes_path = Path(nodes_path)
    edges_path = Path(edges_path)

    node_ids, kinds, labels, splits = [], [], [], []
    index = {}
    with nodes_path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise GraphFormatError(f"{nodes_path}:{lineno}: invalid JSON ({exc})") from exc
            if not isinstance(rec, dict) or "id" not in rec or "kind" not in rec:
                raise GraphFormatError(f"{nodes_path}:{lineno}: node record needs 'id' and 'kind'")
            nid = rec["id"]
            if not isinstance(nid, str):
                raise GraphFormatError(f"{nodes_path}:{lineno}: node id must be a string")
            if nid in index:
                raise GraphFormatError(f"{nodes_path}:{lineno}: duplicate node id {nid!r}")
            kind = rec["kind"]
            if kind not in _KIND_NAMES:
                raise GraphFormatError(f"{nodes_path}:{lineno}: unknown kind {kind!r}")
            label = rec.get("label")
            if label is None:
                label = NO_LABEL
            elif isinstance(label, bool) or not isinstance(label, int):
                raise GraphFormatError(f"{nodes_path}:{lineno}: label must be an integer or null")
            elif label < 0:
                raise GraphFormatError(f"{nodes_path}:{lineno}: label out of range")
            elif class_count is not None and label >= class_count:
                raise GraphFormatError(f"{nodes_path}:{lineno}: label out of range")
            split = rec.get("split")
            if split is not None and split not in _SPLIT_NAMES:
                raise GraphFormatError(f"{nodes_path}:{lineno}: unknown split {split!r}")
            index[nid] = len(node_ids)
            node_ids.append(nid)
            kinds.append(_KIND_NAMES[kind])
            labels.append(label)
            splits.append(SPLIT_NONE if split is None else _SPLIT_NAMES[split])

    edges, weights = [], []
    seen = set()
    with edges_path.open() as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration as exc:
            raise GraphFormatError(f"{edges_path}:1: missing header") from exc
        if [c.strip() for c in header[:2]] != ["src", "dst"]:
            raise GraphFormatError(f"{edges_path}:1: header must start with 'src,dst'")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) not in (2, 3):
                raise GraphFormatError(f"{edges_path}:{lineno}: expected 2 or 3 fields")
            src, dst = row[0].strip(), row[1].strip()
            for ref in (src, dst):
                if ref not in index:
                    raise GraphFormatError(f"{edges_path}:{lineno}: unknown node {ref!r}")
            i, j = index[src], index[dst]
            if i == j:
                raise GraphFormatError(f"{edges_path}:{lineno}: self-loop on {src!r}")
            if kinds[i] == kinds[j]:
                kind = _KIND_STRINGS[kinds[i]]
                raise GraphFormatError(
                    f"{edges_path}:{lineno}: {kind}-{kind} edge ({src!r}, {dst!r})")
            if len(row) == 3 and row[2].strip():
                try:
                    w = float(row[2])
                except ValueError as exc:
                    raise GraphFormatError(f"{edges_path}:{lineno}: bad weight {row[2]!r}") from exc
            else:
                w = 1.0
            key = (min(i, j), max(i, j))
            if key in seen:
                continue
            seen.add(key)
            edges.append(key)
            weights.append(w)

    if class_count is None:
        present = [l for l in labels if l != NO_LABEL]
        class_count = max(present) + 1 if present else 2

    edges_arr = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    weights_arr = np.asarray(weights, dtype=np.float64)
    return Graph(node_ids, kinds, labels, splits, edges_arr, weights_arr, class_count)


def save_graph(g: Graph, nodes_path, edges_path) -> None:
    """Write a graph back to the load_graph file formats."""
    nodes_path = Path(nodes_path)
    edges_path = Path(edges_path)
    with nodes_path.open("w") as fh:
        for i, nid in enumerate(g.node_ids):
            label = None if g.labels[i] == NO_LABEL else int(g.labels[i])
            rec = {"id": nid,
                   "kind": _KIND_STRINGS[int(g.kinds[i])],
                   "label": label,
                   "split": _SPLIT_STRINGS[int(g.splits[i])]}
            fh.write(json.dumps(rec) + "\n")
    with edges_path.open("w") as fh:
        fh.write("src,dst,weight\n")
        for (i, j), w in zip(g.edges, g.weights):
            fh.write(f"{g.node_ids[i]},{g.node_ids[j]},{float(w)!r}\n")


# -- synthetic benchmark graphs ---------------------------------------------


@dataclass(frozen=True)
class SyntheticParams:
    """Parameters for the two-community polarized bipartite generator.

    Defaults give ~1300 nodes at average degree ~7.4, comparable to real
    user/assertion graphs; two-layer propagation from a 20-node budget needs
    roughly this density to reach most of the graph.
    """

    users_per_side: int = 400
    assertions_per_side: int = 250
    mean_posts_per_user: float = 6.0
    in_side_probability: float = 0.9
    seed: int = 42

    def __post_init__(self):
        if self.users_per_side < 1 or self.assertions_per_side < 1:
            raise ValueError("counts must be >= 1")
        if self.mean_posts_per_user <= 0:
            raise ValueError("mean_posts_per_user must be positive")
        if not 0.0 <= self.in_side_probability <= 1.0:
            raise ValueError("in_side_probability must be in [0, 1]")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")


def generate_synthetic(params: SyntheticParams) -> Graph:
    """Generate a polarized two-community bipartite graph.

    Users and assertions are split evenly into two sides. Each user posts to
    k ~ 1 + Poisson(mean_posts_per_user - 1) distinct assertions; every post
    targets the user's own side with probability in_side_probability and the
    other side otherwise. Assertion labels equal their side; assertion splits
    are 70/10/20 train/val/test by seeded shuffle. Deterministic per params.
    """
    rng = np.random.default_rng(np.random.SeedSequence(params.seed))
    ups = params.users_per_side
    aps = params.assertions_per_side
    n_users = 2 * ups
    n_assert = 2 * aps
    n = n_users + n_assert

    node_ids = ([f"u{i:05d}" for i in range(n_users)]
                + [f"a{i:05d}" for i in range(n_assert)])
    kinds = np.concatenate([np.full(n_users, KIND_USER, np.uint8),
                            np.full(n_assert, KIND_ASSERTION, np.uint8)])
    labels = np.full(n, NO_LABEL, np.int64)
    labels[n_users:n_users + aps] = 0
    labels[n_users + aps:] = 1

    splits = np.full(n, SPLIT_NONE, np.uint8)
    shuffled = rng.permutation(n_assert)
    n_train = int(0.7 * n_assert)
    n_val = int(0.1 * n_assert)
    assert_splits = np.full(n_assert, SPLIT_TEST, np.uint8)
    assert_splits[shuffled[:n_train]] = SPLIT_TRAIN
    assert_splits[shuffled[n_train:n_train + n_val]] = SPLIT_VAL
    splits[n_users:] = assert_splits

    post_counts = 1 + rng.poisson(params.mean_posts_per_user - 1.0, size=n_users)
    # side-pure probabilities make only one side reachable per user
    reachable = n_assert if 0.0 < params.in_side_probability < 1.0 else aps
    post_counts = np.minimum(post_counts, reachable)

    edges = []
    for u in range(n_users):
        side = 0 if u < ups else 1
        k = int(post_counts[u])
        targets = set()
        while len(targets) < k:
            need = k - len(targets)
            own = rng.random(need) < params.in_side_probability
            raw = rng.integers(0, aps, size=need)
            sides = np.where(own, side, 1 - side)
            for s, r in zip(sides, raw):
                targets.add(int(n_users + s * aps + r))
        for a in sorted(targets):
            edges.append((u, a))

    edges_arr = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    weights = np.ones(edges_arr.shape[0], dtype=np.float64)
    return Graph(node_ids, kinds, labels, splits, edges_arr, weights, class_count=2)
