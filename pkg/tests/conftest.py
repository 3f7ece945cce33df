"""Shared fixtures and helpers for the test suite."""
from __future__ import annotations

import numpy as np
import pytest

from pgal.graph import (KIND_ASSERTION, KIND_USER, NO_LABEL, SPLIT_NONE,
                        SPLIT_TEST, SPLIT_TRAIN, SPLIT_VAL, Graph)


def make_bipartite(n_users, n_asserts, edges, labels=None, splits=None,
                   weights=None, class_count=2, features=None):
    """Small bipartite graph: users u0..., assertions a0...; edges are
    (user_idx, assert_idx) pairs in each side's local numbering."""
    node_ids = [f"u{i}" for i in range(n_users)] + [f"a{i}" for i in range(n_asserts)]
    n = n_users + n_asserts
    kinds = np.array([KIND_USER] * n_users + [KIND_ASSERTION] * n_asserts, np.uint8)
    lab = np.full(n, NO_LABEL, np.int64)
    if labels:
        for a_local, y in labels.items():
            lab[n_users + a_local] = y
    spl = np.full(n, SPLIT_NONE, np.uint8)
    if splits:
        names = {"train": SPLIT_TRAIN, "val": SPLIT_VAL, "test": SPLIT_TEST}
        for a_local, s in splits.items():
            spl[n_users + a_local] = names[s]
    e = np.array([(u, n_users + a) for u, a in edges], np.int64).reshape(-1, 2)
    w = np.ones(e.shape[0]) if weights is None else np.asarray(weights, float)
    return Graph(node_ids, kinds, lab, spl, e, w, class_count, features)


def random_bipartite(rng, n_users=8, n_asserts=8, edge_prob=0.3,
                     labeled_frac=1.0, class_count=2):
    """Random bipartite graph with all assertions labeled and train-split."""
    edges = [(u, a) for u in range(n_users) for a in range(n_asserts)
             if rng.random() < edge_prob]
    if not edges:
        edges = [(0, 0)]
    labels = {a: int(rng.integers(class_count)) for a in range(n_asserts)
              if rng.random() < labeled_frac}
    splits = {a: "train" for a in labels}
    return make_bipartite(n_users, n_asserts, edges, labels, splits,
                          class_count=class_count)


def random_adjacency_lists(rng, n, edge_prob=0.3):
    """Random undirected simple graph (not necessarily bipartite) as
    adjacency lists plus CSR arrays, for kernel-level tests."""
    adj = [[] for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < edge_prob:
                adj[i].append(j)
                adj[j].append(i)
    indptr = np.zeros(n + 1, np.int64)
    indices = []
    for i in range(n):
        indptr[i + 1] = indptr[i] + len(adj[i])
        indices.extend(sorted(adj[i]))
    return adj, indptr, np.asarray(indices, np.int64)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        outcome = "PASS" if report.passed else "FAIL"
        print(f"\n[acceptance] {name}: {outcome}")
