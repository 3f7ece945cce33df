import json

import numpy as np
import pytest

from pgal.graph import (GraphFormatError, SyntheticParams, degree_vector,
                        generate_synthetic, load_graph, save_graph,
                        KIND_ASSERTION, SPLIT_TEST, SPLIT_TRAIN, SPLIT_VAL)
from tests.conftest import make_bipartite


def write_files(tmp_path, node_lines, edge_lines):
    nodes = tmp_path / "nodes.jsonl"
    edges = tmp_path / "edges.csv"
    nodes.write_text("\n".join(node_lines) + "\n")
    edges.write_text("\n".join(["src,dst,weight"] + edge_lines) + "\n")
    return nodes, edges


def node_line(nid, kind, label=None, split=None):
    return json.dumps({"id": nid, "kind": kind, "label": label, "split": split})


def test_load_graph_basic(tmp_path):
    nodes, edges = write_files(
        tmp_path,
        [node_line("u1", "user"), node_line("a1", "assertion", 0, "train"),
         node_line("a2", "assertion", 1, "test")],
        ["u1,a1,2.0", "a2,u1"])
    g = load_graph(nodes, edges)
    assert g.n == 3
    assert g.edge_count == 2
    assert g.class_count == 2
    assert g.weights.tolist() == [2.0, 1.0]
    assert g.node_ids[g.edges[0][0]] == "u1"


def test_load_graph_eurovision_shape(tmp_path):
    # 992 users, 537 assertions, 3081 distinct edges -> average degree ~4.03
    rng = np.random.default_rng(7)
    n_users, n_asserts, target = 992, 537, 3081
    pairs = set()
    while len(pairs) < target:
        pairs.add((int(rng.integers(n_users)), int(rng.integers(n_asserts))))
    node_lines = [node_line(f"u{i}", "user") for i in range(n_users)]
    node_lines += [node_line(f"a{i}", "assertion", int(rng.integers(2)), "train")
                   for i in range(n_asserts)]
    edge_lines = [f"u{u},a{a},1.0" for u, a in sorted(pairs)]
    nodes, edges = write_files(tmp_path, node_lines, edge_lines)
    g = load_graph(nodes, edges)
    assert g.n == 1529
    assert g.edge_count == 3081
    avg_degree = 2 * g.edge_count / g.n
    assert avg_degree == pytest.approx(4.03, abs=0.005)


def test_load_graph_empty_edges(tmp_path):
    nodes, edges = write_files(
        tmp_path, [node_line("u1", "user"), node_line("a1", "assertion")], [])
    g = load_graph(nodes, edges)
    assert g.n == 2
    assert g.edge_count == 0
    assert degree_vector(g).tolist() == [0.0, 0.0]


def test_load_graph_duplicate_edge_collapsed(tmp_path):
    nodes, edges = write_files(
        tmp_path,
        [node_line("u3", "user"), node_line("a7", "assertion")],
        ["u3,a7,1.0", "a7,u3,1.0", "u3,a7,5.0"])
    g = load_graph(nodes, edges)
    assert g.edge_count == 1
    assert g.weights.tolist() == [1.0]


@pytest.mark.parametrize("bad_edge,fragment", [
    ("u1,zz,1.0", "unknown node"),
    ("u1,u2,1.0", "user-user"),
    ("a1,a1,1.0", "self-loop"),
    ("u1,a1,notanumber", "bad weight"),
    ("u1", "expected 2 or 3 fields"),
])
def test_load_graph_bad_edges(tmp_path, bad_edge, fragment):
    nodes, edges = write_files(
        tmp_path,
        [node_line("u1", "user"), node_line("u2", "user"),
         node_line("a1", "assertion", 0, "train")],
        [bad_edge])
    with pytest.raises(GraphFormatError, match="edges.csv:2"):
        load_graph(nodes, edges)


def test_load_graph_reports_node_line_numbers(tmp_path):
    nodes, edges = write_files(
        tmp_path, [node_line("u1", "user"), "{broken json"], [])
    with pytest.raises(GraphFormatError, match="nodes.jsonl:2"):
        load_graph(nodes, edges)


def test_load_graph_label_out_of_range(tmp_path):
    nodes, edges = write_files(
        tmp_path, [node_line("a1", "assertion", -2, "train")], [])
    with pytest.raises(GraphFormatError, match="label out of range"):
        load_graph(nodes, edges)
    nodes2, edges2 = write_files(
        tmp_path, [node_line("a1", "assertion", 3, "train")], [])
    with pytest.raises(GraphFormatError, match="label out of range"):
        load_graph(nodes2, edges2, class_count=2)


def test_save_load_round_trip(tmp_path):
    g = generate_synthetic(SyntheticParams(users_per_side=20, assertions_per_side=15, seed=9))
    save_graph(g, tmp_path / "n.jsonl", tmp_path / "e.csv")
    g2 = load_graph(tmp_path / "n.jsonl", tmp_path / "e.csv")
    assert g == g2


def test_degree_vector_star():
    g = make_bipartite(1, 3, [(0, 0), (0, 1), (0, 2)],
                       labels={0: 0, 1: 1, 2: 0}, splits={0: "train", 1: "train", 2: "train"})
    deg = degree_vector(g)
    assert deg[0] == 3.0
    assert deg[1:].tolist() == [1.0, 1.0, 1.0]


def test_degree_vector_weighted():
    g = make_bipartite(1, 1, [(0, 0)], weights=[2.5])
    assert degree_vector(g).tolist() == [2.5, 2.5]


def test_bipartite_invariant_enforced():
    with pytest.raises(ValueError, match="user to an assertion"):
        make_bipartite(2, 1, [], ).with_edges(np.array([[0, 1]]), np.array([1.0]))


def test_synthetic_side_pure_when_in_side_probability_one():
    params = SyntheticParams(users_per_side=250, assertions_per_side=250,
                             mean_posts_per_user=4.0, in_side_probability=1.0, seed=11)
    g = generate_synthetic(params)
    n_users = 500
    for u, a in g.edges:
        u_side = 0 if u < 250 else 1
        a_side = 0 if a < n_users + 250 else 1
        assert u_side == a_side
    # side labels match assertion sides
    assert (g.labels[n_users:n_users + 250] == 0).all()
    assert (g.labels[n_users + 250:] == 1).all()


def test_synthetic_deterministic():
    params = SyntheticParams(250, 250, 4.0, 0.9, seed=7)
    assert generate_synthetic(params) == generate_synthetic(params)


def test_synthetic_post_count_capped_by_reachable_side():
    # side-pure posting can only ever reach the user's own side
    g = generate_synthetic(SyntheticParams(users_per_side=2, assertions_per_side=3,
                                           mean_posts_per_user=30.0,
                                           in_side_probability=1.0, seed=0))
    assert g.edge_count == 4 * 3  # every user saturates its own side
    deg = degree_vector(g)
    assert deg[:4].max() == 3.0


def test_synthetic_mean_user_degree():
    # Monte-Carlo check of the 1 + Poisson(mean - 1) posting construction
    g = generate_synthetic(SyntheticParams(400, 250, 4.0, 0.9, seed=7))
    deg = degree_vector(g)
    user_mean = deg[:800].mean()
    assert 3.6 <= user_mean <= 4.4


def test_synthetic_split_fractions():
    g = generate_synthetic(SyntheticParams(50, 200, 4.0, 0.9, seed=1))
    asserts = g.kinds == KIND_ASSERTION
    n_assert = asserts.sum()
    assert (g.splits[asserts] == SPLIT_TRAIN).sum() == int(0.7 * n_assert)
    assert (g.splits[asserts] == SPLIT_VAL).sum() == int(0.1 * n_assert)
    assert (g.splits[asserts] == SPLIT_TEST).sum() == n_assert - int(0.7 * n_assert) - int(0.1 * n_assert)


def test_candidate_pool_is_train_labeled_assertions():
    g = make_bipartite(2, 4, [(0, 0), (1, 1)],
                       labels={0: 0, 1: 1, 2: 0},
                       splits={0: "train", 1: "test", 2: "val"})
    pool = g.candidate_pool()
    assert pool.tolist() == [2]  # only a0 (index 2) is train+labeled
    assert g.test_assertions().tolist() == [3]


def test_metadata_digest_ignores_edges():
    g = make_bipartite(2, 2, [(0, 0), (1, 1)], labels={0: 0}, splits={0: "train"})
    g2 = g.with_edges(g.edges[:1], g.weights[:1])
    assert g.metadata_digest() == g2.metadata_digest()
    assert g != g2
