import json

import numpy as np
import pytest

from pgal import gcn, loop
from pgal.centrality import CentralityConfig
from pgal.graph import SPLIT_TEST, SyntheticParams, generate_synthetic
from pgal.perturb import PerturbationConfig
from tests.conftest import make_bipartite


@pytest.fixture(scope="module")
def small_graph():
    return generate_synthetic(SyntheticParams(users_per_side=40, assertions_per_side=30, seed=8))


def fast_cfg(**overrides):
    defaults = dict(
        initial_labeled=2,
        perturbation=PerturbationConfig(edge_drop_count=2, edge_add_count=1, path_drop_count=1),
        centrality=CentralityConfig(metric="pagerank"),
        gcn=gcn.GcnHyper(epochs=15),
    )
    defaults.update(overrides)
    return loop.LoopConfig(**defaults)


def decision_snapshot(labeled, trace):
    """Everything a rerun must reproduce bit-for-bit (timings excluded)."""
    rounds = []
    for rec in trace.rounds:
        table = None
        if rec.table is not None:
            table = {"ids": rec.table.candidate_ids.tolist(),
                     "inst": rec.table.instability.tolist(),
                     "sens": rec.table.sensitivity.tolist(),
                     "perc_inst": rec.table.perc_instability.tolist(),
                     "perc_sens": rec.table.perc_sensitivity.tolist(),
                     "combined": rec.table.combined.tolist()}
        rounds.append({"round": rec.round, "beta": rec.beta, "gamma": rec.gamma,
                       "queried": rec.queried, "table": table})
    return json.dumps({"labeled": sorted(labeled.items()),
                       "initial": trace.initial_labeled,
                       "rounds": rounds})


# -- oracle --------------------------------------------------------------------


def test_oracle_returns_stored_label(small_graph):
    node = int(small_graph.candidate_pool()[0])
    assert loop.oracle_label(small_graph, node) == int(small_graph.labels[node])


def test_oracle_rejects_user_node(small_graph):
    user = int(np.flatnonzero(small_graph.kinds == 0)[0])
    with pytest.raises(loop.OracleViolation, match="not an assertion"):
        loop.oracle_label(small_graph, user)


def test_oracle_rejects_test_split(small_graph):
    test_node = int(small_graph.test_assertions()[0])
    with pytest.raises(loop.OracleViolation, match="train split"):
        loop.oracle_label(small_graph, test_node)


def test_oracle_rejects_unlabeled():
    g = make_bipartite(1, 2, [(0, 0), (0, 1)], labels={0: 0},
                       splits={0: "train", 1: "train"})
    with pytest.raises(loop.OracleViolation, match="no ground-truth label"):
        loop.oracle_label(g, g.index_of("a1"))


# -- baselines -------------------------------------------------------------------


def test_baseline_random_whole_pool():
    pool = [3, 5, 9]
    assert sorted(loop.baseline_random(pool, 3, 0)) == pool
    assert loop.baseline_random(pool, 0, 0) == []


def test_baseline_random_reproducible():
    pool = list(range(50))
    assert loop.baseline_random(pool, 7, 42) == loop.baseline_random(pool, 7, 42)


def test_baseline_random_overdraw_errors():
    with pytest.raises(ValueError):
        loop.baseline_random([1, 2], 3, 0)


def test_baseline_centrality_star_center():
    g = make_bipartite(2, 3, [(0, 0), (0, 1), (0, 2), (1, 0)],
                       labels={0: 0, 1: 1, 2: 0},
                       splits={0: "train", 1: "train", 2: "train"})
    # assertion a0 (index 2) has degree 2, others 1
    pool = [2, 3, 4]
    assert loop.baseline_centrality(g, pool, 1, "degree") == [2]
    assert sorted(loop.baseline_centrality(g, pool, 3, "degree")) == pool


def test_baseline_centrality_tie_breaks_by_id():
    g = make_bipartite(3, 3, [(0, 0), (1, 1), (2, 2)],
                       labels={0: 0, 1: 1, 2: 0},
                       splits={0: "train", 1: "train", 2: "train"})
    # perfectly symmetric: all pool degrees equal -> id order
    assert loop.baseline_centrality(g, [3, 4, 5], 2, "pagerank") == [3, 4]


def test_baseline_entropy_prefers_uniform_prediction(small_graph):
    pool = [int(i) for i in small_graph.candidate_pool()]
    labeled = {pool[0]: int(small_graph.labels[pool[0]]),
               pool[1]: int(small_graph.labels[pool[1]])}
    model = gcn.train(small_graph, labeled, gcn.GcnHyper(epochs=30, init_seed=0))
    probs = gcn.predict_distributions(model, small_graph)
    ent = -(probs * np.log(probs)).sum(axis=1)
    rest = [p for p in pool if p not in labeled]
    picked = loop.baseline_entropy(model, small_graph, rest, 1)[0]
    assert ent[picked] == pytest.approx(max(ent[p] for p in rest))


def test_baseline_entropy_matches_independent_oracle(small_graph):
    from scipy.stats import entropy as scipy_entropy

    pool = [int(i) for i in small_graph.candidate_pool()]
    labeled = {pool[0]: 0, pool[1]: 1}
    model = gcn.train(small_graph, labeled, gcn.GcnHyper(epochs=20, init_seed=3))
    probs = gcn.predict_distributions(model, small_graph)
    rest = np.array([p for p in pool if p not in labeled])
    oracle_ent = scipy_entropy(probs[rest].T)  # natural log, independent route
    own_ent = -(probs[rest] * np.log(probs[rest])).sum(axis=1)
    np.testing.assert_allclose(own_ent, oracle_ent, atol=1e-12)
    for k in (1, 3, 5):
        expected = rest[np.lexsort((rest, -oracle_ent))[:k]]
        assert loop.baseline_entropy(model, small_graph, rest, k) == expected.tolist()


# -- full runs --------------------------------------------------------------------


@pytest.mark.parametrize("name", loop.STRATEGY_NAMES)
def test_run_reaches_exact_budget(small_graph, name):
    strategy = loop.strategy_from_name(name)
    labeled, trace = loop.run_active_learning(
        small_graph, strategy, budget=8, batch_size=3, cfg=fast_cfg(), master_seed=1)
    assert len(labeled) == 8
    assert len(trace.initial_labeled) == 2
    assert [len(r.queried) for r in trace.rounds] == [3, 3]  # 6 = 8 - 2


def test_budget_arithmetic_short_final_batch(small_graph):
    labeled, trace = loop.run_active_learning(
        small_graph, loop.strategy_from_name("random"), budget=20, batch_size=5,
        cfg=fast_cfg(), master_seed=3)
    assert [len(r.queried) for r in trace.rounds] == [5, 5, 5, 3]
    assert len(labeled) == 20


def test_run_exhausts_whole_pool(small_graph):
    pool = small_graph.candidate_pool()
    labeled, _ = loop.run_active_learning(
        small_graph, loop.strategy_from_name("random"), budget=int(pool.size),
        batch_size=7, cfg=fast_cfg(), master_seed=0)
    assert sorted(labeled) == sorted(int(i) for i in pool)


def test_run_rejects_budget_beyond_pool(small_graph):
    pool_size = small_graph.candidate_pool().size
    with pytest.raises(ValueError, match="exceeds candidate pool"):
        loop.run_active_learning(small_graph, loop.strategy_from_name("random"),
                                 budget=pool_size + 1, batch_size=5,
                                 cfg=fast_cfg(), master_seed=0)


def test_run_deterministic_per_seed(small_graph):
    strategy = loop.strategy_from_name("ours-pagerank")
    a = loop.run_active_learning(small_graph, strategy, 10, 4, fast_cfg(), master_seed=5)
    b = loop.run_active_learning(small_graph, strategy, 10, 4, fast_cfg(), master_seed=5)
    assert decision_snapshot(*a) == decision_snapshot(*b)
    c = loop.run_active_learning(small_graph, strategy, 10, 4, fast_cfg(), master_seed=6)
    assert decision_snapshot(*a) != decision_snapshot(*c)


def test_run_set_algebra_invariants(small_graph):
    strategy = loop.strategy_from_name("ours-betweenness")
    labeled, trace = loop.run_active_learning(
        small_graph, strategy, 12, 4, fast_cfg(), master_seed=2)
    seen = set(trace.initial_labeled)
    for rec in trace.rounds:
        batch = set(rec.queried)
        assert not batch & seen  # queries never repeat
        seen |= batch
    assert seen == set(labeled)
    # no test-split node ever labeled
    for node in labeled:
        assert small_graph.splits[node] != SPLIT_TEST
    # full budget spent
    assert sum(len(r.queried) for r in trace.rounds) == 12 - 2


def test_run_gamma_beta_schedule_recorded(small_graph):
    strategy = loop.strategy_from_name("ours-pagerank")
    _, trace = loop.run_active_learning(small_graph, strategy, 14, 4,
                                        fast_cfg(), master_seed=9)
    betas = [r.beta for r in trace.rounds]
    assert betas[0] == 9.0
    assert betas[-1] == 0.25
    assert all(b1 >= b2 for b1, b2 in zip(betas, betas[1:]))
    assert all(0.0 <= r.gamma <= 1.0 for r in trace.rounds)


def test_run_phase_timings_present(small_graph):
    strategy = loop.strategy_from_name("ours-pagerank")
    _, trace = loop.run_active_learning(small_graph, strategy, 6, 2,
                                        fast_cfg(), master_seed=0)
    for rec in trace.rounds:
        assert set(rec.phase_ms) == set(loop.PHASES)
        assert rec.phase_ms["train"] > 0
        assert rec.phase_ms["perturb"] > 0
    # baselines skip phases they do not use
    _, rtrace = loop.run_active_learning(small_graph, loop.strategy_from_name("random"),
                                         6, 2, fast_cfg(), master_seed=0)
    assert rtrace.rounds[0].phase_ms["train"] == 0.0


def test_raw_centrality_variant_uses_base_graph_percentile(small_graph):
    strategy = loop.Strategy("perturbation", metric="pagerank", raw_centrality=True)
    _, trace = loop.run_active_learning(small_graph, strategy, 6, 2,
                                        fast_cfg(), master_seed=4)
    from pgal.centrality import centrality_scores
    from pgal.scoring import percentile
    base = centrality_scores(small_graph, CentralityConfig(metric="pagerank"))
    for rec in trace.rounds:
        tbl = rec.table
        np.testing.assert_allclose(tbl.sensitivity, base[tbl.candidate_ids], atol=1e-12)
        np.testing.assert_allclose(tbl.perc_sensitivity,
                                   percentile(base[tbl.candidate_ids]), atol=1e-12)


def test_trace_jsonl_schema(tmp_path, small_graph):
    strategy = loop.strategy_from_name("ours-pagerank")
    _, trace = loop.run_active_learning(small_graph, strategy, 6, 2,
                                        fast_cfg(), master_seed=1)
    path = tmp_path / "trace.jsonl"
    loop.write_trace(trace, small_graph, path)
    lines = path.read_text().strip().split("\n")
    assert len(lines) == len(trace.rounds)
    for line in lines:
        rec = json.loads(line)
        assert set(rec) == {"round", "beta", "gamma", "queried", "phase_ms", "scores"}
        assert set(rec["phase_ms"]) == set(loop.PHASES)
        for s in rec["scores"]:
            assert set(s) == {"id", "inst", "sens", "perc_inst", "perc_sens", "combined"}
        assert all(isinstance(q, str) for q in rec["queried"])


def test_strategy_from_name_rejects_unknown():
    with pytest.raises(ValueError, match="unknown strategy"):
        loop.strategy_from_name("simulated-annealing")
    with pytest.raises(ValueError, match="unknown centrality"):
        loop.strategy_from_name("centrality-katz")
