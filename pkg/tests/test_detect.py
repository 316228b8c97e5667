import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import complete_graph, random_graph
from gprlab.detect import (DetectionConfig, SweepResult, default_steps, detection_sweep, multi_community_sweep,
                           rank_vertices, recall, recall_vs_budget, recall_vs_steps, run_detection, sample_seeds,
                           sbm_detection_sweep, select_communities_m34, top_q)
from gprlab.diffusion import gpr, landing_probabilities, seed_distribution
from gprlab.graph import CommunitySet, Graph
from gprlab.randgraph import RngConfig, SbmSpec, mean_field, sample_sbm_nonisolated
from gprlab.weights import custom_weights, parse_scheme, ppr_weights


def two_cliques(n=5):
    iu = np.triu_indices(n, 1)
    u = np.r_[iu[0], iu[0] + n]
    v = np.r_[iu[1], iu[1] + n]
    return Graph.from_edges(2 * n, u, v)


def test_sample_seeds():
    rng = RngConfig(3)
    c = np.arange(10, 30)
    s = sample_seeds(c, 4, rng, 7)
    assert s.size == 4 and np.isin(s, c).all() and (np.diff(s) > 0).all()
    np.testing.assert_array_equal(s, sample_seeds(c, 4, rng, 7))
    np.testing.assert_array_equal(sample_seeds(c, 20, rng, 0), c)
    with pytest.raises(ValueError):
        sample_seeds(c, 21, rng, 0)


def test_single_seed_is_uniform():
    counts = np.bincount([sample_seeds(np.arange(5), 1, RngConfig(0), t)[0] for t in range(5000)], minlength=5)
    assert np.all(np.abs(counts - 1000) < 5 * np.sqrt(1000 * 0.8))


def test_top_q_examples():
    np.testing.assert_array_equal(top_q([0.5, 0.5, 0.2], 1), [0])
    np.testing.assert_array_equal(top_q([0.5, 0.5, 0.2], 3), [0, 1, 2])
    np.testing.assert_array_equal(top_q([0.9, 0.1, 0.0], 2, forced=[2]), [0, 2])
    np.testing.assert_array_equal(rank_vertices([0.1, 0.3, 0.3, 0.0], forced=[3]), [3, 1, 2, 0])
    with pytest.raises(ValueError):
        top_q([1.0, 2.0], 3)
    with pytest.raises(ValueError):
        top_q([1.0, 2.0, 3.0], 1, forced=[0, 1])


def test_recall_examples():
    assert recall([1, 2, 3], [1, 2, 3]) == 1.0
    assert recall([4, 5], [1, 2]) == 0.0
    assert recall([1, 2, 5, 6], [1, 2, 3, 4]) == 0.5
    with pytest.raises(ValueError):
        recall([1], [])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=30), st.floats(1e-3, 1e3), st.floats(-1e3, 1e3),
       st.integers(0, 2**32 - 1))
def test_top_q_affine_invariance(scores, a, b, seed):
    s = np.array(scores)
    rs = np.random.default_rng(seed)
    Q = int(rs.integers(1, s.size + 1))
    forced = rs.choice(s.size, size=min(Q, 1), replace=False)
    truth = rs.choice(s.size, size=max(1, s.size // 3), replace=False)
    t = a * s + b
    # only meaningful when the transform keeps distinct scores distinct in float arithmetic
    if np.array_equal(np.argsort(s, kind="stable"), np.argsort(t, kind="stable")) and \
            len(np.unique(s)) == len(np.unique(t)):
        assert recall(top_q(s, Q, forced), truth) == recall(top_q(t, Q, forced), truth)


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 30), st.integers(0, 2**32 - 1))
def test_recall_monotone_in_budget(n, seed):
    rs = np.random.default_rng(seed)
    s = rs.random(n)
    truth = rs.choice(n, size=max(1, n // 2), replace=False)
    vals = [recall(top_q(s, Q), truth) for Q in range(n + 1)]
    assert vals[0] == 0.0 and vals[-1] == 1.0
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_ppr_at_lambda_bar_matches_mean_gap_weights():
    # geometric weights lambda^k, as in the block-model discriminant, rank like PPR(lambda)
    spec = SbmSpec(100, .2, 100, .2, .05)
    lam = mean_field(spec).lambda2_bar
    g, _ = sample_sbm_nonisolated(spec, RngConfig(1), 0)
    lps = landing_probabilities(g, seed_distribution(g.n, [0]), 30)
    a = gpr(lps, ppr_weights(lam, 30), True, True)
    b = gpr(lps, lam ** np.arange(31), True, True)
    for Q in (10, 50, 100, 150):
        np.testing.assert_array_equal(top_q(a, Q, [0]), top_q(b, Q, [0]))


def test_config_validation():
    with pytest.raises(ValueError):
        DetectionConfig(trials=0)
    with pytest.raises(ValueError):
        DetectionConfig(seed_count=0)
    with pytest.raises(ValueError):
        DetectionConfig(seed_count=3, Q=2)
    DetectionConfig(seed_count=3, Q=2, include_seeds=False)


def test_delta_scheme_recovers_seed():
    g = complete_graph(8)
    cfg = DetectionConfig(scheme=parse_scheme("ppr:0.5"), K=0, Q=None, trials=5)
    c = np.arange(4)
    res = run_detection(g, c, cfg)
    assert (res.recalls >= 1 / 4).all()


def test_two_cliques_full_recall():
    g = two_cliques()
    for text in ("ppr:0.9", "hpr:3", "ipr-d:0.5", "ipr-u:0.9"):
        cfg = DetectionConfig(scheme=parse_scheme(text), K=10, trials=5)
        assert run_detection(g, np.arange(5), cfg).mean == 1.0


def test_budget_edges():
    g = two_cliques()
    c = np.arange(5)
    cfg = DetectionConfig(scheme=parse_scheme("ppr:0.9"), K=5, trials=3, include_seeds=False)
    res = recall_vs_budget(g, c, cfg, [0, 10])
    assert res[0].mean == 0.0 and res[1].mean == 1.0


def test_include_seeds_floor():
    spec = SbmSpec(50, .1, 50, .1, .05)
    g, _ = sample_sbm_nonisolated(spec, RngConfig(2), 0)
    cfg = DetectionConfig(scheme=parse_scheme("ppr:0.1"), K=1, Q=3, seed_count=3, trials=10)
    assert (run_detection(g, np.arange(50), cfg).recalls >= 3 / 50).all()


def test_sweep_is_paired_and_matches_single_runs():
    spec = SbmSpec(80, .15, 80, .15, .04)
    g, _ = sample_sbm_nonisolated(spec, RngConfig(5), 0)
    c = np.arange(80)
    schemes = [parse_scheme("ppr:0.9"), parse_scheme("ipr-d:0.5"), parse_scheme("ppr:0.9")]
    cfg = DetectionConfig(trials=12, rng=RngConfig(9))
    sw = detection_sweep(g, c, schemes, [0, 3, 10], [None, 40], cfg)
    assert sw.recalls.shape == (12, 3, 3, 2)
    np.testing.assert_array_equal(sw.recalls[:, 0], sw.recalls[:, 2])
    one = run_detection(g, c, DetectionConfig(scheme=schemes[1], K=3, Q=40, trials=12, rng=RngConfig(9)))
    np.testing.assert_array_equal(one.recalls, sw.recalls[:, 1, 1, 1])
    steps = recall_vs_steps(g, c, DetectionConfig(scheme=schemes[1], trials=12, rng=RngConfig(9)), [0, 3, 10])
    np.testing.assert_array_equal([r.mean for r in steps], sw.recalls[:, 1, :, 0].mean(axis=0))
    rows = sw.rows()
    assert len(rows) == 3 * 3 * 2
    assert set(rows[0]) == {"scheme", "K", "Q", "trials", "mean_recall", "std_recall"}
    assert rows[0]["Q"] == 80 and rows[1]["Q"] == 40


def test_k_zero_ranks_by_start_distribution():
    g = two_cliques()
    cfg = DetectionConfig(scheme=parse_scheme("ppr:0.5"), K=0, Q=5, trials=4, include_seeds=False)
    # x0 puts all mass on the seed; the rest tie and go by index
    res = run_detection(g, np.arange(5, 10), cfg)
    seeds = [sample_seeds(np.arange(5, 10), 1, cfg.rng, t)[0] for t in range(4)]
    expected = [recall(top_q(np.eye(10)[s], 5), np.arange(5, 10)) for s in seeds]
    np.testing.assert_array_equal(res.recalls, expected)


def test_thread_count_does_not_change_results():
    spec = SbmSpec(60, .2, 60, .2, .05)
    schemes = [parse_scheme("ipr-d:0.5"), parse_scheme("hpr:5")]
    a = sbm_detection_sweep(spec, schemes, [5, 20], [None], DetectionConfig(trials=6, threads=1))
    b = sbm_detection_sweep(spec, schemes, [5, 20], [None], DetectionConfig(trials=6, threads=2))
    np.testing.assert_array_equal(a.recalls, b.recalls)


def test_hops_subgraph_clamps_budget():
    path = Graph.from_edges(10, np.arange(9), np.arange(1, 10))
    c = np.arange(10)
    cfg = DetectionConfig(scheme=parse_scheme("ppr:0.5"), K=3, trials=3, hops=1)
    res = run_detection(path, c, cfg)
    # a 1-hop ball on a path has at most 3 vertices, all members
    assert (res.recalls <= 0.3).all() and (res.recalls >= 0.2).all()


def test_default_steps():
    path = Graph.from_edges(6, np.arange(5), np.arange(1, 6))
    cfg = DetectionConfig(trials=1, rng=RngConfig(0))
    seed = sample_seeds(np.array([0]), 1, cfg.rng, 0)
    assert default_steps(path, np.array([0]), cfg) == 4 * 5
    assert seed[0] == 0


def test_multi_community_uniform_weight():
    g = two_cliques()
    cs = CommunitySet([np.arange(5), np.arange(5, 10)])
    cfg = DetectionConfig(scheme=None, trials=4)
    sw = multi_community_sweep(g, cs, [parse_scheme("ppr:0.9")], [5], [None], cfg)
    assert sw.recalls.shape[0] == 8 and sw.rows()[0]["mean_recall"] == 1.0
    sizes_differ = CommunitySet([np.arange(5), np.arange(5, 9)])
    sw = multi_community_sweep(g, sizes_differ, [parse_scheme("ppr:0.9")], [5], [None], cfg)
    assert sw.Q_labels == ["auto"]


def test_sweep_concat_keeps_common_labels():
    a = SweepResult(["s"], [5], [10], np.zeros((2, 1, 1, 1)))
    b = SweepResult(["s"], [5], [10], np.ones((3, 1, 1, 1)))
    c = SweepResult.concat([a, b])
    assert c.Q_labels == [10] and c.recalls.shape[0] == 5


def test_select_communities():
    cs = CommunitySet([np.arange(10), np.arange(100), np.arange(1000)])
    assert select_communities_m34(cs).sizes().tolist() == [100]
    assert select_communities_m34(cs, window=(50, 1000)).sizes().tolist() == [100, 1000]
    assert select_communities_m34(cs, count=2).sizes().tolist() == [10, 100]
    single = CommunitySet([np.arange(7)])
    assert select_communities_m34(single).sizes().tolist() == [7]
    assert len(select_communities_m34(cs, window=(2000, 3000))) == 0
    with pytest.raises(ValueError):
        select_communities_m34(CommunitySet([]))


def test_custom_weights_in_sweep():
    g = two_cliques()
    cfg = DetectionConfig(scheme=None, trials=2)
    from gprlab.weights import SchemeSpec
    spec = SchemeSpec("custom", ("inline", (1.0, 1.0, 1.0)), None, "custom:inline")
    sw = detection_sweep(g, np.arange(5), [spec], [2], [None], cfg)
    assert sw.rows()[0]["mean_recall"] == 1.0
    assert custom_weights([1.0, 1.0, 1.0], 2).K == 2


def test_random_graph_detection_runs(rs):
    g = random_graph(rs, 40, 0.2)
    cfg = DetectionConfig(scheme=parse_scheme("ipr-u:0.9"), K=15, trials=3)
    res = run_detection(g, np.arange(10), cfg)
    assert res.trials == 3 and 0 < res.mean <= 1
