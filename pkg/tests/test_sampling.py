import numpy as np
import pytest

from submatch.datasets import gen_er
from submatch.exact import MatchBudget, is_subgraph_anchored
from submatch.graphs import LabeledGraph
from submatch.sampling import (
    SamplerConfig,
    mfinder_sample,
    random_bfs_sample,
    random_walk_sample,
    sample_negative_pair,
    sample_positive_pair,
    sample_neighborhood,
)

SAMPLERS = {
    "random_bfs": random_bfs_sample,
    "random_walk_restart": random_walk_sample,
    "mfinder_degree_weighted": mfinder_sample,
}


@pytest.fixture
def er20():
    return gen_er(20, 0.2, 1, seed=7)


class TestConfig:
    def test_bad_probability(self):
        with pytest.raises(ValueError):
            SamplerConfig(edge_keep_probability=0.0)

    def test_bad_bounds(self):
        with pytest.raises(ValueError):
            SamplerConfig(min_nodes=5, max_nodes=3)

    def test_bad_strategy(self):
        with pytest.raises(ValueError):
            SamplerConfig(strategy="dfs")


@pytest.mark.parametrize("name", sorted(SAMPLERS))
class TestAllSamplers:
    def test_keeps_whole_path_when_forced(self, name, path3):
        cfg = SamplerConfig(strategy=name, edge_keep_probability=1.0,
                            restart_probability=0.01, min_nodes=3, max_nodes=3)
        nh = SAMPLERS[name](path3, 0, cfg, np.random.default_rng(0))
        assert nh.node_count == 3

    def test_max_nodes_one(self, name, er20):
        cfg = SamplerConfig(strategy=name, min_nodes=1, max_nodes=1)
        nh = SAMPLERS[name](er20, 4, cfg, np.random.default_rng(0))
        assert nh.node_count == 1
        assert nh.anchor == 0

    def test_seed_determinism(self, name, er20):
        cfg = SamplerConfig(strategy=name, max_nodes=8)
        a = SAMPLERS[name](er20, 2, cfg, np.random.default_rng(42))
        b = SAMPLERS[name](er20, 2, cfg, np.random.default_rng(42))
        assert a.graph == b.graph and a.radius == b.radius

    def test_output_is_connected_anchored_subgraph(self, name, er20):
        cfg = SamplerConfig(strategy=name, max_nodes=9)
        rng = np.random.default_rng(1)
        for _ in range(25):
            u = int(rng.integers(er20.node_count))
            nh = SAMPLERS[name](er20, u, cfg, rng)
            assert nh.graph.is_connected()
            assert nh.node_count <= cfg.max_nodes
            # anchored subgraph of the source graph by construction
            from submatch.graphs import k_hop_neighborhood

            whole = k_hop_neighborhood(er20, u, er20.node_count)
            assert is_subgraph_anchored(nh, whole).is_true


class TestMFinderWeighting:
    # leaves carry distinct labels so the sampled 2-node neighborhood reveals
    # which frontier node was drawn

    def test_star_leaves_uniform(self):
        star = LabeledGraph.from_edges(
            6, [(0, i) for i in range(1, 6)], node_labels=[0, 1, 2, 3, 4, 5],
            label_alphabet_size=6,
        )
        cfg = SamplerConfig(strategy="mfinder_degree_weighted", min_nodes=2, max_nodes=2)
        rng = np.random.default_rng(0)
        counts = np.zeros(6)
        trials = 100_000
        for _ in range(trials):
            nh = mfinder_sample(star, 0, cfg, rng)
            counts[nh.graph.node_labels[1]] += 1
        freqs = counts[1:] / trials
        # all frontier degrees equal 1, so degree weighting means uniform
        assert np.all(np.abs(freqs - 0.2) < 0.02)

    def test_degree_proportional_on_broom(self):
        # hub 0 joins leaf 1 (degree 1) and path node 2 (degree 2 via 2-3)
        broom = LabeledGraph.from_edges(
            4, [(0, 1), (0, 2), (2, 3)], node_labels=[0, 1, 2, 3],
            label_alphabet_size=4,
        )
        cfg = SamplerConfig(strategy="mfinder_degree_weighted", min_nodes=2, max_nodes=2)
        rng = np.random.default_rng(3)
        picks = {1: 0, 2: 0}
        trials = 30_000
        for _ in range(trials):
            nh = mfinder_sample(broom, 0, cfg, rng)
            picks[nh.graph.node_labels[1]] += 1
        # frontier degrees are 1 and 2, so expect a 1:2 split
        assert abs(picks[1] / trials - 1 / 3) < 0.02
        assert abs(picks[2] / trials - 2 / 3) < 0.02


class TestPairs:
    def test_positive_pairs_pass_oracle(self, er20):
        cfg = SamplerConfig(max_nodes=8)
        rng = np.random.default_rng(0)
        budget = MatchBudget(max_states=100_000, wall_timeout=5.0)
        for _ in range(200):
            pair = sample_positive_pair(er20, 2, cfg, rng)
            assert pair.label is True and pair.kind is None
            assert is_subgraph_anchored(pair.query, pair.target, budget).is_true

    def test_query_may_equal_target(self):
        edge = LabeledGraph.from_edges(2, [(0, 1)])
        cfg = SamplerConfig(edge_keep_probability=1.0, min_nodes=1, max_nodes=2)
        pair = sample_positive_pair(edge, 1, cfg, np.random.default_rng(0))
        assert pair.label is True
        assert pair.query.node_count == pair.target.node_count == 2

    def test_single_edge_graph(self):
        edge = LabeledGraph.from_edges(2, [(0, 1)])
        cfg = SamplerConfig(max_nodes=4)
        pair = sample_positive_pair(edge, 1, cfg, np.random.default_rng(5))
        assert pair.query.node_count in (1, 2)
        assert pair.label is True

    @pytest.mark.parametrize("kind", ["random", "hard"])
    def test_negative_pairs_fail_oracle(self, er20, kind):
        cfg = SamplerConfig(max_nodes=8)
        rng = np.random.default_rng(1)
        budget = MatchBudget(max_states=100_000, wall_timeout=5.0)
        produced = 0
        for _ in range(100):
            pair = sample_negative_pair(er20, 2, kind, cfg, rng)
            if pair is None:
                continue
            produced += 1
            assert pair.label is False and pair.kind == kind
            out = is_subgraph_anchored(pair.query, pair.target, budget)
            assert not out.is_true
        assert produced >= 90

    def test_cross_alphabet_always_negative(self):
        a = gen_er(10, 0.3, 1, seed=1)
        # same topology domain but disjoint labels
        b_raw = gen_er(10, 0.3, 1, seed=2)
        b = LabeledGraph.from_edges(
            10, b_raw.edges(), node_labels=[1] * 10, label_alphabet_size=2
        )
        a = LabeledGraph.from_edges(
            10, a.edges(), node_labels=[0] * 10, label_alphabet_size=2
        )
        cfg = SamplerConfig(max_nodes=5)
        rng = np.random.default_rng(3)
        for _ in range(20):
            pair = sample_negative_pair(a, 2, "random", cfg, rng, query_source=b)
            assert pair is not None and pair.label is False

    def test_hard_negative_falls_back_on_saturated_query(self):
        # complete triangle with two labels: no chord to add, rewiring
        # disconnects, so the label swap is the only escape
        tri = LabeledGraph.from_edges(
            3, [(0, 1), (1, 2), (0, 2)], node_labels=[0, 0, 1], label_alphabet_size=2
        )
        cfg = SamplerConfig(edge_keep_probability=1.0, min_nodes=3, max_nodes=3)
        rng = np.random.default_rng(0)
        pair = sample_negative_pair(tri, 1, "hard", cfg, rng)
        assert pair is not None
        assert pair.label is False

    def test_retry_exhaustion_reports_none(self):
        # unlabeled 2-node graph: the lone feasible perturbation keeps the
        # query inside the target, so every retry fails
        edge = LabeledGraph.from_edges(2, [(0, 1)])
        cfg = SamplerConfig(edge_keep_probability=1.0, min_nodes=1, max_nodes=2)
        rng = np.random.default_rng(0)
        assert sample_negative_pair(edge, 1, "hard", cfg, rng, max_retries=5) is None

    def test_sample_neighborhood_dispatch(self, er20):
        for name in SAMPLERS:
            cfg = SamplerConfig(strategy=name, min_nodes=2, max_nodes=6)
            nh = sample_neighborhood(er20, 0, cfg, np.random.default_rng(0))
            assert nh.graph.is_connected()
