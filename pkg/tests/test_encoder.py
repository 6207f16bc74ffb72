import time

import numpy as np
import pytest

from submatch import autodiff as ad
from submatch.datasets import gen_er
from submatch.encoder import (
    Checkpoint,
    CheckpointError,
    EncoderConfig,
    build_input_features,
    encode,
    encode_all,
    encode_batch,
    expected_param_shapes,
    init_params,
    load_checkpoint,
    save_checkpoint,
    _as_tensors,
)
from submatch.graphs import AnchoredNeighborhood, GraphError, LabeledGraph, k_hop_neighborhood
from submatch.order import MarginConfig

SMALL = EncoderConfig(layers=3, hidden_dim=12, output_dim=8, label_alphabet_size=2)


def permuted_copy(nh, seed):
    """Anchor-preserving random relabeling of a neighborhood."""
    n = nh.graph.node_count
    rng = np.random.default_rng(seed)
    perm = np.concatenate([[0], 1 + rng.permutation(n - 1)]) if n > 1 else np.array([0])
    inv = np.argsort(perm)
    edges = [(int(inv[a]), int(inv[b])) for a, b in nh.graph.edges()]
    labels = [nh.graph.node_labels[int(perm[i])] for i in range(n)]
    g = LabeledGraph.from_edges(n, edges, labels, nh.graph.label_alphabet_size)
    return AnchoredNeighborhood(g, 0, nh.radius)


class TestConfig:
    def test_defaults_match_reported_best(self):
        cfg = EncoderConfig()
        assert cfg.layers == 8 and cfg.hidden_dim == 64 and cfg.output_dim == 64

    def test_invalid_rejected(self):
        with pytest.raises(ValueError):
            EncoderConfig(layers=0)
        with pytest.raises(ValueError):
            EncoderConfig(leaky_slope=1.5)
        with pytest.raises(ValueError):
            EncoderConfig(nonneg_output=False)


class TestInputFeatures:
    def test_two_node_edge_rows(self):
        cfg = EncoderConfig(
            layers=1, hidden_dim=4, output_dim=4,
            label_alphabet_size=2, use_structural_features=False,
        )
        g = LabeledGraph.from_edges(2, [(0, 1)], node_labels=[0, 1], label_alphabet_size=2)
        feats = build_input_features(AnchoredNeighborhood(g, 0, 1), cfg)
        assert np.array_equal(feats, [[1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])

    def test_anchor_indicator_sums_to_one(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            g = gen_er(10, 0.3, 2, seed=int(rng.integers(1 << 30)))
            u = int(rng.integers(10))
            nh = k_hop_neighborhood(g, u, 2)
            feats = build_input_features(nh, SMALL)
            assert feats[:, 0].sum() == 1.0
            assert feats[nh.anchor, 0] == 1.0

    def test_structural_columns(self, triangle):
        nh = AnchoredNeighborhood(triangle, 0, 1)
        cfg = EncoderConfig(layers=1, hidden_dim=4, output_dim=4, label_alphabet_size=1)
        feats = build_input_features(nh, cfg)
        # every triangle node: degree 2, clustering 1.0
        assert np.array_equal(feats[:, -2], [2.0, 2.0, 2.0])
        assert np.array_equal(feats[:, -1], [1.0, 1.0, 1.0])

    def test_label_out_of_alphabet_rejected(self):
        g = LabeledGraph.from_edges(2, [(0, 1)], node_labels=[0, 4], label_alphabet_size=5)
        cfg = EncoderConfig(layers=1, hidden_dim=4, output_dim=4, label_alphabet_size=2)
        with pytest.raises(GraphError):
            build_input_features(AnchoredNeighborhood(g, 0, 1), cfg)

    def test_row_permutation_equivariance(self):
        g = gen_er(8, 0.4, 2, seed=3)
        nh = k_hop_neighborhood(g, 0, 2)
        feats = build_input_features(nh, SMALL)
        copy = permuted_copy(nh, seed=1)
        feats2 = build_input_features(copy, SMALL)
        assert sorted(map(tuple, feats)) == sorted(map(tuple, feats2))


class TestEncode:
    def test_shape_and_nonnegativity(self):
        params = init_params(SMALL, seed=0)
        rng = np.random.default_rng(1)
        for _ in range(50):
            g = gen_er(int(rng.integers(3, 12)), 0.35, 2, seed=int(rng.integers(1 << 30)))
            nh = k_hop_neighborhood(g, int(rng.integers(g.node_count)), 2)
            z = encode(nh, params, SMALL)
            assert z.shape == (SMALL.output_dim,)
            assert z.min() >= 0.0
            assert np.all(np.isfinite(z))

    def test_isomorphic_inputs_identical_bits(self):
        params = init_params(SMALL, seed=2)
        rng = np.random.default_rng(7)
        for trial in range(15):
            g = gen_er(12, 0.3, 2, seed=int(rng.integers(1 << 30)))
            nh = k_hop_neighborhood(g, int(rng.integers(12)), 2)
            z = encode(nh, params, SMALL)
            z2 = encode(permuted_copy(nh, seed=trial), params, SMALL)
            assert np.array_equal(z, z2)

    def test_cycle_lengths_distinguished_via_anchor_feature(self):
        c3 = LabeledGraph.from_edges(3, [(0, 1), (1, 2), (0, 2)])
        c4 = LabeledGraph.from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
        cfg = EncoderConfig(
            layers=3, hidden_dim=12, output_dim=8,
            label_alphabet_size=1, use_structural_features=False,
        )
        for seed in range(20):
            params = init_params(cfg, seed=seed)
            za = encode(k_hop_neighborhood(c3, 0, 3), params, cfg)
            zb = encode(k_hop_neighborhood(c4, 0, 3), params, cfg)
            assert not np.array_equal(za, zb)

    def test_anchor_sensitivity_on_asymmetric_graph(self):
        # path with a pendant: moving the anchor changes the neighborhood role
        g = LabeledGraph.from_edges(4, [(0, 1), (1, 2), (1, 3)])
        params = init_params(SMALL, seed=4)
        z0 = encode(k_hop_neighborhood(g, 0, 2), params, SMALL)
        z1 = encode(k_hop_neighborhood(g, 1, 2), params, SMALL)
        assert not np.array_equal(z0, z1)

    def test_training_tape_route_records_gradients(self):
        params = init_params(SMALL, seed=0)
        g = gen_er(8, 0.4, 2, seed=9)
        nh = k_hop_neighborhood(g, 0, 2)
        tape = ad.Tape()
        out = encode(nh, params, SMALL, tape=tape)
        loss = ad.sum_all(tape, out)
        grads = ad.backward(tape, loss)
        assert "out.w" in grads and np.any(grads["out.w"] != 0)


class TestEncodeAll:
    def test_covers_every_node_and_matches_encode(self):
        g = gen_er(25, 0.2, 2, seed=11)
        params = init_params(SMALL, seed=0)
        embs = encode_all(g, 2, params, SMALL)
        assert len(embs) == g.node_count
        for u in (0, 7, 24):
            direct = encode(k_hop_neighborhood(g, u, 2), params, SMALL)
            assert np.array_equal(embs[u], direct)

    def test_worker_count_does_not_change_results(self):
        g = gen_er(30, 0.15, 2, seed=13)
        params = init_params(SMALL, seed=1)
        one = encode_all(g, 2, params, SMALL, workers=1)
        four = encode_all(g, 2, params, SMALL, workers=4, chunk_size=7)
        assert all(np.array_equal(one[u], four[u]) for u in one)

    @pytest.mark.slow
    def test_wall_time_linear_in_edges(self):
        # fixed average degree, growing node count: per-node neighborhoods
        # stay constant-size so total cost tracks the edge count
        params = init_params(SMALL, seed=0)
        sizes = [100, 200, 400]
        times, edge_counts = [], []
        for n in sizes:
            g = gen_er(n, 6.0 / n, 2, seed=17)
            start = time.perf_counter()
            encode_all(g, 2, params, SMALL)
            times.append(time.perf_counter() - start)
            edge_counts.append(g.edge_count)
        x = np.array(edge_counts, dtype=float)
        y = np.array(times)
        slope, intercept = np.polyfit(x, y, 1)
        pred = slope * x + intercept
        ss_res = float(((y - pred) ** 2).sum())
        ss_tot = float(((y - y.mean()) ** 2).sum())
        assert 1 - ss_res / ss_tot > 0.9


class TestOrderPreservationUnderIdentityAggregation:
    def test_matched_sums_stay_dominated(self):
        # query path 0-1-2 mapped into target triangle+tail by the injection
        # {0->0, 1->1, 2->2}: with identity transforms, nonnegative inputs and
        # sum aggregation, dominance at one layer implies dominance at the next
        query = LabeledGraph.from_edges(3, [(0, 1), (1, 2)])
        target = LabeledGraph.from_edges(4, [(0, 1), (1, 2), (0, 2), (2, 3)])
        mapping = {0: 0, 1: 1, 2: 2}
        rng = np.random.default_rng(0)
        hq = rng.uniform(0, 1, size=(3, 6))
        ht = np.zeros((4, 6))
        for q, t in mapping.items():
            ht[t] = hq[q] + rng.uniform(0, 0.5, size=6)  # dominance at layer k-1
        ht[3] = rng.uniform(0, 1, size=6)
        tape = ad.Tape(record=False)
        agg_q = ad.add(
            tape,
            ad.Tensor(hq),
            ad.row_sum_aggregate(tape, ad.Tensor(hq), [list(query.adjacency[v]) for v in range(3)]),
        ).value
        agg_t = ad.add(
            tape,
            ad.Tensor(ht),
            ad.row_sum_aggregate(tape, ad.Tensor(ht), [list(target.adjacency[v]) for v in range(4)]),
        ).value
        # matched anchors stay dominated at layer k
        assert np.all(agg_q[0] <= agg_t[0] + 1e-12)


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        params = init_params(SMALL, seed=5)
        ckpt = Checkpoint(
            config=SMALL, params=params,
            margin=MarginConfig(margin=1.0, threshold=0.3),
            decision_cutoff=0.4, radius=3,
        )
        path = tmp_path / "model.json"
        save_checkpoint(ckpt, path)
        loaded = load_checkpoint(path)
        assert loaded.config == SMALL
        assert loaded.margin.threshold == 0.3
        assert loaded.decision_cutoff == 0.4
        assert loaded.radius == 3
        assert all(np.array_equal(loaded.params[k], params[k]) for k in params)
        assert loaded.fingerprint() == ckpt.fingerprint()

    def test_shape_validation(self, tmp_path):
        params = init_params(SMALL, seed=5)
        params["out.w"] = params["out.w"][:, :-1]
        ckpt = Checkpoint(config=SMALL, params=params, margin=MarginConfig())
        path = tmp_path / "model.json"
        save_checkpoint(ckpt, path)
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_missing_param_rejected(self, tmp_path):
        params = init_params(SMALL, seed=5)
        del params["layer0.b1"]
        ckpt = Checkpoint(config=SMALL, params=params, margin=MarginConfig())
        path = tmp_path / "model.json"
        save_checkpoint(ckpt, path)
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_param_shapes_cover_edge_labels(self):
        cfg = EncoderConfig(
            layers=2, hidden_dim=4, output_dim=4, label_alphabet_size=1, edge_label_count=3
        )
        shapes = expected_param_shapes(cfg)
        assert "layer0.edge2" in shapes
        params = init_params(cfg, seed=0)
        g = LabeledGraph.from_edges(
            3, [(0, 1), (1, 2)], edge_labels={(0, 1): 0, (1, 2): 2}
        )
        z = encode(AnchoredNeighborhood(g, 0, 2), params, cfg)
        assert z.shape == (4,) and np.all(z >= 0)

    def test_edge_label_weights_affect_output(self):
        cfg = EncoderConfig(
            layers=2, hidden_dim=4, output_dim=4, label_alphabet_size=1, edge_label_count=2
        )
        params = init_params(cfg, seed=0)
        g1 = LabeledGraph.from_edges(3, [(0, 1), (1, 2)], edge_labels={(0, 1): 0, (1, 2): 0})
        g2 = LabeledGraph.from_edges(3, [(0, 1), (1, 2)], edge_labels={(0, 1): 0, (1, 2): 1})
        z1 = encode(AnchoredNeighborhood(g1, 0, 2), params, cfg)
        z2 = encode(AnchoredNeighborhood(g2, 0, 2), params, cfg)
        assert not np.array_equal(z1, z2)


def test_batch_matches_loop_within_float_noise():
    params = init_params(SMALL, seed=0)
    g = gen_er(15, 0.3, 2, seed=21)
    nbhds = [k_hop_neighborhood(g, u, 2) for u in range(6)]
    batch = encode_batch(ad.Tape(record=False), nbhds, _as_tensors(params), SMALL)
    singles = np.stack([encode(nh, params, SMALL) for nh in nbhds])
    assert np.allclose(batch.value, singles, rtol=1e-9, atol=1e-12)
