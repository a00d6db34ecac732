import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from gims import autodiff as ad, encoder
from gims.core import Graph
from gims.encoder import EncoderConfig, GraphInput, ModelWeights


def random_graph(rng, n, m):
    e = rng.integers(0, n, size=(m, 2))
    return Graph.from_edges(n, e[e[:, 0] != e[:, 1]])


def side(rng, n, dim, size=(64.0, 48.0)):
    g = random_graph(rng, n, 2 * n)
    pos = rng.uniform(0, 1, (n, 2)) * size
    return GraphInput(rng.normal(size=(n, dim)), g, pos, size)


def small_cfg(**kw):
    base = dict(dim=8, gnn_layers=2, heads=2, attention=("self", "cross", "self"), pos_hidden=(4, 6))
    base.update(kw)
    return EncoderConfig(**base)


def noisy_weights(cfg, seed):
    w = ModelWeights.random(cfg, seed)
    rng = np.random.default_rng(seed + 1)
    for k, v in w.params.items():
        if v.ndim == 1:
            w.params[k] = 0.1 * rng.normal(size=v.shape)
    return w


# configuration and weights

def test_config_validation():
    with pytest.raises(ValueError):
        EncoderConfig(dim=10, heads=4)
    with pytest.raises(ValueError):
        EncoderConfig(gnn_layers=-1)
    with pytest.raises(ValueError):
        EncoderConfig(attention=("self", "global"))


def test_default_parameter_count():
    shapes = encoder.parameter_shapes(EncoderConfig())
    assert len(shapes) == 3 + 6 + 8 * 8 + 1
    assert shapes["attn.7.mlp0.W"] == (256, 256)
    assert shapes["pos.0.W"] == (32, 2) and shapes["pos.2.W"] == (128, 64)


def test_weights_validation():
    cfg = small_cfg()
    w = ModelWeights.random(cfg, 0)
    bad = dict(w.params)
    bad["gnn.0.W"] = np.zeros((3, 3))
    with pytest.raises(ValueError):
        ModelWeights(cfg, bad)
    bad = dict(w.params)
    del bad["dustbin"]
    with pytest.raises(ValueError):
        ModelWeights(cfg, bad)
    bad = dict(w.params)
    bad["dustbin"] = np.array(np.nan)
    with pytest.raises(ValueError):
        ModelWeights(cfg, bad)


def test_random_is_seeded():
    a, b = ModelWeights.random(small_cfg(), 5), ModelWeights.random(small_cfg(), 5)
    assert all(np.array_equal(a.params[k], b.params[k]) for k in a.params)


# GraphSAGE

def test_graphsage_example():
    g = Graph.from_edges(2, [(0, 1)])
    h = np.array([[2.0, 0.0], [0.0, 2.0]])
    assert np.allclose(encoder.graphsage_layer(h, g, np.eye(2))[0], [1.0, 1.0])


def test_graphsage_isolated_vertex():
    W = np.array([[1.0, -2.0], [0.5, 1.0]])
    h = np.array([[1.0, 1.0]])
    assert np.allclose(encoder.graphsage_layer(h, Graph(1, np.zeros((0, 2))), W), np.maximum(W @ h[0], 0))


def test_graphsage_random_matches_loop():
    rng = np.random.default_rng(0)
    g = random_graph(rng, 10, 15)
    h, W = rng.normal(size=(10, 6)), rng.normal(size=(6, 6))
    ref = oracles.graphsage(h, 10, g.edges.tolist(), W)
    assert np.abs(encoder.graphsage_layer(h, g, W) - ref).max() < 1e-12


def test_mean_aggregator_rows_sum_to_one():
    g = random_graph(np.random.default_rng(1), 30, 50)
    M = encoder.mean_aggregator(g)
    assert np.allclose(np.asarray(M.sum(axis=1)).ravel(), 1.0)


def test_encode_gnn_examples():
    rng = np.random.default_rng(2)
    f = rng.normal(size=(5, 4))
    g = Graph.from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4)])
    assert np.array_equal(encoder.encode_gnn(f, g, [], 0), f)
    assert np.allclose(encoder.encode_gnn(np.ones((5, 4)), g, [np.eye(4)] * 3, 3), 1.0)
    Ws = [rng.normal(size=(4, 4)) for _ in range(3)]
    ref = f
    for W in Ws:
        ref = oracles.graphsage(ref, 5, g.edges.tolist(), W)
    assert np.allclose(encoder.encode_gnn(f, g, Ws, 3), ref, atol=1e-12)
    with pytest.raises(ValueError):
        encoder.encode_gnn(f, g, Ws, 2)


def test_gnn_locality():
    # a perturbation at vertex 0 of a path reaches exactly L hops
    n, L = 8, 3
    g = Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])
    rng = np.random.default_rng(3)
    Ws = [np.abs(rng.normal(size=(4, 4))) for _ in range(L)]
    f = np.abs(rng.normal(size=(n, 4)))
    f2 = f.copy()
    f2[0] += 1.0
    changed = np.abs(encoder.encode_gnn(f, g, Ws, L) - encoder.encode_gnn(f2, g, Ws, L)).max(axis=1) > 0
    assert changed.tolist() == [True] * (L + 1) + [False] * (n - L - 1)


# positional encoding

def test_encode_position_zero_weights():
    cfg = small_cfg()
    w = ModelWeights.identity(cfg)
    f = np.random.default_rng(4).normal(size=(3, 8))
    pos = np.array([[0, 0], [10, 5], [63, 47]], dtype=float)
    assert np.array_equal(encoder.encode_position(f, pos, (64, 48), w), f)
    b = np.arange(8.0)
    w.params["pos.2.b"] = b
    assert np.allclose(encoder.encode_position(f, pos, (64, 48), w), f + b)


def test_encode_position_random_matches_matrix_math():
    cfg = small_cfg()
    w = noisy_weights(cfg, 5)
    rng = np.random.default_rng(5)
    f, pos = rng.normal(size=(6, 8)), rng.uniform(0, 64, (6, 2))
    p = w.params
    x = pos * [2 / 64, 2 / 48] - 1
    x = np.maximum(x @ p["pos.0.W"].T + p["pos.0.b"], 0)
    x = np.maximum(x @ p["pos.1.W"].T + p["pos.1.b"], 0)
    ref = f + x @ p["pos.2.W"].T + p["pos.2.b"]
    assert np.abs(encoder.encode_position(f, pos, (64, 48), w) - ref).max() < 1e-12


def test_normalize_positions_range():
    assert encoder.normalize_positions([[0, 0], [64, 48]], (64, 48)).tolist() == [[-1, -1], [1, 1]]


# attention

def _attn_params(D, seed):
    rng = np.random.default_rng(seed)
    return {f"a.{k}": ad.Tensor(rng.normal(size=(D, D))) for k in ("Wq", "Wk", "Wv", "Wo")}


def test_identical_keys_give_mean_of_values():
    P = _attn_params(4, 0)
    P["a.Wo"] = ad.Tensor(np.eye(4))
    rng = np.random.default_rng(6)
    src = np.tile(rng.normal(size=(1, 4)), (5, 1))
    # identical source rows: logits constant per query, so the message is the mean value row
    msg = encoder.multihead_t(ad.Tensor(rng.normal(size=(3, 4))), ad.Tensor(src), P, "a.", 2).data
    v = src @ P["a.Wv"].data.T
    assert np.allclose(msg, np.tile(v.mean(axis=0), (3, 1)))


def test_single_key_message_is_its_value():
    P = _attn_params(4, 1)
    src = np.array([[0.3, -1.0, 2.0, 0.5]])
    want = src @ P["a.Wv"].data.T @ P["a.Wo"].data.T
    for seed in range(3):
        x = np.random.default_rng(seed).normal(size=(2, 4)) * 10
        assert np.allclose(encoder.multihead_t(ad.Tensor(x), ad.Tensor(src), P, "a.", 2).data, np.tile(want, (2, 1)))


def test_multihead_5x7_matches_dense_reference():
    rng = np.random.default_rng(7)
    D = 8
    P = _attn_params(D, 7)
    x, src = rng.normal(size=(5, D)), rng.normal(size=(7, D))
    got = encoder.multihead_t(ad.Tensor(x), ad.Tensor(src), P, "a.", 4).data
    ref = oracles.multihead(x, src, *(P[f"a.{k}"].data for k in ("Wq", "Wk", "Wv", "Wo")), 4)
    assert oracles.rel_err(got, ref) < 1e-10


def test_attention_stack_matches_reference():
    cfg = small_cfg()
    w = noisy_weights(cfg, 8)
    rng = np.random.default_rng(8)
    xa, xb = rng.normal(size=(5, 8)), rng.normal(size=(7, 8))
    ya, yb = encoder.attention_stack(xa, xb, w)
    ra, rb = xa, xb
    for i, kind in enumerate(cfg.attention):
        p = {k.split(".", 2)[2]: v for k, v in w.params.items() if k.startswith(f"attn.{i}.")}
        ra, rb = oracles.attention_layer(ra, rb, p, kind, cfg.heads)
    assert oracles.rel_err(ya, ra) < 1e-10 and oracles.rel_err(yb, rb) < 1e-10
    with pytest.raises(ValueError):
        encoder.attention_stack(xa, xb, w, layers=("self",) * 4)


def test_cross_layers_update_both_sides_from_old_values():
    cfg = small_cfg(attention=("cross",))
    w = noisy_weights(cfg, 9)
    rng = np.random.default_rng(9)
    xa, xb = rng.normal(size=(3, 8)), rng.normal(size=(4, 8))
    ya, yb = encoder.attention_stack(xa, xb, w)
    p = {k.split(".", 2)[2]: v for k, v in w.params.items() if k.startswith("attn.0.")}
    ra, rb = oracles.attention_layer(xa, xb, p, "cross", 2)
    assert np.allclose(ya, ra) and np.allclose(yb, rb)


# full encoder

def test_identity_weights_pass_descriptors_through():
    rng = np.random.default_rng(10)
    a, b = side(rng, 6, 128), side(rng, 4, 128)
    fa, fb = encoder.encode_pair(a, b, ModelWeights.identity())
    assert np.array_equal(fa, a.features) and np.array_equal(fb, b.features)


@settings(max_examples=15)
@given(st.integers(1, 8), st.integers(1, 8), st.integers(0, 2**31))
def test_swapping_sides_swaps_outputs(m, n, seed):
    rng = np.random.default_rng(seed)
    cfg = small_cfg()
    w = noisy_weights(cfg, seed % 1000)
    a, b = side(rng, m, 8), side(rng, n, 8)
    fa, fb = encoder.encode_pair(a, b, w)
    gb, ga = encoder.encode_pair(b, a, w)
    assert np.allclose(fa, ga, atol=1e-12) and np.allclose(fb, gb, atol=1e-12)


@settings(max_examples=15)
@given(st.integers(2, 8), st.integers(1, 6), st.integers(0, 2**31))
def test_permutation_equivariance(m, n, seed):
    rng = np.random.default_rng(seed)
    cfg = small_cfg()
    w = noisy_weights(cfg, seed % 1000)
    a, b = side(rng, m, 8), side(rng, n, 8)
    perm = rng.permutation(m)
    inv = np.argsort(perm)
    g2 = Graph.from_edges(m, inv[a.graph.edges]) if a.graph.num_edges else Graph(m, np.zeros((0, 2)))
    a2 = GraphInput(a.features[perm], g2, a.positions[perm], a.size)
    fa, fb = encoder.encode_pair(a, b, w)
    fa2, fb2 = encoder.encode_pair(a2, b, w)
    assert np.allclose(fa2, fa[perm], atol=1e-10) and np.allclose(fb2, fb, atol=1e-10)


def test_encode_pair_matches_composed_reference():
    rng = np.random.default_rng(11)
    cfg = small_cfg()
    w = noisy_weights(cfg, 11)
    a, b = side(rng, 5, 8), side(rng, 6, 8)
    fa, fb = encoder.encode_pair(a, b, w)
    outs = []
    for s in (a, b):
        h = s.features
        for W in w.gnn_matrices():
            h = oracles.graphsage(h, s.graph.n, s.graph.edges.tolist(), W)
        outs.append(encoder.encode_position(h, s.positions, s.size, w))
    ra, rb = outs
    for i, kind in enumerate(cfg.attention):
        p = {k.split(".", 2)[2]: v for k, v in w.params.items() if k.startswith(f"attn.{i}.")}
        ra, rb = oracles.attention_layer(ra, rb, p, kind, cfg.heads)
    assert oracles.rel_err(fa, ra) < 1e-10 and oracles.rel_err(fb, rb) < 1e-10


def test_graph_input_validation():
    with pytest.raises(ValueError):
        GraphInput(np.zeros((3, 4)), Graph(2, np.zeros((0, 2))), np.zeros((2, 2)), (10, 10))
