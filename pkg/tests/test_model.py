import numpy as np
import pytest

from qgnn import model, ttn
from qgnn.autodiff import finite_diff_oracle
from qgnn.errors import CheckpointError, ConfigurationError, DimensionError
from qgnn.graph import SubGraph, random_subgraph
from qgnn.trainer import AdamState

QEN = ttn.build_ttn(8)
QNON = ttn.build_ttn(12)


def zero_params(n_iterations=1):
    return model.ModelParams(np.zeros((1, 3)), np.zeros(1), np.zeros(14), np.zeros(22),
                             n_iterations)


def two_track_graph():
    feats = [[0.03, 0.40, 0.50], [0.07, 0.41, 0.52], [0.11, 0.42, 0.54],
             [0.03, 0.45, 0.48], [0.07, 0.46, 0.46], [0.11, 0.47, 0.44]]
    edges = [[0, 1], [1, 2], [3, 4], [4, 5], [0, 4], [3, 1], [1, 5]]
    labels = [1, 1, 1, 1, 0, 0, 0]
    return SubGraph(feats, edges, labels)


def check_gradient(g, params, rtol=1e-4, atol=1e-6):
    _, grad, _ = model.qgnn_gradient(g, params)
    fd = finite_diff_oracle(lambda v: model.qgnn_loss(g, params.with_vector(v)),
                            params.to_vector(), 1e-4)
    np.testing.assert_allclose(grad.to_vector(), fd, rtol=rtol, atol=atol)


def test_param_shapes():
    p = model.init_params(2, seed=0)
    assert p.qen.size == 14 and p.qnon.size == 22
    assert p.input_w.shape == (1, 3) and p.input_b.shape == (1,)
    assert np.all((p.qen >= 0) & (p.qen < 2 * np.pi))
    with pytest.raises(ConfigurationError):
        model.init_params(0)
    with pytest.raises(ConfigurationError):
        model.ModelParams(np.zeros((2, 3)), np.zeros(2), np.zeros(18), np.zeros(28), 1, d_hid=2)


def test_vector_round_trip():
    p = model.init_params(3, seed=4)
    q = p.with_vector(p.to_vector())
    for name in model.ModelParams.BLOCKS:
        np.testing.assert_array_equal(getattr(p, name), getattr(q, name))
    assert q.n_iterations == 3
    with pytest.raises(DimensionError):
        p.with_vector(np.zeros(5))


def test_input_network():
    x = np.random.default_rng(0).uniform(0, 1, (5, 3))
    states = model.input_network(x, zero_params())
    np.testing.assert_array_equal(states[:, 3], 0.5)
    np.testing.assert_array_equal(states[:, :3], x)
    p = zero_params()
    p.input_b[:] = 10
    assert np.all(model.input_network(x, p)[:, 3] > 0.9999)
    h = model.input_network(x, model.init_params(seed=1))[:, 3]
    assert np.all((h > 0) & (h < 1))
    with pytest.raises(DimensionError):
        model.input_network(np.zeros((3, 2)), p)


def test_edge_network_zero_case():
    states = np.zeros((3, 4))
    np.testing.assert_allclose(model.edge_network(states, [[0, 1], [1, 2]], np.zeros(14)), 0,
                               atol=1e-15)
    assert model.edge_network(states, np.zeros((0, 2)), np.zeros(14)).size == 0


def test_edge_network_is_per_edge():
    rng = np.random.default_rng(3)
    states = rng.uniform(0, 1, (5, 4))
    qen = rng.uniform(0, 6, 14)
    edges = np.array([[0, 1], [1, 2], [2, 3], [0, 4]])
    out = model.edge_network(states, edges, qen)
    perm = [2, 0, 3, 1]
    np.testing.assert_array_equal(model.edge_network(states, edges[perm], qen), out[perm])
    direct = ttn.ttn_forward(QEN, qen, np.concatenate([states[2], states[3]]), "statevector")
    assert out[2] == pytest.approx(direct, abs=1e-12)


def test_node_network_aggregation():
    states = np.array([[0.1, 0.1, 0.1, 0.2], [0.3, 0.3, 0.3, 0.6],
                       [0.5, 0.5, 0.5, 0.9], [0.7, 0.2, 0.4, 0.1]])
    edges = np.array([[0, 2], [1, 2]])
    m_in, m_out, _, _ = model.aggregate(states, edges, np.array([1.0, 1.0]))
    assert m_in[2, 3] == pytest.approx(0.4, abs=1e-7)
    np.testing.assert_allclose(m_out[0], states[2], atol=1e-7)
    np.testing.assert_array_equal(m_in[3], 0)
    np.testing.assert_array_equal(m_out[3], 0)
    m_in, _, _, _ = model.aggregate(states, edges[:1], np.array([1.0]))
    np.testing.assert_allclose(m_in[2], states[0], rtol=1e-7)

    qnon = np.random.default_rng(1).uniform(0, 6, 22)
    new = model.node_network(states, edges, np.array([1.0, 1.0]), qnon)
    np.testing.assert_array_equal(new[:, :3], states[:, :3])
    isolated = np.concatenate([np.zeros(8), states[3]])
    assert new[3, 3] == pytest.approx(ttn.ttn_forward(QNON, qnon, isolated, "statevector"),
                                      abs=1e-12)
    with pytest.raises(DimensionError):
        model.node_network(states, edges, np.array([1.0]), qnon)


def test_forward_matches_manual_composition():
    p = model.init_params(1, seed=8)
    g = SubGraph([[0.2, 0.3, 0.4], [0.5, 0.35, 0.45]], [[0, 1]], [1])
    h = 1 / (1 + np.exp(-(g.node_features @ p.input_w[0] + p.input_b[0])))
    s = np.column_stack([g.node_features, h])
    e = ttn.ttn_forward(QEN, p.qen, np.concatenate([s[0], s[1]]), "statevector")
    ratio = e / (e + 1e-8)
    h0 = ttn.ttn_forward(QNON, p.qnon, np.concatenate([np.zeros(4), s[1] * ratio, s[0]]),
                         "statevector")
    h1 = ttn.ttn_forward(QNON, p.qnon, np.concatenate([s[0] * ratio, np.zeros(4), s[1]]),
                         "statevector")
    s2 = np.column_stack([g.node_features, [h0, h1]])
    final = ttn.ttn_forward(QEN, p.qen, np.concatenate([s2[0], s2[1]]), "statevector")
    assert model.qgnn_forward(g, p)[0] == pytest.approx(final, abs=1e-12)


def test_forward_symmetry_with_zero_params():
    feats = [[0.1, 0.2, 0.3], [0.4, 0.5, 0.6], [0.1, 0.2, 0.3], [0.4, 0.5, 0.6]]
    g = SubGraph(feats, [[0, 1], [2, 3]], [1, 0])
    probs = model.qgnn_forward(g, zero_params(2))
    assert probs[0] == probs[1]


def test_forward_purity_and_empty_graph():
    g = random_subgraph(8, 10, seed=2)
    p = model.init_params(2, seed=2)
    before = p.to_vector().copy()
    np.testing.assert_array_equal(model.qgnn_forward(g, p), model.qgnn_forward(g, p))
    np.testing.assert_array_equal(p.to_vector(), before)
    assert model.qgnn_forward(SubGraph([[0.1, 0.1, 0.1]], []), p).size == 0


def test_gradient_single_edge():
    g = SubGraph([[0.2, 0.3, 0.4], [0.5, 0.35, 0.45]], [[0, 1]], [1])
    check_gradient(g, model.init_params(1, seed=11))


def test_gradient_two_track_graph():
    check_gradient(two_track_graph(), model.init_params(2, seed=12))


@pytest.mark.parametrize("backend", ["statevector"])
def test_gradient_with_statevector_backend(backend):
    g = random_subgraph(4, 4, seed=1)
    p = model.init_params(1, seed=1)
    tree = model.qgnn_gradient(g, p)
    full = model.qgnn_gradient(g, p, evaluator=model.Evaluator(backend))
    assert tree[0] == pytest.approx(full[0], abs=1e-12)
    np.testing.assert_allclose(tree[1].to_vector(), full[1].to_vector(), atol=1e-12)


def test_gradient_zero_at_symmetric_point():
    # every in-node has r' = 0, so each QEN call sees theta_0 only through
    # cos(theta_0): the loss is even in theta_0
    feats = [[0.0, 0.2, 0.3], [0.0, 0.6, 0.7], [0.5, 0.25, 0.35], [0.5, 0.55, 0.65]]
    g = SubGraph(feats, [[0, 2], [0, 3], [1, 2], [1, 3]], [1, 0, 0, 1])
    p = model.init_params(2, seed=5)
    p.qen[0] = 0.0
    _, grad, _ = model.qgnn_gradient(g, p)
    assert abs(grad.qen[0]) < 1e-8
    assert np.max(np.abs(grad.to_vector())) > 1e-4


def test_gradient_errors():
    p = model.init_params(1, seed=0)
    with pytest.raises(DimensionError):
        model.qgnn_gradient(SubGraph([[0.1, 0.1, 0.1]], []), p)
    g = random_subgraph(4, 3, seed=0)
    with pytest.raises(DimensionError):
        model.qgnn_gradient(g, p, labels=[1, 0])


def test_weight_sharing_accumulates_over_iterations():
    g = two_track_graph()
    p1 = model.init_params(1, seed=3)
    p3 = model.ModelParams(p1.input_w, p1.input_b, p1.qen, p1.qnon, 3)
    g1 = model.qgnn_gradient(g, p1)[1].qen
    g3 = model.qgnn_gradient(g, p3)[1].qen
    assert not np.allclose(g1, g3)
    check_gradient(g, p3)


def test_checkpoint_round_trip(tmp_path):
    p = model.init_params(3, seed=9)
    state = AdamState(7, np.random.default_rng(0).normal(size=40),
                      np.random.default_rng(1).uniform(size=40))
    path = tmp_path / "m.ckpt"
    model.save_checkpoint(path, p, state)
    q, s = model.load_checkpoint(path)
    assert q.n_iterations == 3 and q.d_hid == 1
    np.testing.assert_array_equal(q.to_vector(), p.to_vector())
    assert s.t == 7
    np.testing.assert_array_equal(s.m, state.m)
    np.testing.assert_array_equal(s.v, state.v)
    model.save_checkpoint(tmp_path / "again.ckpt", q, s)
    assert (tmp_path / "again.ckpt").read_bytes() == path.read_bytes()


def test_checkpoint_errors(tmp_path):
    bad = tmp_path / "bad.ckpt"
    bad.write_text("hello\n")
    with pytest.raises(CheckpointError):
        model.load_checkpoint(bad)
    bad.write_text("qgnn-checkpoint v1\nd_hid 1\nn_iterations 1\nqen 2 0.1 0.2\n")
    with pytest.raises(CheckpointError):
        model.load_checkpoint(bad)
    with pytest.raises(CheckpointError):
        model.load_checkpoint(tmp_path / "missing.ckpt")
