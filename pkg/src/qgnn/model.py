"""Hybrid quantum graph network: input layer, edge network, node network.

Forward pass for a SubGraph with spatial features X (N x 3)::

    h = sigmoid(X w^T + b);  S = [X, h]
    repeat n_iterations:
        e = QEN([S_in, S_out])            per edge, 8 qubits
        m_in, m_out = weighted averages of neighbour states under e
        h = QNoN([m_in, m_out, S])        per node, 12 qubits
        S = [X, h]
    p = QEN([S_in, S_out])

QEN and QNoN parameters are shared by all iterations. The gradient is exact:
reverse-mode accumulation through the classical graph with parameter-shift
Jacobians for each circuit call.
"""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .autodiff import circuit_jacobian
from .errors import CheckpointError, ConfigurationError, DimensionError, NumericError
from .metrics import class_weights, weighted_bce, weighted_bce_grad
from .ttn import build_ttn, init_ttn_params, sample_scores, ttn_scores

D_SPATIAL = 3
AGG_EPS = 1e-8
CHECKPOINT_MAGIC = "qgnn-checkpoint v1"


@dataclass
class ModelParams:
    input_w: np.ndarray  # (d_hid, 3)
    input_b: np.ndarray  # (d_hid,)
    qen: np.ndarray
    qnon: np.ndarray
    n_iterations: int = 1
    d_hid: int = 1

    BLOCKS = ("input_w", "input_b", "qen", "qnon")

    def __post_init__(self):
        if self.d_hid != 1:
            raise ConfigurationError("only a hidden dimension of 1 is supported")
        if self.n_iterations < 1:
            raise ConfigurationError("n_iterations must be at least 1")
        self.input_w = np.asarray(self.input_w, dtype=np.float64).reshape(self.d_hid, D_SPATIAL)
        self.input_b = np.asarray(self.input_b, dtype=np.float64).reshape(self.d_hid)
        self.qen = np.asarray(self.qen, dtype=np.float64).ravel()
        self.qnon = np.asarray(self.qnon, dtype=np.float64).ravel()
        width = D_SPATIAL + self.d_hid
        if self.qen.size != 2 * (2 * width - 1) or self.qnon.size != 2 * (3 * width - 1):
            raise DimensionError(
                f"expected {2 * (2 * width - 1)} QEN and {2 * (3 * width - 1)} QNoN "
                f"angles, got {self.qen.size} and {self.qnon.size}")

    @property
    def width(self) -> int:
        return D_SPATIAL + self.d_hid

    def blocks(self):
        return [getattr(self, name) for name in self.BLOCKS]

    def to_vector(self) -> np.ndarray:
        return np.concatenate([b.ravel() for b in self.blocks()])

    def with_vector(self, vec) -> "ModelParams":
        vec = np.asarray(vec, dtype=np.float64)
        expected = sum(b.size for b in self.blocks())
        if vec.shape != (expected,):
            raise DimensionError(f"parameter vector has shape {vec.shape}, expected ({expected},)")
        out, pos = [], 0
        for block in self.blocks():
            out.append(vec[pos:pos + block.size].reshape(block.shape))
            pos += block.size
        return ModelParams(*out, n_iterations=self.n_iterations, d_hid=self.d_hid)


def init_params(n_iterations=1, seed=0, d_hid=1) -> ModelParams:
    """Circuit angles uniform in [0, 2pi); input weights N(0, 1/3), bias 0."""
    rng = np.random.default_rng(seed)
    width = D_SPATIAL + d_hid
    input_w = rng.normal(0.0, 1.0 / np.sqrt(D_SPATIAL), (d_hid, D_SPATIAL))
    qen = init_ttn_params(build_ttn(2 * width), rng)
    qnon = init_ttn_params(build_ttn(3 * width), rng)
    return ModelParams(input_w, np.zeros(d_hid), qen, qnon, n_iterations, d_hid)


@dataclass
class Evaluator:
    """Circuit evaluation settings shared by forward and gradient passes."""
    backend: str = "tree"
    threads: int = 1
    shots: int = 0
    rng: np.random.Generator | None = field(default=None, repr=False)

    def scores(self, topology, params, features):
        out = ttn_scores(topology, params, features, backend=self.backend, threads=self.threads)
        if self.shots:
            out = sample_scores(out, self.shots, self.rng or np.random.default_rng(0))
        return out

    def jacobian(self, topology, params, features):
        return circuit_jacobian(topology, params, features, backend=self.backend,
                                threads=self.threads)


EXACT = Evaluator()


def _topologies(params):
    return build_ttn(2 * params.width), build_ttn(3 * params.width)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def input_network(node_features, params):
    x = np.asarray(node_features, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != D_SPATIAL:
        raise DimensionError(f"node features must be (N, 3), got {x.shape}")
    h = _sigmoid(x @ params.input_w.T + params.input_b)
    return np.concatenate([x, h], axis=1)


def edge_inputs(states, edges):
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    return np.concatenate([states[edges[:, 0]], states[edges[:, 1]]], axis=1)


def edge_network(states, edges, qen, evaluator=EXACT):
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if len(edges) == 0:
        return np.zeros(0)
    topo = build_ttn(2 * states.shape[1])
    return evaluator.scores(topo, qen, edge_inputs(states, edges))


def aggregate(states, edges, weights):
    """Weighted averages of incoming / outgoing neighbour states per node.

    Returns (m_in, m_out, denom_in, denom_out); denominators include AGG_EPS.
    Sums use np.add.at, which accumulates in edge order.
    """
    n, width = states.shape
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    src, dst = edges[:, 0], edges[:, 1]
    w = np.asarray(weights, dtype=np.float64)
    num_in = np.zeros((n, width))
    num_out = np.zeros((n, width))
    den_in = np.full(n, AGG_EPS)
    den_out = np.full(n, AGG_EPS)
    np.add.at(num_in, dst, w[:, None] * states[src])
    np.add.at(den_in, dst, w)
    np.add.at(num_out, src, w[:, None] * states[dst])
    np.add.at(den_out, src, w)
    return num_in / den_in[:, None], num_out / den_out[:, None], den_in, den_out


def node_inputs(states, edges, weights):
    m_in, m_out, _, _ = aggregate(states, edges, weights)
    # clip float round-off so the encoder domain check holds
    return np.clip(np.concatenate([m_in, m_out, states], axis=1), 0.0, 1.0)


def node_network(states, edges, weights, qnon, evaluator=EXACT):
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (len(np.asarray(edges).reshape(-1, 2)),):
        raise DimensionError("edge weights must align with edges")
    topo = build_ttn(3 * states.shape[1])
    h = evaluator.scores(topo, qnon, node_inputs(states, edges, weights))
    return np.concatenate([states[:, :D_SPATIAL], h[:, None]], axis=1)


def qgnn_forward(subgraph, params, evaluator=EXACT):
    """Final edge probabilities for every edge of ``subgraph``."""
    if subgraph.n_edges == 0:
        return np.zeros(0)
    states = input_network(subgraph.node_features, params)
    for _ in range(params.n_iterations):
        e = edge_network(states, subgraph.edges, params.qen, evaluator)
        states = node_network(states, subgraph.edges, e, params.qnon, evaluator)
    return edge_network(states, subgraph.edges, params.qen, evaluator)


def _check_finite(name, arr):
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"non-finite values in {name}")


def qgnn_gradient(subgraph, params, labels=None, weights=None, clamp_eps=1e-7,
                  evaluator=EXACT):
    """Weighted BCE loss and its exact gradient as a ModelParams-shaped object.

    Returns (loss, grad, probs).
    """
    if subgraph.n_edges == 0:
        raise DimensionError("gradient needs a graph with at least one edge")
    labels = subgraph.labels if labels is None else np.asarray(labels)
    if labels is None or len(labels) != subgraph.n_edges:
        raise DimensionError("labels must align with edges")
    weights = class_weights(labels) if weights is None else weights
    topo_e, topo_n = _topologies(params)
    edges = subgraph.edges
    src, dst = edges[:, 0], edges[:, 1]
    x = subgraph.node_features
    width = params.width
    exact = Evaluator(evaluator.backend, evaluator.threads)

    # forward, keeping every circuit call
    s0 = input_network(x, params)
    states = [s0]
    edge_jacs, node_jacs, edge_weights = [], [], []
    for _ in range(params.n_iterations):
        s = states[-1]
        jac_e = exact.jacobian(topo_e, params.qen, edge_inputs(s, edges))
        jac_n = exact.jacobian(topo_n, params.qnon, node_inputs(s, edges, jac_e.scores))
        edge_jacs.append(jac_e)
        edge_weights.append(jac_e.scores)
        node_jacs.append(jac_n)
        states.append(np.concatenate([x, jac_n.scores[:, None]], axis=1))
    jac_final = exact.jacobian(topo_e, params.qen, edge_inputs(states[-1], edges))
    probs = jac_final.scores
    _check_finite("edge probabilities", probs)
    loss = weighted_bce(probs, labels, weights, clamp_eps)
    d_probs = weighted_bce_grad(probs, labels, weights, clamp_eps)

    g_qen = np.zeros_like(params.qen)
    g_qnon = np.zeros_like(params.qnon)

    def back_edges(jac, d_out, d_states):
        nonlocal g_qen
        g_qen = g_qen + d_out @ jac.d_params
        d_feat = d_out[:, None] * jac.d_inputs
        np.add.at(d_states, src, d_feat[:, :width])
        np.add.at(d_states, dst, d_feat[:, width:])

    d_s = np.zeros_like(states[-1])
    back_edges(jac_final, d_probs, d_s)
    for t in reversed(range(params.n_iterations)):
        s_prev = states[t]
        jac_n = node_jacs[t]
        e = edge_weights[t]
        # only the hidden column of S_{t+1} depends on parameters
        d_h = d_s[:, D_SPATIAL]
        _check_finite(f"node gradient (iteration {t + 1})", d_h)
        g_qnon = g_qnon + d_h @ jac_n.d_params
        d_in = d_h[:, None] * jac_n.d_inputs
        d_m_in = d_in[:, :width]
        d_m_out = d_in[:, width:2 * width]
        d_prev = d_in[:, 2 * width:].copy()

        m_in, m_out, den_in, den_out = aggregate(s_prev, edges, e)
        # m_in[k] = sum_j e_jk S_j / D_k  ->  dS_j += e_jk g_k / D_k,
        # de_jk += g_k . (S_j - m_in[k]) / D_k
        g_k = d_m_in[dst] / den_in[dst, None]
        np.add.at(d_prev, src, e[:, None] * g_k)
        d_e = np.sum(g_k * (s_prev[src] - m_in[dst]), axis=1)
        g_k = d_m_out[src] / den_out[src, None]
        np.add.at(d_prev, dst, e[:, None] * g_k)
        d_e += np.sum(g_k * (s_prev[dst] - m_out[src]), axis=1)

        back_edges(edge_jacs[t], d_e, d_prev)
        d_s = d_prev

    h0 = s0[:, D_SPATIAL]
    d_z = d_s[:, D_SPATIAL] * h0 * (1.0 - h0)
    g_w = (d_z @ x).reshape(params.input_w.shape)
    g_b = np.array([d_z.sum()])
    grad = ModelParams(g_w, g_b, g_qen, g_qnon, params.n_iterations, params.d_hid)
    for name in ModelParams.BLOCKS:
        _check_finite(f"gradient block {name}", getattr(grad, name))
    return loss, grad, probs


def qgnn_loss(subgraph, params, labels=None, weights=None, clamp_eps=1e-7, evaluator=EXACT):
    labels = subgraph.labels if labels is None else labels
    weights = class_weights(labels) if weights is None else weights
    return weighted_bce(qgnn_forward(subgraph, params, evaluator), labels, weights, clamp_eps)


def save_checkpoint(path, params, adam_state=None):
    """Text checkpoint; floats use repr() so a reload is bit-exact."""
    lines = [CHECKPOINT_MAGIC, f"d_hid {params.d_hid}", f"n_iterations {params.n_iterations}"]

    def put(name, arr):
        arr = np.asarray(arr, dtype=np.float64).ravel()
        lines.append(" ".join([name, str(arr.size)] + [repr(float(v)) for v in arr]))

    for name in ModelParams.BLOCKS:
        put(name, getattr(params, name))
    if adam_state is not None:
        lines.append(f"adam_t {adam_state.t}")
        put("adam_m", adam_state.m)
        put("adam_v", adam_state.v)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_checkpoint(path):
    """Returns (ModelParams, AdamState or None)."""
    from .trainer import AdamState

    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise CheckpointError(f"{path}: cannot read checkpoint ({exc})") from None
    if not lines or lines[0].strip() != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path}: not a {CHECKPOINT_MAGIC} file")
    fields = {}
    try:
        for line in lines[1:]:
            if not line.strip():
                continue
            name, *rest = line.split()
            if name in ("d_hid", "n_iterations", "adam_t"):
                fields[name] = int(rest[0])
            else:
                size = int(rest[0])
                values = np.array([float(v) for v in rest[1:]])
                if values.size != size:
                    raise CheckpointError(f"{path}: block {name} declares {size} values, "
                                          f"has {values.size}")
                fields[name] = values
        params = ModelParams(fields["input_w"], fields["input_b"], fields["qen"],
                             fields["qnon"], fields["n_iterations"], fields["d_hid"])
    except (KeyError, ValueError, IndexError, DimensionError, ConfigurationError) as exc:
        raise CheckpointError(f"{path}: malformed checkpoint ({exc})") from None
    state = None
    if "adam_t" in fields:
        state = AdamState(fields["adam_t"], fields["adam_m"], fields["adam_v"])
    return params, state
