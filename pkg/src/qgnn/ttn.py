"""Tree Tensor Network classifier circuits.

A TTN on n qubits angle-encodes n features, then merges neighbouring qubits
pairwise, layer by layer, until a single readout qubit is left. Each merge
(block) applies Ry to both qubits followed by CNOT(first -> second); the
second qubit survives into the next layer. The score is P(|1>) on the
readout qubit, ``(1 - <Z>) / 2``.

Two evaluation backends produce identical scores:

``statevector``
    Full dense simulation with :mod:`qgnn.statevector`.
``tree``
    Exact contraction that exploits the circuit shape. The encoded input is a
    product state and a retired qubit is never touched again, so the two
    qubits entering a block are uncorrelated. Each surviving qubit is then
    described by its Bloch vector (x, z) (y stays 0 for real amplitudes), Ry
    rotates it in the x-z plane, and CNOT followed by tracing out the control
    gives ``z_out = z_control * z_target``, ``x_out = x_target``.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import statevector as sv
from .errors import ConfigurationError, DimensionError, DomainError

BACKENDS = ("statevector", "tree")
_CHUNK = 256


@dataclass(frozen=True)
class Block:
    layer: int
    first_qubit: int
    second_qubit: int
    survivor: int


@dataclass(frozen=True)
class TTNTopology:
    n_qubits: int
    blocks: tuple
    output_qubit: int

    @property
    def n_params(self) -> int:
        return 2 * len(self.blocks)

    def layer_sizes(self):
        sizes = {}
        for block in self.blocks:
            sizes[block.layer] = sizes.get(block.layer, 0) + 1
        return [sizes[k] for k in sorted(sizes)]


def build_ttn(n_qubits: int) -> TTNTopology:
    if not isinstance(n_qubits, (int, np.integer)) or not 2 <= n_qubits <= sv.MAX_QUBITS:
        raise ConfigurationError(
            f"TTN needs 2..{sv.MAX_QUBITS} qubits, got {n_qubits!r}")
    active = list(range(n_qubits))
    blocks = []
    layer = 0
    while len(active) > 1:
        survivors = []
        for k in range(0, len(active) - 1, 2):
            first, second = active[k], active[k + 1]
            blocks.append(Block(layer, first, second, second))
            survivors.append(second)
        if len(active) % 2:
            survivors.append(active[-1])
        active = survivors
        layer += 1
    return TTNTopology(int(n_qubits), tuple(blocks), active[0])


def init_ttn_params(topology: TTNTopology, rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(0.0, 2.0 * np.pi, size=topology.n_params)


def check_params(topology: TTNTopology, params) -> np.ndarray:
    params = np.asarray(params, dtype=np.float64)
    if params.shape != (topology.n_params,):
        raise DimensionError(
            f"expected {topology.n_params} circuit parameters, got shape {params.shape}")
    if not np.all(np.isfinite(params)):
        raise DomainError("circuit parameters must be finite")
    return params


def encode_features(features) -> np.ndarray:
    """Map features in [0, 1] to Ry angles in [0, 2*pi]."""
    features = np.asarray(features, dtype=np.float64)
    if features.size and (np.any(features < -1e-9) or np.any(features > 1 + 1e-9)
                          or not np.all(np.isfinite(features))):
        raise DomainError("features must lie in [0, 1]; upstream normalization is broken")
    return 2.0 * np.pi * features


def _tree_scores(topology, thetas, angles):
    # thetas (B, P), angles (B, n)
    x = np.sin(angles)
    z = np.cos(angles)
    for b, block in enumerate(topology.blocks):
        i, j = block.first_qubit, block.second_qubit
        ca, sa = np.cos(thetas[:, 2 * b]), np.sin(thetas[:, 2 * b])
        cb, sb = np.cos(thetas[:, 2 * b + 1]), np.sin(thetas[:, 2 * b + 1])
        z_i = z[:, i] * ca - x[:, i] * sa
        x_j = x[:, j] * cb + z[:, j] * sb
        z_j = z[:, j] * cb - x[:, j] * sb
        z[:, j] = z_i * z_j
        x[:, j] = x_j
    return 0.5 * (1.0 - z[:, topology.output_qubit])


def _statevector_scores(topology, thetas, angles):
    n = topology.n_qubits
    amps = sv.init_zero_batch(len(angles), n)
    for q in range(n):
        sv.apply_ry_batch(amps, n, q, angles[:, q])
    for b, block in enumerate(topology.blocks):
        sv.apply_ry_batch(amps, n, block.first_qubit, thetas[:, 2 * b])
        sv.apply_ry_batch(amps, n, block.second_qubit, thetas[:, 2 * b + 1])
        sv.apply_cnot_batch(amps, n, block.first_qubit, block.second_qubit)
    expz = sv.expectation_z_batch(amps, n, topology.output_qubit)
    return 0.5 * (1.0 - expz)


def ttn_scores_from_angles(topology, thetas, angles, backend="tree", threads=1):
    """Batched scores for raw encoding angles.

    ``thetas`` is (B, P) or (P,), ``angles`` is (B, n). Angles are not range
    checked, which lets gradient code evaluate shifted encodings.
    """
    if backend not in BACKENDS:
        raise ConfigurationError(f"unknown backend {backend!r}; choose from {BACKENDS}")
    angles = np.atleast_2d(np.asarray(angles, dtype=np.float64))
    if angles.shape[1] != topology.n_qubits:
        raise DimensionError(
            f"expected {topology.n_qubits} features per circuit, got {angles.shape[1]}")
    thetas = np.asarray(thetas, dtype=np.float64)
    if thetas.ndim == 1:
        thetas = np.broadcast_to(thetas, (len(angles), thetas.size))
    if thetas.shape != (len(angles), topology.n_params):
        raise DimensionError(
            f"expected parameters of shape ({len(angles)}, {topology.n_params}), "
            f"got {thetas.shape}")
    if len(angles) == 0:
        return np.zeros(0)
    if backend == "tree":
        return _tree_scores(topology, thetas, angles.copy())

    out = np.empty(len(angles))
    starts = range(0, len(angles), _CHUNK)

    def run(start):
        stop = start + _CHUNK
        out[start:stop] = _statevector_scores(topology, thetas[start:stop], angles[start:stop])

    if threads > 1 and len(angles) > _CHUNK:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run, starts))
    else:
        for start in starts:
            run(start)
    return out


def ttn_scores(topology, params, features, backend="tree", threads=1):
    """Batched scores for a (B, n) matrix of features in [0, 1]."""
    params = check_params(topology, params)
    return ttn_scores_from_angles(topology, params, encode_features(features),
                                  backend=backend, threads=threads)


def sample_scores(scores, shots, rng):
    """Replace exact probabilities with ``shots``-sample frequency estimates."""
    return rng.binomial(shots, np.clip(scores, 0.0, 1.0)) / shots


def ttn_forward(topology: TTNTopology, params, features, backend="statevector") -> float:
    """Score one feature vector: P(|1>) on the readout qubit."""
    features = np.asarray(features, dtype=np.float64)
    if features.shape != (topology.n_qubits,):
        raise DimensionError(
            f"expected {topology.n_qubits} features, got shape {features.shape}")
    score = ttn_scores(topology, params, features[None, :], backend=backend)[0]
    return float(np.clip(score, 0.0, 1.0))
