"""Parameter-shift gradients of TTN scores.

Every trainable angle and every encoding angle enters the circuit through a
single Ry gate, so the two-term shift rule

    d score / d angle = [score(angle + pi/2) - score(angle - pi/2)] / 2

is exact. Input derivatives pick up the factor 2*pi from the encoding map.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, NumericError
from .ttn import check_params, encode_features, ttn_scores_from_angles

SHIFT = 0.5 * np.pi


@dataclass
class CircuitJacobian:
    scores: np.ndarray    # (B,)
    d_params: np.ndarray  # (B, P)
    d_inputs: np.ndarray  # (B, n), w.r.t. features in [0, 1]


def shift_grad_param(topology, params, features, k, backend="tree") -> float:
    params = check_params(topology, params)
    if not 0 <= k < params.size:
        raise IndexError(f"parameter index {k} out of range for {params.size} parameters")
    angles = encode_features(features)[None, :]
    plus, minus = params.copy(), params.copy()
    plus[k] += SHIFT
    minus[k] -= SHIFT
    hi = ttn_scores_from_angles(topology, plus, angles, backend=backend)[0]
    lo = ttn_scores_from_angles(topology, minus, angles, backend=backend)[0]
    return 0.5 * (hi - lo)


def shift_grad_input(topology, params, features, i, backend="tree") -> float:
    params = check_params(topology, params)
    angles = encode_features(features)
    if not 0 <= i < angles.size:
        raise IndexError(f"feature index {i} out of range for {angles.size} features")
    shifted = np.stack([angles, angles])
    shifted[0, i] += SHIFT
    shifted[1, i] -= SHIFT
    hi, lo = ttn_scores_from_angles(topology, params, shifted, backend=backend)
    return 2.0 * np.pi * 0.5 * (hi - lo)


def circuit_jacobian(topology, params, features, backend="tree", threads=1) -> CircuitJacobian:
    """Scores and full shift-rule Jacobians for a (B, n) batch of inputs.

    All 1 + 2(P + n) evaluations per input are stacked into one batched call
    and written back into fixed slots.
    """
    params = check_params(topology, params)
    angles = encode_features(features)
    batch, n = angles.shape
    n_par = params.size
    n_var = 1 + 2 * n_par + 2 * n

    thetas = np.broadcast_to(params, (batch, n_var, n_par)).copy()
    angs = np.broadcast_to(angles[:, None, :], (batch, n_var, n)).copy()
    k = np.arange(n_par)
    thetas[:, 1 + k, k] += SHIFT
    thetas[:, 1 + n_par + k, k] -= SHIFT
    i = np.arange(n)
    angs[:, 1 + 2 * n_par + i, i] += SHIFT
    angs[:, 1 + 2 * n_par + n + i, i] -= SHIFT

    flat = ttn_scores_from_angles(topology, thetas.reshape(-1, n_par),
                                  angs.reshape(-1, n), backend=backend, threads=threads)
    vals = flat.reshape(batch, n_var)
    d_params = 0.5 * (vals[:, 1:1 + n_par] - vals[:, 1 + n_par:1 + 2 * n_par])
    base = 1 + 2 * n_par
    d_inputs = np.pi * (vals[:, base:base + n] - vals[:, base + n:base + 2 * n])
    return CircuitJacobian(vals[:, 0], d_params, d_inputs)


def finite_diff_oracle(function, point, h=1e-4) -> np.ndarray:
    """Central finite-difference gradient of a scalar function."""
    if not 1e-8 <= h <= 1e-2:
        raise ConfigurationError(f"step h must lie in [1e-8, 1e-2], got {h}")
    point = np.atleast_1d(np.asarray(point, dtype=np.float64))
    grad = np.empty_like(point)
    for idx in range(point.size):
        up, down = point.copy(), point.copy()
        up.flat[idx] += h
        down.flat[idx] -= h
        f_up, f_down = function(up), function(down)
        if not (np.isfinite(f_up) and np.isfinite(f_down)):
            raise NumericError(f"non-finite function value at coordinate {idx}")
        grad.flat[idx] = (f_up - f_down) / (2.0 * h)
    return grad
