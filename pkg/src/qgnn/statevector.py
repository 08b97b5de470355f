"""Dense statevector simulator for the Ry / CNOT / <Z> gate set.

Qubit 0 is the least significant bit of the amplitude index, so basis state
``|q_{n-1} ... q_1 q_0>`` sits at index ``sum(q_k << k)``.

Gates mutate the amplitude array in place and return the state for chaining.
The ``*_batch`` kernels operate on an ``(B, 2**n)`` array holding B
independent registers; they accept real arrays too, since Ry and CNOT map
real amplitudes to real amplitudes.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

MAX_QUBITS = 14


@dataclass
class StateVector:
    n_qubits: int
    amps: np.ndarray

    def norm_squared(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    def copy(self) -> "StateVector":
        return StateVector(self.n_qubits, self.amps.copy())


def _check_n_qubits(n_qubits):
    if not isinstance(n_qubits, (int, np.integer)) or not 1 <= n_qubits <= MAX_QUBITS:
        raise ConfigurationError(
            f"n_qubits must be an integer in 1..{MAX_QUBITS}, got {n_qubits!r}")


def _check_qubit(qubit, n_qubits):
    if not 0 <= qubit < n_qubits:
        raise IndexError(f"qubit {qubit} out of range for {n_qubits} qubits")


def init_zero(n_qubits: int) -> StateVector:
    _check_n_qubits(n_qubits)
    amps = np.zeros(1 << n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(int(n_qubits), amps)


def init_zero_batch(batch: int, n_qubits: int, dtype=np.float64) -> np.ndarray:
    _check_n_qubits(n_qubits)
    amps = np.zeros((batch, 1 << n_qubits), dtype=dtype)
    amps[:, 0] = 1.0
    return amps


def _pair_view(amps, qubit, n_qubits):
    # (batch, high, bit, low): the middle axis is the target qubit's bit
    low = 1 << qubit
    high = 1 << (n_qubits - qubit - 1)
    return amps.reshape(amps.shape[0], high, 2, low)


def apply_ry_batch(amps, n_qubits, qubit, thetas):
    """Apply Ry(thetas[b]) to ``qubit`` of register b, in place."""
    _check_qubit(qubit, n_qubits)
    view = _pair_view(amps, qubit, n_qubits)
    half = 0.5 * np.asarray(thetas, dtype=np.float64)
    c = np.cos(half).reshape(-1, 1, 1)
    s = np.sin(half).reshape(-1, 1, 1)
    a0 = view[:, :, 0, :].copy()
    a1 = view[:, :, 1, :]
    view[:, :, 0, :] = c * a0 - s * a1
    view[:, :, 1, :] = s * a0 + c * a1
    return amps


def apply_cnot_batch(amps, n_qubits, control, target):
    if control == target:
        raise ConfigurationError("CNOT control and target must differ")
    _check_qubit(control, n_qubits)
    _check_qubit(target, n_qubits)
    # axis k of the tensor view holds qubit n-1-k
    tensor = amps.reshape((amps.shape[0],) + (2,) * n_qubits)
    c_ax = n_qubits - control
    t_ax = n_qubits - target
    idx0 = [slice(None)] * (n_qubits + 1)
    idx1 = [slice(None)] * (n_qubits + 1)
    idx0[c_ax] = idx1[c_ax] = 1
    idx0[t_ax] = 0
    idx1[t_ax] = 1
    idx0, idx1 = tuple(idx0), tuple(idx1)
    tmp = tensor[idx0].copy()
    tensor[idx0] = tensor[idx1]
    tensor[idx1] = tmp
    return amps


def expectation_z_batch(amps, n_qubits, qubit):
    _check_qubit(qubit, n_qubits)
    view = _pair_view(amps, qubit, n_qubits)
    p0 = np.sum(np.abs(view[:, :, 0, :]) ** 2, axis=(1, 2))
    p1 = np.sum(np.abs(view[:, :, 1, :]) ** 2, axis=(1, 2))
    return p0 - p1


def apply_ry(state: StateVector, qubit: int, theta: float) -> StateVector:
    if not np.isfinite(theta):
        raise ConfigurationError(f"rotation angle must be finite, got {theta!r}")
    apply_ry_batch(state.amps.reshape(1, -1), state.n_qubits, qubit, [theta])
    return state


def apply_cnot(state: StateVector, control: int, target: int) -> StateVector:
    apply_cnot_batch(state.amps.reshape(1, -1), state.n_qubits, control, target)
    return state


def expectation_z(state: StateVector, qubit: int) -> float:
    """Exact <Z> on ``qubit``: +1 weight for bit 0, -1 for bit 1."""
    value = expectation_z_batch(state.amps.reshape(1, -1), state.n_qubits, qubit)[0]
    return float(np.clip(value, -1.0, 1.0))


def sample_expectation_z(state, qubit, shots, rng):
    """Shot-sampled estimate of <Z> from a binomial draw of P(|1>)."""
    p1 = 0.5 * (1.0 - expectation_z(state, qubit))
    ones = rng.binomial(shots, min(max(p1, 0.0), 1.0))
    return 1.0 - 2.0 * ones / shots
