import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qgnn import statevector as sv
from qgnn.errors import ConfigurationError

from oracles import cnot_matrix, ry_matrix, single_qubit_op, z_observable


def basis(n, index):
    state = sv.init_zero(n)
    state.amps[:] = 0
    state.amps[index] = 1
    return state


@pytest.mark.parametrize("n", [1, 2, 12])
def test_init_zero(n):
    state = sv.init_zero(n)
    assert state.amps.shape == (2 ** n,)
    assert state.amps[0] == 1
    assert np.count_nonzero(state.amps) == 1
    assert state.norm_squared() == pytest.approx(1.0)


@pytest.mark.parametrize("n", [0, 15, -1])
def test_init_zero_range(n):
    with pytest.raises(ConfigurationError):
        sv.init_zero(n)


def test_ry_pi_flips():
    state = sv.apply_ry(sv.init_zero(1), 0, np.pi)
    np.testing.assert_allclose(state.amps, [0, 1], atol=1e-15)


def test_ry_zero_is_identity():
    state = sv.apply_ry(sv.init_zero(1), 0, 0.0)
    np.testing.assert_array_equal(state.amps, [1, 0])


def test_ry_half_pi():
    state = sv.apply_ry(sv.init_zero(1), 0, np.pi / 2)
    np.testing.assert_allclose(state.amps, [2 ** -0.5, 2 ** -0.5], atol=1e-15)


def test_qubit_zero_is_least_significant():
    state = sv.apply_ry(sv.init_zero(3), 0, np.pi)
    assert abs(state.amps[1]) == pytest.approx(1.0)
    state = sv.apply_ry(sv.init_zero(3), 2, np.pi)
    assert abs(state.amps[4]) == pytest.approx(1.0)


def test_ry_bad_index():
    with pytest.raises(IndexError):
        sv.apply_ry(sv.init_zero(2), 2, 0.1)


def test_cnot_truth_table():
    # |10> in (q1 q0) notation with q0 = control set: index 1 -> index 3
    state = sv.apply_cnot(basis(2, 0b01), 0, 1)
    assert state.amps[0b11] == 1
    state = sv.apply_cnot(sv.init_zero(2), 0, 1)
    assert state.amps[0] == 1


def test_cnot_linearity():
    state = sv.init_zero(2)
    state.amps[:] = [2 ** -0.5, 2 ** -0.5, 0, 0]
    sv.apply_cnot(state, 0, 1)
    np.testing.assert_allclose(state.amps, [2 ** -0.5, 0, 0, 2 ** -0.5])


def test_cnot_errors():
    with pytest.raises(ConfigurationError):
        sv.apply_cnot(sv.init_zero(2), 1, 1)
    with pytest.raises(IndexError):
        sv.apply_cnot(sv.init_zero(2), 0, 5)


def test_expectation_z_basis():
    assert sv.expectation_z(sv.init_zero(1), 0) == 1.0
    assert sv.expectation_z(basis(2, 0b10), 1) == -1.0
    assert sv.expectation_z(sv.apply_ry(sv.init_zero(1), 0, np.pi / 3), 0) == pytest.approx(0.5)


def test_random_circuit_against_dense_oracle():
    rng = np.random.default_rng(5)
    n = 8
    state = sv.init_zero(n)
    psi = np.zeros(2 ** n)
    psi[0] = 1
    for _ in range(60):
        if rng.random() < 0.5:
            q, theta = int(rng.integers(n)), rng.uniform(-7, 7)
            sv.apply_ry(state, q, theta)
            psi = single_qubit_op(ry_matrix(theta), q, n) @ psi
        else:
            c, t = rng.choice(n, 2, replace=False)
            sv.apply_cnot(state, int(c), int(t))
            psi = cnot_matrix(int(c), int(t), n) @ psi
    np.testing.assert_allclose(state.amps, psi, atol=1e-12)
    for q in range(n):
        assert sv.expectation_z(state, q) == pytest.approx(psi @ z_observable(q, n) @ psi, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(theta=st.floats(-20, 20), qubit=st.integers(0, 3))
def test_ry_periodicity(theta, qubit):
    rng = np.random.default_rng(0)
    base = sv.init_zero(4)
    base.amps[:] = rng.normal(size=16) + 1j * rng.normal(size=16)
    base.amps /= np.sqrt(base.norm_squared())
    a = sv.apply_ry(base.copy(), qubit, theta)
    b = sv.apply_ry(base.copy(), qubit, theta + 4 * np.pi)
    np.testing.assert_allclose(a.amps, b.amps, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(t1=st.floats(-7, 7), t2=st.floats(-7, 7), seed=st.integers(0, 1000))
def test_disjoint_gates_commute(t1, t2, seed):
    rng = np.random.default_rng(seed)
    base = sv.init_zero(5)
    base.amps[:] = rng.normal(size=32)
    base.amps /= np.sqrt(base.norm_squared())
    a = sv.apply_cnot(sv.apply_ry(sv.apply_ry(base.copy(), 0, t1), 4, t2), 1, 2)
    b = sv.apply_ry(sv.apply_ry(sv.apply_cnot(base.copy(), 1, 2), 4, t2), 0, t1)
    np.testing.assert_allclose(a.amps, b.amps, atol=1e-12)


def test_shot_sampling_is_unbiased():
    state = sv.apply_ry(sv.init_zero(1), 0, 2 * np.pi / 3)  # <Z> = -0.5
    rng = np.random.default_rng(1)
    est = np.mean([sv.sample_expectation_z(state, 0, 1000, rng) for _ in range(200)])
    assert est == pytest.approx(-0.5, abs=0.01)
