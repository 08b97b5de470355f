import numpy as np
import pytest

from qgnn import ttn
from qgnn.autodiff import (circuit_jacobian, finite_diff_oracle, shift_grad_input,
                           shift_grad_param)
from qgnn.errors import ConfigurationError, NumericError


def test_param_shift_two_qubit_stationary_point():
    # features zero, other angle zero: score = (1 - cos(theta_0)) / 2
    topo = ttn.build_ttn(2)
    assert shift_grad_param(topo, [0.0, 0.0], [0, 0], 0) == pytest.approx(0.0, abs=1e-15)
    assert shift_grad_param(topo, [np.pi / 2, 0.0], [0, 0], 0) == pytest.approx(0.5, abs=1e-15)


def test_input_shift_two_qubit():
    topo = ttn.build_ttn(2)
    assert shift_grad_input(topo, [0.0, 0.0], [0.0, 0.0], 0) == pytest.approx(0.0, abs=1e-14)
    assert shift_grad_input(topo, [0.0, 0.0], [0.25, 0.0], 0) == pytest.approx(np.pi, abs=1e-14)


def test_index_errors():
    topo = ttn.build_ttn(2)
    with pytest.raises(IndexError):
        shift_grad_param(topo, [0.0, 0.0], [0, 0], 2)
    with pytest.raises(IndexError):
        shift_grad_input(topo, [0.0, 0.0], [0, 0], 2)


def test_finite_diff_oracle_polynomial_and_cos():
    assert finite_diff_oracle(lambda x: x[0] ** 2, [3.0], 1e-4)[0] == pytest.approx(6.0, abs=1e-7)
    assert finite_diff_oracle(lambda x: np.cos(x[0]), [0.0], 1e-4)[0] == pytest.approx(0.0, abs=1e-8)


def test_finite_diff_oracle_guards():
    with pytest.raises(ConfigurationError):
        finite_diff_oracle(lambda x: x[0], [0.0], 1.0)
    with pytest.raises(NumericError):
        finite_diff_oracle(lambda x: np.nan, [0.0], 1e-4)


@pytest.mark.parametrize("n", [8, 12])
def test_shift_rule_matches_finite_differences(n):
    rng = np.random.default_rng(n)
    topo = ttn.build_ttn(n)
    params = rng.uniform(0, 2 * np.pi, topo.n_params)
    feats = rng.uniform(0.05, 0.95, n)
    fd_p = finite_diff_oracle(lambda p: ttn.ttn_forward(topo, p, feats), params, 1e-4)
    fd_x = finite_diff_oracle(lambda x: ttn.ttn_forward(topo, params, x), feats, 1e-4)
    shift_p = [shift_grad_param(topo, params, feats, k) for k in range(topo.n_params)]
    shift_x = [shift_grad_input(topo, params, feats, i) for i in range(n)]
    np.testing.assert_allclose(shift_p, fd_p, atol=1e-6)
    np.testing.assert_allclose(shift_x, fd_x, atol=1e-6)
    assert np.max(np.abs(shift_p)) <= 0.5


def test_batched_jacobian_matches_scalar_rules():
    rng = np.random.default_rng(9)
    topo = ttn.build_ttn(5)
    params = rng.uniform(0, 6, topo.n_params)
    feats = rng.uniform(0, 1, (4, 5))
    for backend in ttn.BACKENDS:
        jac = circuit_jacobian(topo, params, feats, backend=backend)
        for b in range(4):
            assert jac.scores[b] == pytest.approx(ttn.ttn_forward(topo, params, feats[b]), abs=1e-14)
            for k in range(topo.n_params):
                assert jac.d_params[b, k] == pytest.approx(
                    shift_grad_param(topo, params, feats[b], k), abs=1e-14)
            for i in range(5):
                assert jac.d_inputs[b, i] == pytest.approx(
                    shift_grad_input(topo, params, feats[b], i), abs=1e-13)


def test_jacobian_linearity():
    rng = np.random.default_rng(2)
    topo = ttn.build_ttn(4)
    p1, p2 = rng.uniform(0, 6, (2, topo.n_params))
    feats = rng.uniform(0, 1, (1, 4))
    alpha, beta = 0.7, -1.3
    j1 = circuit_jacobian(topo, p1, feats)
    j2 = circuit_jacobian(topo, p2, feats)
    combined = alpha * j1.d_inputs + beta * j2.d_inputs
    per_input = [alpha * shift_grad_input(topo, p1, feats[0], i)
                 + beta * shift_grad_input(topo, p2, feats[0], i) for i in range(4)]
    np.testing.assert_allclose(combined[0], per_input, atol=1e-12)
