import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from base.data_types import Axis
from base.params import CouplerParams, from_real, to_real
from model.core import (
    coupling_matrix,
    gauge_align,
    kerr_diagonal,
    power,
    power_imbalance,
    pt_apply,
    residual_parameter_derivative,
    rhs_dynamic,
    scalar_product,
    stationary_jacobian,
    stationary_residual,
)

ALL_PARAMS = [
    CouplerParams(k=1.0, gamma=0.5, alpha=0),
    CouplerParams(k=1.0, gamma=0.5, alpha=1),
    CouplerParams(k=0.7, gamma=1.3, alpha=0),
]


def _random_state(rng, scale=1.0):
    return scale * (rng.standard_normal(4) + 1j * rng.standard_normal(4))


def test_coupling_matrix_is_pt_symmetric(params_a0):
    h = coupling_matrix(params_a0)
    p = np.fliplr(np.eye(4))
    assert_allclose(p @ np.conj(h) @ p, h)
    assert_allclose(h, h.T)


def test_rhs_linear_limit(params_a0, rng):
    u = _random_state(rng, 1e-5)
    expected = 1j * coupling_matrix(params_a0) @ u
    assert_allclose(rhs_dynamic(params_a0, 0.0, u), expected, atol=1e-14)


def test_kerr_diagonal():
    w = np.array([1.0, 2.0, 3.0j, 0.0])
    assert_allclose(kerr_diagonal(w), [1 + 6, 4, 9 + 2 / 3, 4 * 2 / 3])


@pytest.mark.parametrize("params", ALL_PARAMS + [CouplerParams(k=1.0, gamma=0.4, delta1=0.3, delta2=-0.7,
                                                               keep_mismatch_terms=True)])
def test_power_balance_law(params, rng):
    for z in (0.0, 1.7):
        u = _random_state(rng)
        du = rhs_dynamic(params, z, u)
        dU = 2.0 * float(np.real(np.sum(np.conj(u) * du)))
        assert dU == pytest.approx(power_imbalance(params, u), rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("params", ALL_PARAMS)
def test_u1_equivariance(params, rng):
    u = _random_state(rng)
    phase = np.exp(0.83j)
    assert_allclose(rhs_dynamic(params, 0.0, phase * u), phase * rhs_dynamic(params, 0.0, u), atol=1e-13)


@pytest.mark.parametrize("params", ALL_PARAMS)
def test_pt_covariance(params, rng):
    u = _random_state(rng)
    assert_allclose(rhs_dynamic(params, 0.0, pt_apply(u)), -pt_apply(rhs_dynamic(params, 0.0, u)), atol=1e-13)


@pytest.mark.parametrize("params", ALL_PARAMS)
def test_jacobian_matches_finite_differences(params, rng):
    w = _random_state(rng)
    b = 1.3
    jacobian = stationary_jacobian(params, b, w)
    x = to_real(w)
    h = 1e-6
    for column in range(8):
        step = np.zeros(8)
        step[column] = h
        plus = to_real(stationary_residual(params, b, from_real(x + step)))
        minus = to_real(stationary_residual(params, b, from_real(x - step)))
        assert_allclose(jacobian[:, column], (plus - minus) / (2 * h), atol=1e-6)


@pytest.mark.parametrize("axis", list(Axis))
def test_parameter_derivative(axis, params_a0, rng):
    w = _random_state(rng)
    b, h = 1.1, 1e-6
    if axis is Axis.B:
        plus = stationary_residual(params_a0, b + h, w)
        minus = stationary_residual(params_a0, b - h, w)
    else:
        plus = stationary_residual(params_a0.with_gamma(params_a0.gamma + h), b, w)
        minus = stationary_residual(params_a0.with_gamma(params_a0.gamma - h), b, w)
    assert_allclose(residual_parameter_derivative(params_a0, b, w, axis), to_real((plus - minus) / (2 * h)), atol=1e-7)


def test_stationary_residual_accepts_complex_b(params_a0, rng):
    w = _random_state(rng)
    b = 1.0 + 0.5j
    assert_allclose(stationary_residual(params_a0, b, w), stationary_residual(params_a0, 1.0, w) - 0.5j * w)


def test_gauge_align(rng):
    w = _random_state(rng)
    aligned = gauge_align(w, 2)
    assert aligned[2].imag == pytest.approx(0.0, abs=1e-14)
    assert aligned[2].real > 0
    assert_allclose(np.abs(aligned), np.abs(w))
    default = gauge_align(w)
    assert default[int(np.argmax(np.abs(w)))].imag == pytest.approx(0.0, abs=1e-14)


def test_scalar_product_conjugates_second_argument():
    g = np.array([1j, 0, 0, 0])
    assert scalar_product(g, g) == pytest.approx(1.0)
    assert scalar_product(g, np.array([1, 0, 0, 0])) == pytest.approx(1j)
    assert math.isclose(abs(scalar_product(np.ones(4), np.ones(4))), 4.0)


def test_pt_apply_swaps_and_conjugates():
    assert_allclose(pt_apply([1, 2j, 3, 4]), [4, 3, -2j, 1], atol=0)


@pytest.mark.parametrize("scale", [1e-3, 1.0, 10.0])
def test_pt_apply_is_power_preserving_involution(scale, rng):
    u = _random_state(rng, scale)
    assert_allclose(pt_apply(pt_apply(u)), u, atol=0)
    assert power(pt_apply(u)) == pytest.approx(power(u), rel=1e-14)
    assert power(u) == pytest.approx(float(np.vdot(u, u).real), rel=1e-14)
