import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from base.data_types import Sign
from base.errors import BrokenPhaseError, InvalidParametersError
from base.params import CouplerParams
from model.core import pt_apply, scalar_product
from model.linear import (
    build_H,
    eigenvalues_closed,
    orthogonal_pair,
    pt_breaking_point,
    pt_eigenvector,
    real_btilde,
)


@pytest.mark.parametrize("k", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("ratio", [0.0, 0.4, 0.9, 1.2, 1.6])
def test_closed_form_eigenvalues(k, ratio):
    params = CouplerParams(k=k, gamma=ratio * k)
    spectrum = eigenvalues_closed(params)
    assert spectrum.broken == (ratio * k > math.sqrt(2.0) * k)
    h = build_H(params)
    for b in (spectrum.b_plus, spectrum.b_minus):
        assert abs(np.linalg.det(h - b * np.eye(4))) < 1e-9 * max(1.0, k) ** 4
        assert np.min(np.abs(np.linalg.eigvals(h) - b)) < 1e-10 * max(1.0, k)
    if spectrum.broken:
        assert spectrum.b_plus.imag > 0
        assert spectrum.b_plus.real == 0


def test_pt_breaking_point():
    assert pt_breaking_point(1.0) == pytest.approx(math.sqrt(2.0), abs=1e-6)
    assert pt_breaking_point(0.5) == pytest.approx(math.sqrt(2.0) * 0.5, abs=1e-6)


def test_real_btilde():
    params = CouplerParams(k=1.0, gamma=0.5)
    assert real_btilde(params, Sign.PLUS) == pytest.approx(math.sqrt(1.75))
    assert real_btilde(params, Sign.MINUS) == pytest.approx(-math.sqrt(1.75))
    with pytest.raises(BrokenPhaseError):
        real_btilde(params.with_gamma(1.5), Sign.PLUS)


@pytest.mark.parametrize("gamma", [0.0, 0.5, 1.1])
@pytest.mark.parametrize("sign", list(Sign))
@pytest.mark.parametrize("theta", [0.0, 0.3, 1.0, 2.5, -1.2])
def test_pt_eigenvector(gamma, sign, theta):
    params = CouplerParams(k=1.0, gamma=gamma)
    btilde = real_btilde(params, sign)
    vector = pt_eigenvector(params, btilde, theta)
    assert_allclose(build_H(params) @ vector.v, btilde * vector.v, atol=1e-12)
    assert_allclose(pt_apply(vector.v), vector.v, atol=1e-14)


def test_pt_eigenvector_hermitian_limit():
    params = CouplerParams(k=1.0, gamma=0.0)
    vector = pt_eigenvector(params, math.sqrt(2.0), 0.0)
    s = math.sqrt(2.0) - 1.0
    assert_allclose(vector.v, [1.0, s, s, 1.0], atol=1e-15)


def test_pt_eigenvector_errors():
    params = CouplerParams(k=1.0, gamma=0.5)
    with pytest.raises(InvalidParametersError):
        pt_eigenvector(params, 1.0, 0.0)
    with pytest.raises(BrokenPhaseError):
        pt_eigenvector(params.with_gamma(1.5), 1.0, 0.0)


@pytest.mark.parametrize("gamma", [0.2, 0.7, 1.3])
def test_orthogonal_pair(gamma):
    params = CouplerParams(k=1.0, gamma=gamma)
    btilde = real_btilde(params, Sign.PLUS)
    first, second = orthogonal_pair(params, btilde)
    assert first.theta == 0.0
    assert abs(scalar_product(first.v, second.v)) < 1e-12
    # |w~(theta)|^2 = 8 - 4 (b~ cos 2 theta + gamma sin 2 theta) for k = 1.
    for vector in (first, second):
        expected = 8.0 - 4.0 * (btilde * math.cos(2 * vector.theta) + gamma * math.sin(2 * vector.theta))
        assert scalar_product(vector.v, vector.v).real == pytest.approx(expected, rel=1e-12)


def test_orthogonal_pair_needs_gain():
    with pytest.raises(InvalidParametersError):
        orthogonal_pair(CouplerParams(k=1.0, gamma=0.0), math.sqrt(2.0))
