import dataclasses
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from base.data_types import GhostPin, Sign
from base.errors import FamilyDoesNotExistError, InvalidParametersError
from base.params import CouplerParams
from model.core import stationary_residual
from modes.exact import ExactModeSpec, circular_mode
from modes.ghost import (
    ansatz_defect,
    ghost_branch,
    ghost_closed_form,
    ghost_field,
    ghost_intensity_trace,
    ghost_residual,
    ghost_seed,
    ghost_solve,
    kappa,
)
from solver.continuation import Termination


def _params(gamma, alpha=0):
    return CouplerParams(k=1.0, gamma=gamma, alpha=alpha)


@pytest.mark.parametrize("alpha", [0, 1])
@pytest.mark.parametrize("gamma", [1.05, 1.5, 2.2])
@pytest.mark.parametrize("branch", list(Sign))
def test_closed_form_solves_stationary_equations(alpha, gamma, branch):
    params = _params(gamma, alpha)
    ghost = ghost_closed_form(params, 2.0, branch=branch)
    residual = stationary_residual(params, ghost.b, ghost_field(ghost))
    assert np.max(np.abs(residual)) < 1e-10
    assert np.max(np.abs(ghost_residual(ghost))) < 1e-10
    assert ghost.B == pytest.approx(2.0, rel=1e-12)


def test_closed_form_identities():
    params = _params(1.5)
    ghost = ghost_closed_form(params, 2.0)
    x, y = ghost.c1 ** 2, ghost.c2 ** 2
    s = x + y
    v = (kappa(params) * s) ** 2
    assert ghost.b.real == pytest.approx(kappa(params) * s)
    assert ghost.b.imag == pytest.approx(params.gamma * (y - x) / s)
    assert x * y == pytest.approx(2.0 * s ** 2 / (4.0 * params.gamma ** 2 + v))
    assert ghost.power == pytest.approx(2.0 * s)


def test_branches_are_mirror_images():
    params = _params(1.5)
    plus = ghost_closed_form(params, 2.0, branch=Sign.PLUS)
    minus = ghost_closed_form(params, 2.0, branch=Sign.MINUS)
    assert plus.c2 > plus.c1
    assert plus.b.imag > 0
    assert minus.c1 == pytest.approx(plus.c2)
    assert minus.c2 == pytest.approx(plus.c1)
    assert minus.b.imag == pytest.approx(-plus.b.imag)
    assert minus.b.real == pytest.approx(plus.b.real)


def test_real_pin():
    params = _params(1.3)
    ghost = ghost_closed_form(params, 2.0, pin=GhostPin.REAL)
    assert ghost.b.real == pytest.approx(2.0, rel=1e-12)
    assert np.max(np.abs(stationary_residual(params, ghost.b, ghost_field(ghost)))) < 1e-10


def test_no_ghost_before_bifurcation():
    with pytest.raises(FamilyDoesNotExistError):
        ghost_closed_form(_params(0.9), 2.0)
    with pytest.raises(FamilyDoesNotExistError):
        ghost_closed_form(_params(0.9), 2.0, pin=GhostPin.REAL)


def test_invalid_inputs():
    params = _params(1.5)
    with pytest.raises(InvalidParametersError):
        ghost_closed_form(params, 0.0)
    ghost = ghost_closed_form(params, 2.0)
    with pytest.raises(InvalidParametersError):
        ghost_residual(dataclasses.replace(ghost, c1=0.0))
    with pytest.raises(InvalidParametersError):
        ghost_branch(params, 2.0, (1.5, 1.2))


@pytest.mark.parametrize("alpha, rho_squared", [(0, 0.6), (1, 0.75)])
def test_ghost_starts_on_circular_family(alpha, rho_squared):
    params = _params(1.0, alpha)
    ghost = ghost_closed_form(params, 2.0)
    assert ghost.c1 ** 2 == pytest.approx(rho_squared, abs=1e-6)
    assert ghost.c2 ** 2 == pytest.approx(rho_squared, abs=1e-6)
    assert abs(ghost.b.imag) < 1e-6
    circular = circular_mode(ExactModeSpec(sign=Sign.PLUS, b=2.0, params=params))
    assert_allclose(np.abs(ghost_field(ghost)), circular.amplitudes(), atol=1e-6)
    w = circular.w
    assert math.remainder(ghost.dphi - np.angle(w[1] * np.conj(w[0])), 2 * math.pi) == pytest.approx(0.0, abs=1e-5)


def test_pitchfork_exponent():
    gaps = []
    offsets = [1e-3, 1e-2]
    for offset in offsets:
        ghost = ghost_closed_form(_params(1.0 + offset), 2.0)
        gaps.append(ghost.c2 ** 2 - ghost.c1 ** 2)
    exponent = math.log(gaps[1] / gaps[0]) / math.log(offsets[1] / offsets[0])
    assert exponent == pytest.approx(0.5, abs=0.05)


def test_solve_from_tilted_circular_mode():
    params = _params(1.02)
    circular = circular_mode(ExactModeSpec(sign=Sign.PLUS, b=2.0, params=params))
    ghost = ghost_solve(params, 2.0, ghost_seed(circular))
    expected = ghost_closed_form(params, 2.0)
    assert ghost.c2 > ghost.c1
    assert ghost.c1 == pytest.approx(expected.c1, abs=1e-8)
    assert ghost.c2 == pytest.approx(expected.c2, abs=1e-8)
    assert ghost.b == pytest.approx(expected.b, abs=1e-8)


def test_seed_tilt():
    params = _params(1.2)
    circular = circular_mode(ExactModeSpec(sign=Sign.PLUS, b=2.0, params=params))
    plus = ghost_seed(circular, asymmetry=0.2)
    minus = ghost_seed(circular, asymmetry=0.2, branch=Sign.MINUS)
    assert plus.c2 ** 2 - plus.c1 ** 2 == pytest.approx(0.2 * (plus.c1 ** 2 + plus.c2 ** 2))
    assert minus.c1 > minus.c2
    assert plus.b.imag > 0 > minus.b.imag


def test_modulus_pinned_branch_ends_where_ghost_vanishes():
    curve = ghost_branch(_params(1.0), 2.0, (1.01, 3.0))
    assert curve.termination is Termination.EXISTENCE_LOST
    assert curve.gammas[-1] == pytest.approx(math.sqrt(6.0), abs=0.05)
    assert np.all(np.diff(curve.gammas) > 0)
    assert all(g.c2 > g.c1 for g in curve.points)
    assert all(g.B == pytest.approx(2.0) for g in curve.points)
    assert curve.label == "ghost+"


def test_real_pinned_branch_reaches_range_end():
    curve = ghost_branch(_params(1.0), 2.0, (1.01, 1.5), pin=GhostPin.REAL, branch=Sign.MINUS)
    assert curve.termination is Termination.BOUNDARY
    assert curve.gammas[-1] == pytest.approx(1.5)
    assert all(g.b.real == pytest.approx(2.0) for g in curve.points)
    assert all(g.b.imag < 0 for g in curve.points)


def test_ansatz_defect():
    ghost = ghost_closed_form(_params(1.5), 2.0)
    assert ansatz_defect(ghost, 0.0) < 1e-10
    assert ansatz_defect(ghost, 1.0) > 1e-2


def test_intensity_trace():
    ghost = ghost_closed_form(_params(1.5), 2.0)
    z = np.linspace(0.0, 2.0, 5)
    trace = ghost_intensity_trace(ghost, z)
    assert trace.shape == (5, 4)
    assert_allclose(trace[0], np.abs(ghost_field(ghost)) ** 2)
    assert_allclose(trace[-1], trace[0] * math.exp(-4.0 * ghost.b.imag))
    assert np.all(np.diff(trace[:, 0]) < 0)
