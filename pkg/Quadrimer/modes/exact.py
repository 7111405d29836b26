from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass

import numpy as np
from typing_extensions import assert_never

from base.data_types import Family, Polarization, Sign
from base.errors import BrokenPhaseError, FamilyDoesNotExistError, InvalidParametersError
from base.params import CouplerParams, StationaryMode, field_state
from model.core import stationary_residual
from model.linear import real_btilde

RESIDUAL_TARGET = 1e-12
SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class ExactModeSpec:
    sign: Sign
    b: float
    params: CouplerParams


def _check_residual(mode: StationaryMode) -> StationaryMode:
    residual = float(np.max(np.abs(stationary_residual(mode.params, mode.b, mode.w))))
    if residual > RESIDUAL_TARGET * max(1.0, abs(mode.b)):
        logging.warning(f"{mode.family.tag} mode at b={mode.b}, {mode.params} has residual {residual:.3e}")
    return mode


def circular_mode(spec: ExactModeSpec) -> StationaryMode:
    """Equal-intensity (circularly polarized) mode w = (r e^{i phi}, -i r e^{-i phi}, i r e^{i phi}, r e^{-i phi})."""
    params = spec.params
    btilde = real_btilde(params, spec.sign)
    rho_squared = 3.0 * (spec.b - btilde) / (5.0 - params.alpha)
    if rho_squared < 0:
        raise FamilyDoesNotExistError(
            f"family does not exist: circular{spec.sign.value} needs b >= {btilde}, got b = {spec.b}"
        )
    rhs = (btilde * (1 - 1j) - params.gamma * (1 + 1j)) / (2.0 * params.k)
    phi = 0.5 * math.atan2(rhs.imag, rhs.real)
    rho = math.sqrt(rho_squared)
    e = cmath.exp(1j * phi)
    w = field_state([rho * e, -1j * rho * e.conjugate(), 1j * rho * e, rho * e.conjugate()])
    return _check_residual(StationaryMode(
        w=w, b=spec.b, params=params, family=Family.of(Polarization.CIRCULAR, spec.sign),
    ))


def elliptic_mode_alpha1(spec: ExactModeSpec) -> StationaryMode:
    """
    Unequal-amplitude family of the zero-mismatch coupler:
    w1 = conj(w4) = rho e^{i phi}, w2 = conj(w3) = (-1 +- sqrt2) rho e^{-i phi}.

    sign + pairs with (-1 + sqrt2), rho^2 = (b - b~_+)/(4 - 2 sqrt2), phi = -arcsin(gamma/(sqrt2 k))/2;
    sign - pairs with (-1 - sqrt2), rho^2 = (b - b~_-)/(4 + 2 sqrt2), phi = +arcsin(gamma/(sqrt2 k))/2.
    """
    params = spec.params
    if params.alpha != 1:
        raise InvalidParametersError("The closed-form elliptic family exists for alpha = 1 only")
    if params.gamma > params.gamma_cr1:
        raise BrokenPhaseError(f"gamma = {params.gamma} > sqrt(2) k: arcsin argument exceeds 1")
    btilde = real_btilde(params, spec.sign)
    s = spec.sign.factor
    ratio = -1.0 + s * SQRT2
    rho_squared = (spec.b - btilde) / (4.0 - s * 2.0 * SQRT2)
    if rho_squared < 0:
        raise FamilyDoesNotExistError(
            f"family does not exist: elliptic{spec.sign.value} needs b >= {btilde}, got b = {spec.b}"
        )
    phi = -s * 0.5 * math.asin(min(params.gamma / (SQRT2 * params.k), 1.0))
    rho = math.sqrt(rho_squared)
    e = cmath.exp(1j * phi)
    w1 = rho * e
    w2 = ratio * rho * e.conjugate()
    w = field_state([w1, w2, w2.conjugate(), w1.conjugate()])
    return _check_residual(StationaryMode(
        w=w, b=spec.b, params=params, family=Family.of(Polarization.ELLIPTIC, spec.sign),
    ))


def exact_mode(polarization: Polarization, spec: ExactModeSpec) -> StationaryMode:
    if polarization is Polarization.CIRCULAR:
        return circular_mode(spec)
    elif polarization is Polarization.ELLIPTIC:
        return elliptic_mode_alpha1(spec)
    else:
        assert_never(polarization)
