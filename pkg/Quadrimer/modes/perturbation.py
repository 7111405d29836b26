"""
Small-amplitude theory of the nonlinear families growing out of the double eigenvalues of H.

Near the linear limit w = eps w~(theta) + O(eps^3), b = b~ + eps^2 B2 + O(eps^4). The circular root
theta makes w~ an eigenvector of the Kerr matrix F(w~) = 5/3 I; any other admissible theta must satisfy
the solvability conditions against both PT eigenvectors of the transposed problem, which are the
orthogonal pair itself because H is symmetric.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import numpy.typing as npt
from dataclasses_json import DataClassJsonMixin
from scipy.optimize import brentq
from typing_extensions import assert_never

from base.data_types import Polarization, Sign
from base.errors import DegeneratePointError, FamilyDoesNotExistError, InvalidParametersError
from base.params import CouplerParams, FieldState, field_state
from model.core import kerr_diagonal, scalar_product
from model.linear import orthogonal_pair, pt_eigenvector, real_btilde

CIRCULAR_B2 = 5.0 / 3.0
CIRCULAR_NORM = 4.0
SCAN_RESOLUTION = 1e-3
ROOT_XTOL = 1e-12
# Below this spread of |w~_j| a root is the circular one, not an elliptic family.
_CIRCULAR_SPREAD = 1e-6


@dataclass(frozen=True)
class BifurcationPrediction(DataClassJsonMixin):
    btilde: float
    theta: float
    B2: float
    slope: float
    """dU/db at the bifurcation point."""
    family: Polarization


def theta_circular(btilde: float, gamma: float) -> float:
    """theta = pi/8 - arctan(btilde/gamma)/2, with arctan(+-inf) = +-pi/2 at gamma = 0."""
    if btilde == 0 and gamma == 0:
        raise InvalidParametersError("theta_circular is undefined for btilde = gamma = 0")
    return math.pi / 8 - 0.5 * math.atan2(btilde, gamma)


def B2_circular() -> float:
    return CIRCULAR_B2


def _require_alpha0(params: CouplerParams) -> None:
    if params.alpha != 0:
        raise InvalidParametersError("The solvability analysis covers the alpha = 0 limit only")


def _bilinear(g: npt.NDArray[np.complex128], h: npt.NDArray[np.complex128]) -> complex:
    """<g, conj(h)> = sum g_j h_j."""
    return scalar_product(g, np.conj(h))


def _quotient_parts(
        params: CouplerParams,
        btilde: float,
        theta: float,
) -> tuple[tuple[complex, complex], tuple[complex, complex]]:
    """Numerators <F w~ w~, conj(w^(j))> and denominators <w~, conj(w^(j))> for j = 1, 2."""
    v = pt_eigenvector(params, btilde, theta).v
    nonlinear = kerr_diagonal(v) * v
    first, second = orthogonal_pair(params, btilde)
    numerators = (_bilinear(nonlinear, first.v), _bilinear(nonlinear, second.v))
    denominators = (_bilinear(v, first.v), _bilinear(v, second.v))
    return numerators, denominators


def B2_solvability(params: CouplerParams, btilde: float, theta: float) -> tuple[complex, complex]:
    """Both Rayleigh-type quotients of the solvability conditions; equal and real at an admissible theta."""
    _require_alpha0(params)
    numerators, denominators = _quotient_parts(params, btilde, theta)
    for j, denominator in enumerate(denominators):
        if abs(denominator) < 1e-12:
            raise DegeneratePointError(f"Solvability denominator {j + 1} vanishes at theta = {theta}")
    return numerators[0] / denominators[0], numerators[1] / denominators[1]


def _cross_mismatch(params: CouplerParams, btilde: float, theta: float) -> float:
    """n1 d2 - n2 d1: pole-free form of (quotient 1 - quotient 2); both terms are real for PT-symmetric w~."""
    (n1, n2), (d1, d2) = _quotient_parts(params, btilde, theta)
    return float((n1 * d2 - n2 * d1).real)


def _is_circular(params: CouplerParams, btilde: float, theta: float) -> bool:
    moduli = np.abs(pt_eigenvector(params, btilde, theta).v)
    return float(moduli.max() - moduli.min()) < _CIRCULAR_SPREAD


def elliptic_roots(params: CouplerParams, btilde: float) -> list[float]:
    """All non-circular roots theta in [0, pi) of the first solvability equality."""
    _require_alpha0(params)
    if params.gamma <= 0:
        raise InvalidParametersError("The elliptic analysis needs gamma > 0")
    if params.gamma > params.gamma_cr2:
        return []

    grid = np.arange(0.0, math.pi + SCAN_RESOLUTION, SCAN_RESOLUTION)
    values = np.array([_cross_mismatch(params, btilde, t) for t in grid])
    roots: list[float] = []
    for i in range(len(grid) - 1):
        left, right = values[i], values[i + 1]
        if left == 0:
            root = float(grid[i])
        elif left * right < 0:
            try:
                root = float(brentq(lambda t: _cross_mismatch(params, btilde, t), grid[i], grid[i + 1], xtol=ROOT_XTOL))
            except (RuntimeError, ValueError) as e:
                raise DegeneratePointError(f"Root refinement failed in [{grid[i]}, {grid[i + 1]}]: {e}") from e
        else:
            continue
        root = root % math.pi
        if _is_circular(params, btilde, root):
            continue
        if any(abs(root - r) < 10 * SCAN_RESOLUTION or abs(abs(root - r) - math.pi) < 10 * SCAN_RESOLUTION
               for r in roots):
            continue
        roots.append(root)

    logging.debug(f"elliptic roots for gamma={params.gamma}, btilde={btilde}: {roots}")
    return roots


def elliptic_root(params: CouplerParams) -> Optional[float]:
    """First elliptic root for b~_+, or None above the secondary critical point gamma = k."""
    roots = elliptic_roots(params, real_btilde(params, Sign.PLUS))
    return roots[0] if roots else None


def elliptic_B2(params: CouplerParams, btilde: float, theta: float) -> complex:
    """B2 at an elliptic root, taken from the better conditioned quotient."""
    numerators, denominators = _quotient_parts(params, btilde, theta)
    j = 0 if abs(denominators[0]) >= abs(denominators[1]) else 1
    return numerators[j] / denominators[j]


def predict(params: CouplerParams, sign: Sign, polarization: Polarization) -> BifurcationPrediction:
    btilde = real_btilde(params, sign)
    if polarization is Polarization.CIRCULAR:
        theta = theta_circular(btilde, params.gamma)
        b2 = CIRCULAR_B2
    elif polarization is Polarization.ELLIPTIC:
        roots = elliptic_roots(params, btilde)
        if not roots:
            raise FamilyDoesNotExistError(
                f"No elliptic family bifurcates from {btilde} at gamma = {params.gamma} (gamma_cr2 = {params.gamma_cr2})"
            )
        theta = roots[0]
        b2 = elliptic_B2(params, btilde, theta).real
    else:
        assert_never(polarization)
    v = pt_eigenvector(params, btilde, theta).v
    norm = scalar_product(v, v).real
    return BifurcationPrediction(btilde=btilde, theta=theta, B2=b2, slope=norm / b2, family=polarization)


def seed_from_prediction(prediction: BifurcationPrediction, params: CouplerParams, b: float) -> FieldState:
    """Leading-order mode eps w~(theta) at propagation constant b, eps = sqrt((b - b~)/B2)."""
    eps_squared = (b - prediction.btilde) / prediction.B2
    if eps_squared <= 0:
        raise FamilyDoesNotExistError(f"b = {b} lies on the wrong side of b~ = {prediction.btilde} for this family")
    v = pt_eigenvector(params, prediction.btilde, prediction.theta).v
    return field_state(math.sqrt(eps_squared) * v)
