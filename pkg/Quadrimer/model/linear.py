from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
from scipy.optimize import brentq

from base.data_types import Sign
from base.errors import BrokenPhaseError, InvalidParametersError
from base.params import CouplerParams, FieldState, field_state
from model.core import coupling_matrix
from model.eigen import eigen_numeric

# Largest imaginary part still read as numerical noise of a real spectrum.
_PHASE_NOISE = 1e-6


@dataclass(frozen=True)
class LinearSpectrum:
    b_plus: complex
    b_minus: complex
    broken: bool
    gamma_cr1: float

    def btilde(self, sign: Sign) -> complex:
        return self.b_plus if sign is Sign.PLUS else self.b_minus


@dataclass(frozen=True, eq=False)
class PTEigenvector:
    theta: float
    btilde: float
    v: FieldState


def build_H(params: CouplerParams) -> npt.NDArray[np.complex128]:
    return coupling_matrix(params)


def eigenvalues_closed(params: CouplerParams) -> LinearSpectrum:
    """The two double eigenvalues +-sqrt(2k^2 - gamma^2); principal branch +-i sqrt(gamma^2 - 2k^2) above threshold."""
    radicand = 2.0 * params.k ** 2 - params.gamma ** 2
    broken = params.gamma > params.gamma_cr1
    if broken:
        root = 1j * math.sqrt(-radicand)
    else:
        root = complex(math.sqrt(max(radicand, 0.0)))
    return LinearSpectrum(b_plus=root, b_minus=-root, broken=broken, gamma_cr1=params.gamma_cr1)


def real_btilde(params: CouplerParams, sign: Sign) -> float:
    spectrum = eigenvalues_closed(params)
    if spectrum.broken:
        raise BrokenPhaseError(
            f"gamma = {params.gamma} exceeds the PT-breaking point {spectrum.gamma_cr1}: no real linear eigenvalue"
        )
    return spectrum.btilde(sign).real


def _require_real_eigenvalue(params: CouplerParams, btilde: float) -> None:
    if params.gamma > params.gamma_cr1:
        raise BrokenPhaseError(f"PT-eigenvector family undefined in the broken phase (gamma = {params.gamma})")
    expected = math.sqrt(max(2.0 * params.k ** 2 - params.gamma ** 2, 0.0))
    if not math.isclose(abs(btilde), expected, rel_tol=1e-9, abs_tol=1e-12):
        raise InvalidParametersError(f"{btilde} is not an eigenvalue of H (expected +-{expected})")


def pt_eigenvector(params: CouplerParams, btilde: float, theta: float) -> PTEigenvector:
    """Member w~(theta) of the PT-symmetric eigenvectors of the double eigenvalue btilde, a = exp(i theta)."""
    _require_real_eigenvalue(params, btilde)
    k, gamma = params.k, params.gamma
    a = cmath.exp(1j * theta)
    ac = a.conjugate()
    v = field_state([
        ac,
        1j * ac * (gamma - 1j * btilde) / k - a,
        -1j * a * (gamma + 1j * btilde) / k - ac,
        a,
    ])
    return PTEigenvector(theta=theta, btilde=btilde, v=v)


def orthogonal_pair(params: CouplerParams, btilde: float) -> tuple[PTEigenvector, PTEigenvector]:
    """w~(0) and w~(arctan((2k - btilde)/gamma)), orthogonal in <g, h> = sum g_j conj(h_j)."""
    if params.gamma == 0:
        # Every pair is admissible here; there is no canonical second angle.
        raise InvalidParametersError("The orthogonal PT pair needs gamma > 0")
    theta2 = math.atan((2.0 * params.k - btilde) / params.gamma)
    return pt_eigenvector(params, btilde, 0.0), pt_eigenvector(params, btilde, theta2)


def _max_imaginary_part(k: float, gamma: float) -> float:
    values = eigen_numeric(build_H(CouplerParams(k=k, gamma=gamma)))
    return float(np.max(np.abs(values.imag)))


def pt_breaking_point(k: float, xtol: float = 1e-12) -> float:
    """Gain where the numerically computed spectrum of H leaves the real axis."""
    return float(brentq(lambda gamma: _max_imaginary_part(k, gamma) - _PHASE_NOISE, 0.0, 2.0 * k, xtol=xtol))
