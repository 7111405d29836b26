"""
Equations of motion of the birefringent PT coupler.

The dynamical equations are written by the physics convention as i du/dz = RHS(u); the stationary
equations with u = w exp(i b z) read b w = H w + F(w) w + (alpha/3) N(w) =: S(w). Since
RHS(u) = -S(u) for the autonomous limits, this module exposes du/dz = -i RHS = i S(u), which is what
the integrators consume.
"""
from typing import Optional

import numpy as np
import numpy.typing as npt
from typing_extensions import assert_never

from base.data_types import Axis
from base.errors import NonFiniteStateError
from base.params import CouplerParams, FieldState, GAIN_PATTERN, PARTNER, field_state, to_real


_CROSS_PHASE = 2.0 / 3.0
_FWM = 1.0 / 3.0

# Spatial reversal: site j <-> site 5 - j.
P_MATRIX = np.fliplr(np.eye(4))


def coupling_matrix(params: CouplerParams) -> npt.NDArray[np.complex128]:
    k = params.k
    g = 1j * params.gamma
    return np.array([
        [-g, k, 0, k],
        [k, g, -k, 0],
        [0, -k, -g, k],
        [k, 0, k, g],
    ], dtype=np.complex128)


def kerr_diagonal(w: npt.NDArray[np.complex128]) -> npt.NDArray[np.float64]:
    """Diagonal of F(w): self-phase |w_j|^2 plus cross-phase 2/3 |w_partner|^2."""
    intensities = np.abs(w) ** 2
    return intensities + _CROSS_PHASE * intensities[list(PARTNER)]


def four_wave_terms(w: npt.NDArray[np.complex128]) -> npt.NDArray[np.complex128]:
    """N_j = w_partner^2 conj(w_j)."""
    return w[list(PARTNER)] ** 2 * np.conj(w)


def _mismatch_phases(params: CouplerParams, z: float) -> npt.NDArray[np.complex128]:
    d1, d2 = params.delta1 * z, params.delta2 * z
    return np.exp(1j * np.array([d1, d2, -d1, -d2]))


def dynamic_fwm_factor(params: CouplerParams, z: float) -> Optional[npt.NDArray[np.complex128]]:
    """Per-site coefficient of the four-wave terms in the dynamics, None when they are dropped."""
    if params.alpha == 1:
        return np.full(4, _FWM, dtype=np.complex128)
    if params.keep_mismatch_terms:
        return _FWM * _mismatch_phases(params, z)
    return None


def stationary_operator(params: CouplerParams, w: npt.NDArray[np.complex128]) -> npt.NDArray[np.complex128]:
    result = coupling_matrix(params) @ w + kerr_diagonal(w) * w
    if params.alpha:
        result = result + params.stationary_fwm * four_wave_terms(w)
    return result


def rhs_raw(params: CouplerParams, z: float, u: npt.NDArray[np.complex128]) -> npt.NDArray[np.complex128]:
    """rhs_dynamic without validation, for the integrator loop."""
    s = coupling_matrix(params) @ u + kerr_diagonal(u) * u
    fwm = dynamic_fwm_factor(params, z)
    if fwm is not None:
        s = s + fwm * four_wave_terms(u)
    return 1j * s


def rhs_dynamic(params: CouplerParams, z: float, u: npt.ArrayLike) -> FieldState:
    """du/dz of the dynamical equations."""
    if not np.isfinite(z):
        raise NonFiniteStateError(f"Non-finite propagation distance {z}")
    return field_state(rhs_raw(params, z, field_state(u)))


def stationary_residual(params: CouplerParams, b: complex, w: npt.ArrayLike) -> npt.NDArray[np.complex128]:
    """S(w) - b w; vanishes iff w is a stationary mode with propagation constant b (b may be complex)."""
    state = field_state(w)
    if not np.isfinite(b):
        raise NonFiniteStateError(f"Non-finite propagation constant {b}")
    return stationary_operator(params, state) - b * state


def pt_apply(u: npt.ArrayLike) -> FieldState:
    return field_state(P_MATRIX @ np.conj(field_state(u)))


def power(u: npt.ArrayLike) -> float:
    return float(np.sum(np.abs(np.asarray(u)) ** 2))


def power_imbalance(params: CouplerParams, u: npt.ArrayLike) -> float:
    """Exact dU/dz along the dynamics; the four-wave terms cancel pairwise for any mismatch."""
    intensities = np.abs(np.asarray(u)) ** 2
    return float(2.0 * params.gamma * np.dot(GAIN_PATTERN, intensities))


def scalar_product(g: npt.ArrayLike, h: npt.ArrayLike) -> complex:
    """<g, h> = sum g_j conj(h_j)."""
    return complex(np.sum(np.asarray(g) * np.conj(np.asarray(h))))


def gauge_align(w: npt.ArrayLike, index: Optional[int] = None) -> FieldState:
    """Representative of the U(1) class of w with w[index] real and non-negative."""
    state = np.asarray(w, dtype=np.complex128)
    if index is None:
        index = int(np.argmax(np.abs(state)))
    phase = np.angle(state[index])
    return field_state(state * np.exp(-1j * phase))


def wirtinger_blocks(
        params: CouplerParams,
        b: complex,
        w: npt.NDArray[np.complex128],
) -> tuple[npt.NDArray[np.complex128], npt.NDArray[np.complex128]]:
    """dR = A dw + B conj(dw) for the stationary residual R."""
    a_block = coupling_matrix(params) - b * np.eye(4)
    b_block = np.zeros((4, 4), dtype=np.complex128)
    fwm = params.stationary_fwm
    for j in range(4):
        p = PARTNER[j]
        a_block[j, j] += 2.0 * abs(w[j]) ** 2 + _CROSS_PHASE * abs(w[p]) ** 2
        a_block[j, p] += _CROSS_PHASE * np.conj(w[p]) * w[j]
        b_block[j, j] += w[j] ** 2
        b_block[j, p] += _CROSS_PHASE * w[p] * w[j]
        if fwm:
            a_block[j, p] += fwm * 2.0 * w[p] * np.conj(w[j])
            b_block[j, j] += fwm * w[p] ** 2
    return a_block, b_block


def realify(a_block: npt.NDArray[np.complex128], b_block: npt.NDArray[np.complex128]) -> npt.NDArray[np.float64]:
    """Real matrix of dw -> A dw + B conj(dw) acting on (Re dw, Im dw)."""
    plus = a_block + b_block
    minus = a_block - b_block
    return np.block([
        [plus.real, -minus.imag],
        [plus.imag, minus.real],
    ])


def stationary_jacobian(params: CouplerParams, b: float, w: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """Analytic 8x8 Jacobian of the residual in the (Re w, Im w) layout."""
    return realify(*wirtinger_blocks(params, b, np.asarray(w, dtype=np.complex128)))


def residual_parameter_derivative(
        params: CouplerParams,
        b: float,
        w: npt.ArrayLike,
        axis: Axis,
) -> npt.NDArray[np.float64]:
    state = np.asarray(w, dtype=np.complex128)
    if axis is Axis.B:
        return to_real(-state)
    elif axis is Axis.GAMMA:
        return to_real(-1j * GAIN_PATTERN * state)
    else:
        assert_never(axis)
