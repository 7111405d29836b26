"""
Damped Gauss-Newton for the stationary equations.

U(1) invariance makes the 8x8 real Jacobian singular along i*w at every solution, and with gain and
loss one residual row is then linearly dependent on the others. The gauge row Im(w_m) = 0 is appended
and the 9x8 consistent system is solved in the least-squares sense, which converges quadratically
at regular solutions.
"""
import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import numpy.typing as npt
from dataclasses_json import DataClassJsonMixin

from base.data_types import Family
from base.errors import ConvergenceError, DegeneratePointError, InvalidParametersError
from base.params import CouplerParams, StationaryMode, field_state, from_real, to_real
from model.core import gauge_align, stationary_jacobian, stationary_residual

Vector = npt.NDArray[np.float64]
Matrix = npt.NDArray[np.float64]


@dataclass(frozen=True)
class NewtonSettings(DataClassJsonMixin):
    tol: float = 1e-12
    """Infinity norm of the residual."""
    max_iterations: int = 50
    min_damping: float = 1.0 / 1024
    armijo: float = 1e-4
    singular_ratio: float = 1e-13
    """Smallest/largest singular value below which the augmented Jacobian counts as rank deficient."""


DEFAULT_NEWTON = NewtonSettings()


def gauss_newton(
        func: Callable[[Vector], Vector],
        jac: Callable[[Vector], Matrix],
        x0: Vector,
        settings: NewtonSettings = DEFAULT_NEWTON,
) -> tuple[Vector, int]:
    """Damped Gauss-Newton with Armijo halving; returns the root and the number of iterations used."""
    x = np.array(x0, dtype=np.float64)
    f = func(x)
    for iteration in range(settings.max_iterations + 1):
        residual = float(np.max(np.abs(f)))
        if residual < settings.tol:
            return x, iteration
        if iteration == settings.max_iterations:
            break

        jacobian = jac(x)
        step, _, _, singular_values = np.linalg.lstsq(jacobian, -f, rcond=None)
        if singular_values[-1] <= settings.singular_ratio * singular_values[0]:
            raise DegeneratePointError(
                f"Jacobian is singular beyond the gauge direction (sigma_min/sigma_max = "
                f"{singular_values[-1] / singular_values[0]:.2e})"
            )

        norm = float(np.linalg.norm(f))
        damping = 1.0
        while damping >= settings.min_damping:
            candidate = x + damping * step
            f_candidate = func(candidate)
            if np.linalg.norm(f_candidate) <= (1.0 - settings.armijo * damping) * norm:
                x, f = candidate, f_candidate
                break
            damping /= 2
        else:
            if residual < 1e3 * settings.tol:
                # Rounding floor reached just above the target.
                logging.debug(f"gauss_newton: accepting residual {residual:.2e} at the rounding floor")
                return x, iteration
            raise ConvergenceError(f"Line search failed at residual {residual:.3e} (iteration {iteration})")

    raise ConvergenceError(
        f"No convergence in {settings.max_iterations} iterations (residual {float(np.max(np.abs(f))):.3e})"
    )


def _gauge_row(index: int) -> Vector:
    row = np.zeros(8)
    row[4 + index] = 1.0
    return row


def newton_solve(
        params: CouplerParams,
        b: float,
        w0: npt.ArrayLike,
        family: Family = Family.NUMERIC,
        settings: NewtonSettings = DEFAULT_NEWTON,
        gauge_index: Optional[int] = None,
) -> StationaryMode:
    """Stationary mode near w0 with Im(w_m) = 0, m the largest-modulus component of w0 unless given."""
    seed = field_state(w0)
    if not np.any(seed):
        raise InvalidParametersError("Newton needs a non-zero seed: w = 0 solves the equations trivially")
    index = int(np.argmax(np.abs(seed))) if gauge_index is None else gauge_index
    gauge = _gauge_row(index)

    def func(x: Vector) -> Vector:
        return np.append(to_real(stationary_residual(params, b, from_real(x))), x[4 + index])

    def jac(x: Vector) -> Matrix:
        return np.vstack([stationary_jacobian(params, b, from_real(x)), gauge])

    x, iterations = gauss_newton(func, jac, to_real(gauge_align(seed, index)), settings)
    logging.debug(f"newton_solve: b={b}, {params} converged in {iterations} iterations")
    return StationaryMode(w=field_state(from_real(x)), b=b, params=params, family=family)
