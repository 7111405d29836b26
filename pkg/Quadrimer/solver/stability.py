"""
Linear stability of stationary modes in the frame rotating with e^{i b z}.

Writing u = e^{i b z} (w + eps), the linearized flow is d eps/dz = i (A eps + B conj(eps)) with the
Wirtinger blocks of the stationary residual, i.e. the real matrix Omega @ J with Omega = [[0, -I], [I, 0]].
"""
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from base.errors import InvalidParametersError
from base.params import StationaryMode
from model.core import stationary_jacobian, stationary_residual
from model.eigen import eigen_numeric

GROWTH_TOL = 1e-8
GAUGE_TOL = 1e-6
MODE_RESIDUAL_TOL = 1e-10

_OMEGA = np.block([
    [np.zeros((4, 4)), -np.eye(4)],
    [np.eye(4), np.zeros((4, 4))],
])


@dataclass(frozen=True, eq=False)
class StabilityReport:
    eigenvalues: npt.NDArray[np.complex128]
    max_growth: float
    """Largest Re lambda outside the gauge pair."""
    n_unstable: int
    """Eigenvalues with Re > GROWTH_TOL; a real +-lambda pair contributes one."""
    stable: bool


def linearization_matrix(mode: StationaryMode) -> npt.NDArray[np.float64]:
    params = mode.params
    if not params.autonomous:
        raise InvalidParametersError("Linearization needs an autonomous system: drop the mismatch terms")
    residual = float(np.max(np.abs(stationary_residual(params, mode.b, mode.w))))
    if residual > MODE_RESIDUAL_TOL * max(1.0, abs(mode.b)):
        raise InvalidParametersError(f"Not a stationary mode: residual {residual:.3e}")
    return _OMEGA @ stationary_jacobian(params, mode.b, mode.w)


def stability_report(mode: StationaryMode) -> StabilityReport:
    eigenvalues = eigen_numeric(linearization_matrix(mode))
    counted = eigenvalues[np.abs(eigenvalues) >= GAUGE_TOL]
    # The gauge Jordan pair splits to O(sqrt(eps)) and is not growth.
    max_growth = float(np.max(counted.real)) if counted.size else 0.0
    n_unstable = int(np.count_nonzero(counted.real > GROWTH_TOL))
    return StabilityReport(
        eigenvalues=eigenvalues,
        max_growth=max_growth,
        n_unstable=n_unstable,
        stable=n_unstable == 0,
    )
