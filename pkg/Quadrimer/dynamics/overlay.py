"""Shift fit between two power traces on a logarithmic scale."""
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
from scipy.optimize import minimize_scalar

from base.errors import TraceSupportError
from dynamics.evolution import EvolutionTrace

# Coarse scan before the bounded search; log-power misfits of oscillating traces have local minima.
SCAN_POINTS = 401


@dataclass(frozen=True)
class OverlayFit:
    shift: float
    misfit: float
    """Mean squared log-power difference per sample at the optimum."""


def _log_power(trace: EvolutionTrace) -> npt.NDArray[np.float64]:
    power = trace.U
    if np.any(power <= 0):
        raise TraceSupportError("Overlay needs strictly positive power")
    return np.log(power)


def overlay_shift_fit(trace_a: EvolutionTrace, trace_b: EvolutionTrace, window: tuple[float, float]) -> OverlayFit:
    """Shift s minimizing mean (log U_a(z) - log U_b(z - s))^2 over z in window."""
    z0, z1 = window
    if not z0 < z1:
        raise TraceSupportError(f"Empty overlay window {window}")
    if z0 < trace_a.z[0] or z1 > trace_a.z[-1]:
        raise TraceSupportError(f"Window {window} exceeds the support [{trace_a.z[0]}, {trace_a.z[-1]}] of the first trace")
    low, high = z1 - trace_b.z[-1], z0 - trace_b.z[0]
    if low > high:
        raise TraceSupportError(f"Second trace is too short to cover the window {window} at any shift")

    inside = (trace_a.z >= z0) & (trace_a.z <= z1)
    z = trace_a.z[inside]
    log_a = _log_power(trace_a)[inside]
    log_b = _log_power(trace_b)

    def misfit(shift: float) -> float:
        return float(np.mean((log_a - np.interp(z - shift, trace_b.z, log_b)) ** 2))

    if low == high:
        return OverlayFit(shift=low, misfit=misfit(low))
    candidates = np.linspace(low, high, SCAN_POINTS)
    best = int(np.argmin([misfit(s) for s in candidates]))
    bracket = (candidates[max(best - 1, 0)], candidates[min(best + 1, SCAN_POINTS - 1)])
    result = minimize_scalar(misfit, bounds=bracket, method="bounded", options={"xatol": 1e-8})
    shift = float(result.x)
    return OverlayFit(shift=shift, misfit=misfit(shift))
