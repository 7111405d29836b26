"""z-propagation of the coupler equations and classification of the resulting traces."""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Optional

import numpy as np
import numpy.typing as npt
from dataclasses_json import DataClassJsonMixin
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline
from scipy.signal import find_peaks

from base.data_types import RngSeed
from base.errors import ConvergenceError, InvalidParametersError, NonFiniteStateError
from base.params import CouplerParams, FieldState, GAIN_PATTERN, StationaryMode, field_state
from model.core import rhs_raw
from modes.ghost import GhostMode, ghost_field

# Default norm at which a trajectory counts as blown up. Kerr phases rotate at a rate proportional to the
# intensity, so an explicit integrator cannot follow unbounded growth much past this.
BLOWUP_NORM = 1e2
POWER_LAW_BOUND = 1e-6
# Power-law check samples the dense output this many times finer than the trace.
_DIAGNOSTIC_REFINEMENT = 10


class TraceStatus(Enum):
    COMPLETE = "complete"
    BLOWUP = "blowup"


class EvolutionKind(Enum):
    GAIN_GROWTH = "gain-growth"
    BREATHING = "breathing"
    OTHER = "other"


@dataclass(frozen=True)
class IntegratorSettings(DataClassJsonMixin):
    rtol: float = 1e-10
    atol: float = 1e-12
    samples_per_unit: int = 10
    method: str = "DOP853"
    blowup_norm: float = BLOWUP_NORM

    def validate(self) -> None:
        for name in ("rtol", "atol"):
            value = getattr(self, name)
            if not 1e-13 <= value <= 1e-3:
                raise InvalidParametersError(f"{name} must lie in [1e-13, 1e-3], got {value}")
        if self.samples_per_unit <= 0:
            raise InvalidParametersError(f"samples_per_unit must be positive, got {self.samples_per_unit}")
        if not self.blowup_norm > 0:
            raise InvalidParametersError(f"blowup_norm must be positive, got {self.blowup_norm}")


@dataclass(frozen=True, eq=False)
class EvolutionTrace:
    z: npt.NDArray[np.float64]
    fields: npt.NDArray[np.complex128]
    """One row of four complex amplitudes per sample."""
    status: TraceStatus = TraceStatus.COMPLETE
    meta: dict[str, Any] = field(default_factory=dict)

    @property
    def intensities(self) -> npt.NDArray[np.float64]:
        return np.abs(self.fields) ** 2

    @property
    def U(self) -> npt.NDArray[np.float64]:
        return np.sum(self.intensities, axis=1)

    @property
    def blowup_z(self) -> Optional[float]:
        return self.meta.get("blowup_z")


def _sample_grid(z_max: float, samples_per_unit: int) -> npt.NDArray[np.float64]:
    return np.linspace(0.0, z_max, int(round(z_max * samples_per_unit)) + 1)


def power_law_defect(params: CouplerParams, z: npt.NDArray[np.float64], fields: npt.NDArray[np.complex128]) -> float:
    """max |dU/dz - 2 gamma (gain - loss)| / max(1, U), dU/dz from a cubic spline of the samples."""
    if len(z) < 4:
        return 0.0
    power = np.sum(np.abs(fields) ** 2, axis=1)
    slope = CubicSpline(z, power).derivative()(z)
    expected = 2.0 * params.gamma * (np.abs(fields) ** 2 @ GAIN_PATTERN)
    return float(np.max(np.abs(slope - expected) / np.maximum(1.0, power)))


def integrate(
        params: CouplerParams,
        u0: npt.ArrayLike,
        z_max: float,
        settings: IntegratorSettings = IntegratorSettings(),
        description: str = "",
) -> EvolutionTrace:
    """Adaptive DOP853 run sampled on a uniform grid; a trajectory whose norm passes blowup_norm is cut there."""
    if not z_max > 0:
        raise InvalidParametersError(f"z_max must be positive, got {z_max}")
    settings.validate()
    start = np.array(field_state(u0))

    def blowup(z: float, u: npt.NDArray[np.complex128]) -> float:
        return float(np.linalg.norm(u)) - settings.blowup_norm

    blowup.terminal = True  # type: ignore[attr-defined]
    blowup.direction = 1.0  # type: ignore[attr-defined]

    solution = solve_ivp(
        lambda z, u: rhs_raw(params, z, u),
        (0.0, z_max),
        start,
        method=settings.method,
        rtol=settings.rtol,
        atol=settings.atol,
        dense_output=True,
        events=blowup,
    )
    if solution.status == -1:
        raise ConvergenceError(f"Integration failed: {solution.message}")

    end = z_max
    status = TraceStatus.COMPLETE
    meta: dict[str, Any] = {
        "params": params.to_dict(),
        "initial": description,
        "integrator": settings.to_dict(),
        "z_max": z_max,
    }
    if solution.status == 1:
        end = float(solution.t_events[0][0])
        status = TraceStatus.BLOWUP
        meta["blowup_z"] = end
        logging.info(f"integrate: blowup at z={end:.6g}")

    grid = _sample_grid(z_max, settings.samples_per_unit)
    grid = grid[grid <= end]
    fields = np.asarray(solution.sol(grid)).T
    if not np.all(np.isfinite(fields)):
        raise NonFiniteStateError("Integrator produced non-finite samples")

    fine = np.linspace(0.0, end, max(4, (len(grid) - 1) * _DIAGNOSTIC_REFINEMENT + 1))
    defect = power_law_defect(params, fine, np.asarray(solution.sol(fine)).T)
    meta["power_law_defect"] = defect
    if defect > POWER_LAW_BOUND:
        logging.warning(f"integrate: power law violated by {defect:.3e} (bound {POWER_LAW_BOUND})")

    return EvolutionTrace(z=grid, fields=fields, status=status, meta=meta)


def perturb(mode: StationaryMode, eps: float, rng_seed: RngSeed) -> FieldState:
    """w + eps r with r a unit complex vector drawn from rng_seed."""
    if eps < 0:
        raise InvalidParametersError(f"Perturbation size must be non-negative, got {eps}")
    rng = np.random.default_rng(rng_seed)
    direction = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    direction /= np.linalg.norm(direction)
    return field_state(mode.w + eps * direction)


def classify_evolution(
    trace: EvolutionTrace,
    growth_factor: float = 1e3,
    balance_tol: float = 0.05,
    decay_fraction: float = 0.5,
    oscillation_tol: float = 1e-6,
) -> EvolutionKind:
    """Sorts a trace into the two scenarios seen around unstable modes.

    Gain growth: the power escapes (blowup, or a growth_factor increase) while |u1|^2 and |u3|^2
    stay within balance_tol of each other and both lossy sites have fallen to decay_fraction of
    their peak. Breathing: the power stays bounded by growth_factor and oscillates, with at least
    two maxima of relative prominence oscillation_tol. Anything else is OTHER.
    """
    power = trace.U
    intensities = trace.intensities
    final = intensities[-1]
    gain, loss = GAIN_PATTERN > 0, GAIN_PATTERN < 0
    escaped = trace.status is TraceStatus.BLOWUP or power[-1] > growth_factor * power[0]
    if escaped:
        first, second = final[gain]
        balanced = min(first, second) > 0 and abs(first / second - 1.0) <= balance_tol
        decayed = bool(np.all(final[loss] <= decay_fraction * np.max(intensities[:, loss], axis=0)))
        if balanced and decayed and final[loss].sum() < final[gain].sum():
            return EvolutionKind.GAIN_GROWTH
        return EvolutionKind.OTHER
    if np.max(power) > growth_factor * power[0]:
        return EvolutionKind.OTHER
    peaks, _ = find_peaks(power, prominence=oscillation_tol * float(np.mean(power)))
    if len(peaks) >= 2:
        return EvolutionKind.BREATHING
    return EvolutionKind.OTHER


@dataclass(frozen=True, eq=False)
class SweepResult:
    rng_seed: RngSeed
    trace: EvolutionTrace
    kind: EvolutionKind


def seed_sweep(
        mode: StationaryMode,
        eps: float,
        seeds: Iterable[int],
        z_max: float,
        settings: IntegratorSettings = IntegratorSettings(),
        workers: int = 1,
) -> list[SweepResult]:
    """One perturbed run per seed, results in seed order."""
    def run(seed: int) -> SweepResult:
        rng_seed = RngSeed(seed)
        trace = integrate(mode.params, perturb(mode, eps, rng_seed), z_max, settings,
                          description=f"{mode.family.tag} at b={mode.b} + {eps} * r(seed={seed})")
        return SweepResult(rng_seed=rng_seed, trace=trace, kind=classify_evolution(trace))

    seed_list = list(seeds)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        results = list(executor.map(run, seed_list))
    counts = {kind: sum(1 for r in results if r.kind is kind) for kind in EvolutionKind}
    logging.info(f"seed_sweep: {', '.join(f'{k.value}={n}' for k, n in counts.items())}")
    return results


def ghost_trace(g: GhostMode, z_max: float, samples_per_unit: int = 10) -> EvolutionTrace:
    """u(z) = w e^{i b z} of a ghost, the closed-form trace its evolution is compared with."""
    grid = _sample_grid(z_max, samples_per_unit)
    fields = np.outer(np.exp(1j * g.b * grid), ghost_field(g))
    meta = {"params": g.params.to_dict(), "initial": f"ghost b={g.b}", "z_max": z_max}
    return EvolutionTrace(z=grid, fields=fields, meta=meta)
