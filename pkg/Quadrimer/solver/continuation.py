"""
Predictor-corrector continuation of stationary modes in b or gamma.

The unknown is X = (Re w, Im w, p) with the gauge Im(w_m) = 0. Steps are natural-parameter steps
(p fixed, Newton in w) while the tangent's parameter component is large; near folds the corrector
switches to pseudo-arclength, where the extra row t . (X - X_pred) = 0 replaces fixing p.
"""
from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
import numpy.typing as npt
from dataclasses_json import DataClassJsonMixin
from typing_extensions import assert_never

from base.data_types import Axis, Family, Polarization
from base.errors import ConvergenceError, DegeneratePointError, InvalidParametersError, StepUnderflowError
from base.params import CouplerParams, StationaryMode, field_state, from_real, to_real
from model.core import power, residual_parameter_derivative, stationary_jacobian, stationary_residual
from solver.newton import NewtonSettings, gauss_newton, newton_solve
from solver.stability import StabilityReport, stability_report

Vector = npt.NDArray[np.float64]


class Termination(Enum):
    FOLD = "fold"
    BOUNDARY = "boundary"
    EXISTENCE_LOST = "existence-lost"
    MAX_STEPS = "max-steps"


@dataclass(frozen=True)
class ContinuationOptions(DataClassJsonMixin):
    initial_step: float = 0.01
    min_step: float = 1e-8
    max_step: float = 0.05
    max_steps: int = 2000
    arclength_switch: float = 0.1
    """Switch to pseudo-arclength once |tangent_param| falls below this."""
    stop_at_fold: bool = True
    min_power: float = 1e-10
    """Below this power the branch has shrunk into the linear limit."""
    jump_factor: float = 3.0
    """An accepted point may lie at most jump_factor * step from its predecessor."""
    newton_tol: float = 1e-12
    merge_spread: float = 1e-3
    """An elliptic branch whose moduli spread drops below this has merged into a circular one."""


@dataclass(frozen=True, eq=False)
class BranchPoint:
    param: float
    mode: StationaryMode
    tangent_param: float
    stability: Optional[StabilityReport] = None

    @property
    def U(self) -> float:
        return power(self.mode.w)

    @property
    def amplitudes(self) -> npt.NDArray[np.float64]:
        return self.mode.amplitudes()

    @property
    def phase_diffs(self) -> npt.NDArray[np.float64]:
        return self.mode.phase_diffs()


@dataclass(frozen=True, eq=False)
class BranchCurve:
    label: str
    axis: Axis
    points: list[BranchPoint] = field(default_factory=list)
    termination: Termination = Termination.MAX_STEPS

    @property
    def params(self) -> npt.NDArray[np.float64]:
        return np.array([point.param for point in self.points])


def parameter_point(params: CouplerParams, b: float, axis: Axis, p: float) -> tuple[CouplerParams, float]:
    """(params, b) with the active parameter set to p."""
    if axis is Axis.B:
        return params, p
    elif axis is Axis.GAMMA:
        return params.with_gamma(p), b
    else:
        assert_never(axis)


def active_parameter(mode: StationaryMode, axis: Axis) -> float:
    if axis is Axis.B:
        return mode.b
    elif axis is Axis.GAMMA:
        return mode.params.gamma
    else:
        assert_never(axis)


class _System:
    """Residual and Jacobian of the extended system at fixed gauge index."""

    def __init__(self, params: CouplerParams, b: float, axis: Axis, gauge_index: int):
        self.params = params
        self.b = b
        self.axis = axis
        self.gauge = np.zeros(9)
        self.gauge[4 + gauge_index] = 1.0

    def at(self, p: float) -> tuple[CouplerParams, float]:
        return parameter_point(self.params, self.b, self.axis, p)

    def residual(self, x: Vector) -> Vector:
        params, b = self.at(x[8])
        return np.append(to_real(stationary_residual(params, b, from_real(x[:8]))), self.gauge @ x)

    def jacobian(self, x: Vector) -> npt.NDArray[np.float64]:
        params, b = self.at(x[8])
        w = from_real(x[:8])
        top = np.column_stack([
            stationary_jacobian(params, b, w),
            residual_parameter_derivative(params, b, w, self.axis),
        ])
        return np.vstack([top, self.gauge])

    def tangent(self, x: Vector) -> Vector:
        """Unit null vector of the 9x9 Jacobian."""
        _, _, vh = np.linalg.svd(self.jacobian(x))
        return np.array(vh[-1])

    def mode(self, x: Vector, family: Family) -> StationaryMode:
        params, b = self.at(x[8])
        return StationaryMode(w=field_state(from_real(x[:8])), b=b, params=params, family=family)


def _merged(mode: StationaryMode, opts: ContinuationOptions) -> bool:
    if mode.family.value.polarization is not Polarization.ELLIPTIC:
        return False
    amplitudes = mode.amplitudes()
    return float(np.max(amplitudes) - np.min(amplitudes)) < opts.merge_spread


def _natural_correct(system: _System, x_pred: Vector, settings: NewtonSettings) -> tuple[Vector, int]:
    p = x_pred[8]

    def func(y: Vector) -> Vector:
        return system.residual(np.append(y, p))

    def jac(y: Vector) -> npt.NDArray[np.float64]:
        return system.jacobian(np.append(y, p))[:, :8]

    y, iterations = gauss_newton(func, jac, x_pred[:8], settings)
    return np.append(y, p), iterations


def _arclength_correct(
        system: _System,
        x_pred: Vector,
        tangent: Vector,
        settings: NewtonSettings,
) -> tuple[Vector, int]:
    def func(x: Vector) -> Vector:
        return np.append(system.residual(x), tangent @ (x - x_pred))

    def jac(x: Vector) -> npt.NDArray[np.float64]:
        return np.vstack([system.jacobian(x), tangent])

    return gauss_newton(func, jac, x_pred, settings)


def continue_branch(
        params: CouplerParams,
        axis: Axis,
        param_range: tuple[float, float],
        seed: StationaryMode,
        opts: ContinuationOptions = ContinuationOptions(),
        label: Optional[str] = None,
) -> BranchCurve:
    """Follows the branch through seed from param_range[0] towards param_range[1]."""
    start, end = param_range
    if start == end:
        raise InvalidParametersError("Empty continuation range")
    direction = 1.0 if end > start else -1.0
    low, high = min(start, end), max(start, end)
    settings = NewtonSettings(tol=opts.newton_tol)
    family = seed.family
    tag = label or family.tag

    base_params, base_b = parameter_point(params, seed.b, axis, start)
    first = newton_solve(base_params, base_b, seed.w, family=family, settings=settings)
    gauge_index = int(np.argmax(np.abs(first.w)))
    system = _System(params, seed.b, axis, gauge_index)

    x = np.append(to_real(first.w), start)
    tangent = system.tangent(x)
    if tangent[8] * direction < 0 or (tangent[8] == 0 and tangent[:8] @ x[:8] < 0):
        tangent = -tangent

    points = [BranchPoint(param=start, mode=first, tangent_param=float(tangent[8]))]
    step = opts.initial_step
    termination = Termination.MAX_STEPS

    for _ in range(opts.max_steps):
        arclength = abs(tangent[8]) < opts.arclength_switch
        x_pred = x + step * tangent
        if not arclength:
            dp = step * direction
            x_pred = x + (dp / tangent[8]) * tangent

        at_boundary = not low <= x_pred[8] <= high
        if at_boundary:
            if arclength:
                termination = Termination.BOUNDARY
                break
            # Land exactly on the range end with a natural step.
            bound = high if x_pred[8] > high else low
            x_pred = x + ((bound - x[8]) / tangent[8]) * tangent
            x_pred[8] = bound

        try:
            if arclength:
                x_new, iterations = _arclength_correct(system, x_pred, tangent, settings)
            else:
                x_new, iterations = _natural_correct(system, x_pred, settings)
            jump = float(np.linalg.norm(x_new - x))
            bound = opts.jump_factor * float(np.linalg.norm(x_pred - x))
            if jump > bound:
                raise ConvergenceError(f"corrector jumped {jump:.3e}, trust bound {bound:.3e}")
        except (ConvergenceError, DegeneratePointError, InvalidParametersError) as e:
            step /= 2
            logging.debug(f"continue_branch {tag}: step rejected at p={x[8]:.6f} ({e}), step -> {step:.3e}")
            if step < opts.min_step:
                raise StepUnderflowError(
                    f"Step fell below {opts.min_step} at {axis.value}={x[8]:.10f} on {tag}"
                ) from e
            continue

        secant = x_new - x
        new_tangent = secant / np.linalg.norm(secant)
        mode = system.mode(x_new, family)
        points.append(BranchPoint(param=float(x_new[8]), mode=mode, tangent_param=float(new_tangent[8])))
        folded = new_tangent[8] * tangent[8] < 0 and abs(new_tangent[8] - tangent[8]) > 1e-12
        if folded:
            direction = -direction
        x, tangent = x_new, new_tangent

        if mode.power < opts.min_power or _merged(mode, opts):
            termination = Termination.EXISTENCE_LOST
            break
        if folded and opts.stop_at_fold:
            termination = Termination.FOLD
            break
        if at_boundary:
            termination = Termination.BOUNDARY
            break
        if iterations <= 3:
            step = min(step * 1.5, opts.max_step)

    logging.info(f"continue_branch {tag}: {len(points)} points, terminated by {termination.value}")
    return BranchCurve(label=tag, axis=axis, points=points, termination=termination)


def attach_stability(curve: BranchCurve) -> BranchCurve:
    points = [dataclasses.replace(point, stability=stability_report(point.mode)) for point in curve.points]
    return dataclasses.replace(curve, points=points)
