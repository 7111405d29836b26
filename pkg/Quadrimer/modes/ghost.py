"""
Ghost states: stationary solutions with complex propagation constant b = B e^{i phi_b} under the
ansatz w3 = i w1, w4 = i w2, w_j = c_j e^{i phi_j}.

With kappa = (5 - alpha)/3 the ansatz reduces the stationary equations to
    b = k(1+i)(c2/c1) e^{i dphi} - i gamma + kappa c1^2
    b = k(1-i)(c1/c2) e^{-i dphi} + i gamma + kappa c2^2,
one complex equation short of fixing b; a pin (|b| or Re b held) closes the system.
"""
from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import numpy.typing as npt
from typing_extensions import assert_never

from base.data_types import GhostPin, Sign
from base.errors import (
    ConvergenceError,
    DegeneratePointError,
    FamilyDoesNotExistError,
    InvalidParametersError,
    SpuriousRootError,
    StepUnderflowError,
)
from base.params import CouplerParams, FieldState, StationaryMode, field_state
from model.core import rhs_dynamic, stationary_residual, wirtinger_blocks
from solver.continuation import Termination
from solver.newton import NewtonSettings, gauss_newton

VERIFY_TOL = 1e-10
# Clamp for discriminants that are negative by rounding only.
_ROUNDING = 1e-12


@dataclass(frozen=True)
class GhostMode:
    c1: float
    c2: float
    phi1: float
    phi2: float
    B: float
    phi_b: float
    params: CouplerParams

    @property
    def b(self) -> complex:
        return self.B * complex(math.cos(self.phi_b), math.sin(self.phi_b))

    @property
    def dphi(self) -> float:
        return self.phi2 - self.phi1

    @property
    def power(self) -> float:
        return 2.0 * (self.c1 ** 2 + self.c2 ** 2)


def kappa(params: CouplerParams) -> float:
    return (5.0 - params.alpha) / 3.0


def ghost_field(g: GhostMode) -> FieldState:
    w1 = g.c1 * complex(math.cos(g.phi1), math.sin(g.phi1))
    w2 = g.c2 * complex(math.cos(g.phi2), math.sin(g.phi2))
    return field_state([w1, w2, 1j * w1, 1j * w2])


def ghost_residual(g: GhostMode) -> npt.NDArray[np.float64]:
    """
    Consistency defects of the reduced algebra:
    (i) sin^2 + cos^2 - 1 of phi_b from its two closed expressions,
    (ii), (iii) mismatch of the two expressions for sin(dphi) and cos(dphi),
    (iv) sin^2 + cos^2 - 1 of dphi from one expression of each.
    """
    if g.c1 <= 0 or g.c2 <= 0:
        raise InvalidParametersError(f"Ghost amplitudes must be positive, got c1={g.c1}, c2={g.c2}")
    if g.B <= 0:
        raise InvalidParametersError(f"Ghost |b| must be positive, got {g.B}")
    k, gamma, kap = g.params.k, g.params.gamma, kappa(g.params)
    x, y = g.c1 ** 2, g.c2 ** 2
    s = x + y
    sin_b = gamma * (y - x) / (s * g.B)
    cos_b = kap * s / g.B
    b_re, b_im = g.B * math.cos(g.phi_b), g.B * math.sin(g.phi_b)

    sin_from_2 = (gamma - b_im - b_re + kap * y) * g.c2 / (2 * k * g.c1)
    sin_from_1 = (gamma + b_im - b_re + kap * x) * g.c1 / (2 * k * g.c2)
    cos_from_2 = (gamma - b_im + b_re - kap * y) * g.c2 / (2 * k * g.c1)
    cos_from_1 = (gamma + b_im + b_re - kap * x) * g.c1 / (2 * k * g.c2)
    return np.array([
        sin_b ** 2 + cos_b ** 2 - 1.0,
        sin_from_2 - sin_from_1,
        cos_from_2 - cos_from_1,
        sin_from_2 ** 2 + cos_from_2 ** 2 - 1.0,
    ])


def _modulus_pinned_v(params: CouplerParams, b_modulus: float) -> float:
    """kappa^2 s^2 on the ghost branch with |b| held, from v^2 + (5g^2 - B^2) v + 4g^4 - 4g^2 B^2 - 8k^2 g^2 = 0."""
    g2, b2, k2 = params.gamma ** 2, b_modulus ** 2, params.k ** 2
    linear = 5.0 * g2 - b2
    constant = 4.0 * g2 * g2 - 4.0 * g2 * b2 - 8.0 * k2 * g2
    discriminant = linear ** 2 - 4.0 * constant
    if discriminant < 0:
        raise FamilyDoesNotExistError(f"No ghost with |b| = {b_modulus} at {params}")
    return 0.5 * (-linear + math.sqrt(discriminant))


def ghost_closed_form(
        params: CouplerParams,
        b_pin: float,
        pin: GhostPin = GhostPin.MODULUS,
        branch: Sign = Sign.PLUS,
) -> GhostMode:
    """Explicit ghost; branch PLUS has c2 > c1 and Im b > 0, MINUS the mirror image."""
    if b_pin <= 0:
        raise InvalidParametersError(f"Ghost pin must be positive, got {b_pin}")
    k, gamma, kap = params.k, params.gamma, kappa(params)
    if pin is GhostPin.MODULUS:
        v = _modulus_pinned_v(params, b_pin)
    elif pin is GhostPin.REAL:
        v = b_pin ** 2
    else:
        assert_never(pin)
    if v <= 0 or 4.0 * gamma ** 2 + v < 8.0 * k ** 2 - _ROUNDING:
        raise FamilyDoesNotExistError(f"No ghost for {pin.value} pin {b_pin} at {params}")

    s = math.sqrt(v) / kap
    product = 2.0 * k ** 2 * s ** 2 / (4.0 * gamma ** 2 + v)
    spread = math.sqrt(max(s ** 2 - 4.0 * product, 0.0))
    larger, smaller = 0.5 * (s + spread), 0.5 * (s - spread)
    x, y = (smaller, larger) if branch is Sign.PLUS else (larger, smaller)

    root = math.sqrt(product)
    cos_d = root * (kap + 2.0 * gamma / s) / (2.0 * k)
    sin_d = root * (2.0 * gamma / s - kap) / (2.0 * k)
    b = complex(kap * s, gamma * (y - x) / s)
    return GhostMode(
        c1=math.sqrt(x),
        c2=math.sqrt(y),
        phi1=0.0,
        phi2=math.atan2(sin_d, cos_d),
        B=abs(b),
        phi_b=math.atan2(b.imag, b.real),
        params=params,
    )


def ghost_seed(mode: StationaryMode, asymmetry: float = 0.1, branch: Sign = Sign.PLUS) -> GhostMode:
    """Ghost seed tilted off an equal-amplitude mode: c2^2 - c1^2 = +-asymmetry * (c1^2 + c2^2)."""
    w = mode.w
    s = float(abs(w[0]) ** 2 + abs(w[1]) ** 2)
    tilt = asymmetry * branch.factor
    b_im = mode.params.gamma * tilt
    return GhostMode(
        c1=math.sqrt(0.5 * s * (1.0 - tilt)),
        c2=math.sqrt(0.5 * s * (1.0 + tilt)),
        phi1=0.0,
        phi2=float(np.angle(w[1] * np.conj(w[0]))),
        B=math.hypot(mode.b, b_im),
        phi_b=math.atan2(b_im, mode.b),
        params=mode.params,
    )


def _unknowns(g: GhostMode) -> npt.NDArray[np.float64]:
    return np.array([g.c1, g.c2, g.dphi, g.B, g.phi_b])


def _from_unknowns(params: CouplerParams, u: npt.NDArray[np.float64]) -> GhostMode:
    c1, c2, dphi, modulus, phi_b = (float(value) for value in u)
    if c1 < 0:
        c1, c2 = -c1, -c2
    if c2 < 0:
        c2, dphi = -c2, dphi + math.pi
    if modulus < 0:
        modulus, phi_b = -modulus, phi_b + math.pi
    return GhostMode(
        c1=c1,
        c2=c2,
        phi1=0.0,
        phi2=math.remainder(dphi, 2 * math.pi),
        B=modulus,
        phi_b=math.remainder(phi_b, 2 * math.pi),
        params=params,
    )


def _raw_state(u: npt.NDArray[np.float64]) -> tuple[npt.NDArray[np.complex128], complex]:
    c1, c2, dphi, modulus, phi_b = u
    e = complex(math.cos(dphi), math.sin(dphi))
    w = np.array([c1, c2 * e, 1j * c1, 1j * c2 * e], dtype=np.complex128)
    return w, modulus * complex(math.cos(phi_b), math.sin(phi_b))


def ghost_solve(
        params: CouplerParams,
        b_pin: float,
        seed: GhostMode,
        pin: GhostPin = GhostPin.MODULUS,
        settings: NewtonSettings = NewtonSettings(),
) -> GhostMode:
    """Newton on (c1, c2, dphi, B, phi_b) with phi1 = 0, verified against the complex-b stationary residual."""
    if seed.params != params:
        seed = dataclasses.replace(seed, params=params)

    def func(u: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
        w, b = _raw_state(u)
        r = stationary_residual(params, b, w)[:2]
        if pin is GhostPin.MODULUS:
            constraint = u[3] - b_pin
        elif pin is GhostPin.REAL:
            constraint = u[3] * math.cos(u[4]) - b_pin
        else:
            assert_never(pin)
        return np.concatenate([r.real, r.imag, [constraint]])

    def jac(u: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
        w, b = _raw_state(u)
        a_block, b_block = wirtinger_blocks(params, b, w)
        e = complex(math.cos(u[2]), math.sin(u[2]))
        directions = [
            np.array([1, 0, 1j, 0]),
            np.array([0, e, 0, 1j * e]),
            np.array([0, 1j * w[1], 0, 1j * w[3]]),
        ]
        columns = [a_block @ d + b_block @ np.conj(d) for d in directions]
        columns.append(-w * complex(math.cos(u[4]), math.sin(u[4])))
        columns.append(-w * 1j * b)
        top = np.array(columns).T[:2]
        if pin is GhostPin.MODULUS:
            pin_row = np.array([0.0, 0.0, 0.0, 1.0, 0.0])
        elif pin is GhostPin.REAL:
            pin_row = np.array([0.0, 0.0, 0.0, math.cos(u[4]), -u[3] * math.sin(u[4])])
        else:
            assert_never(pin)
        return np.vstack([top.real, top.imag, pin_row])

    u, iterations = gauss_newton(func, jac, _unknowns(seed), settings)
    ghost = _from_unknowns(params, u)
    if ghost.c1 == 0 or ghost.c2 == 0:
        raise SpuriousRootError(f"Ghost solve collapsed to a zero amplitude: {ghost}")
    residual = float(np.max(np.abs(stationary_residual(params, ghost.b, ghost_field(ghost)))))
    if residual > VERIFY_TOL * max(1.0, ghost.B):
        raise SpuriousRootError(f"Reduced ghost root fails the full stationary equations (residual {residual:.3e})")
    logging.debug(f"ghost_solve: gamma={params.gamma}, b={ghost.b:.6g} in {iterations} iterations")
    return ghost


@dataclass(frozen=True, eq=False)
class GhostBranch:
    label: str
    pin: GhostPin
    b_pin: float
    points: list[GhostMode] = field(default_factory=list)
    termination: Termination = Termination.MAX_STEPS

    @property
    def gammas(self) -> npt.NDArray[np.float64]:
        return np.array([g.params.gamma for g in self.points])


@dataclass(frozen=True)
class GhostBranchOptions:
    initial_step: float = 0.01
    max_step: float = 0.02
    min_step: float = 1e-6
    max_steps: int = 5000
    vanish_ratio: float = 0.1
    """A branch whose c1^2 + c2^2 shrank below this fraction of its maximum has lost existence."""


def ghost_branch(
        params: CouplerParams,
        b_pin: float,
        gamma_range: tuple[float, float],
        pin: GhostPin = GhostPin.MODULUS,
        branch: Sign = Sign.PLUS,
        opts: GhostBranchOptions = GhostBranchOptions(),
        seed: Optional[GhostMode] = None,
) -> GhostBranch:
    """Ghost branch continued in gamma from gamma_range[0], which must lie past the bifurcation."""
    start, end = gamma_range
    if end <= start:
        raise InvalidParametersError(f"Ghost branches are continued towards larger gamma, got {gamma_range}")
    first_params = params.with_gamma(start)
    if seed is None:
        seed = ghost_closed_form(first_params, b_pin, pin, branch)
    current = ghost_solve(first_params, b_pin, seed, pin)
    label = f"ghost{branch.value}"
    points = [current]
    previous: Optional[GhostMode] = None
    step = opts.initial_step
    termination = Termination.MAX_STEPS
    s_max = current.c1 ** 2 + current.c2 ** 2

    for _ in range(opts.max_steps):
        gamma = current.params.gamma
        if gamma >= end:
            termination = Termination.BOUNDARY
            break
        target = min(gamma + step, end)
        guess = _unknowns(current)
        if previous is not None:
            slope = (guess - _unknowns(previous)) / (gamma - previous.params.gamma)
            guess = guess + (target - gamma) * slope
        try:
            candidate = ghost_solve(params.with_gamma(target), b_pin, _from_unknowns(current.params, guess), pin)
            if (candidate.c2 - candidate.c1) * (current.c2 - current.c1) < 0:
                raise SpuriousRootError("ghost jumped to the mirror branch")
        except (ConvergenceError, DegeneratePointError, SpuriousRootError, InvalidParametersError) as e:
            step /= 2
            logging.debug(f"ghost_branch: step rejected at gamma={gamma:.6f} ({e}), step -> {step:.3e}")
            if step < opts.min_step:
                s = current.c1 ** 2 + current.c2 ** 2
                if s < opts.vanish_ratio * s_max:
                    termination = Termination.EXISTENCE_LOST
                    break
                if previous is None:
                    raise StepUnderflowError(f"Ghost continuation stalled at gamma = {gamma}") from e
                termination = Termination.FOLD
                break
            continue
        previous, current = current, candidate
        points.append(current)
        s_max = max(s_max, current.c1 ** 2 + current.c2 ** 2)
        step = min(1.5 * step, opts.max_step)

    logging.info(f"ghost_branch {label}: {len(points)} points, terminated by {termination.value} "
                 f"at gamma = {points[-1].params.gamma:.4f}")
    return GhostBranch(label=label, pin=pin, b_pin=b_pin, points=points, termination=termination)


def ansatz_defect(g: GhostMode, z: float) -> float:
    """Mismatch of u(z) = w e^{i b z} in the dynamical equations; zero only for real b or at z = 0."""
    b = g.b
    u = ghost_field(g) * np.exp(1j * b * z)
    return float(np.max(np.abs(rhs_dynamic(g.params, z, u) - 1j * b * u)))


def ghost_intensity_trace(g: GhostMode, z: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """|w_j|^2 e^{-2 Im(b) z}, one row per z."""
    zs = np.asarray(z, dtype=np.float64)
    intensities = np.abs(ghost_field(g)) ** 2
    return np.outer(np.exp(-2.0 * g.b.imag * zs), intensities)
