"""Fold and branch-point detection on computed curves, and the multi-seed existence search."""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional

import numpy as np
import numpy.typing as npt

from base.data_types import Family, Polarization, RngSeed, Sign
from base.errors import BrokenPhaseError, QuadrimerError
from base.params import CouplerParams, StationaryMode, field_state
from model.core import pt_apply, scalar_product
from model.linear import pt_eigenvector, real_btilde
from modes.perturbation import elliptic_roots, theta_circular
from solver.continuation import BranchCurve
from solver.newton import newton_solve

SEED_AMPLITUDES = tuple(round(0.1 * i, 1) for i in range(1, 11))
RANDOM_DRAWS = 20
THETA_GRID = 8
DISTINCT_TOL = 1e-6
"""Two solutions are the same when power and sorted moduli agree to this."""
CIRCULAR_SPREAD = 1e-6
PT_TOL = 1e-8


class CrossingKind(Enum):
    PITCHFORK_CANDIDATE = "pitchfork candidate"
    UNCLASSIFIED = "unclassified crossing"


@dataclass(frozen=True)
class BranchCrossing:
    param: float
    count_change: int
    classification: CrossingKind


def _fold_location(s: npt.NDArray[np.float64], p: npt.NDArray[np.float64]) -> float:
    """Extremum of the parabola through three (arclength, param) samples."""
    a, b, c = np.polyfit(s - s[1], p, 2)
    if a == 0:
        return float(p[1])
    return float(c - b * b / (4 * a))


def detect_fold(curve: BranchCurve) -> list[float]:
    points = curve.points
    if len(points) < 3:
        return []
    states = [np.append(np.concatenate([pt.mode.w.real, pt.mode.w.imag]), pt.param) for pt in points]
    folds = []
    for i in range(1, len(points) - 1):
        if points[i].tangent_param * points[i + 1].tangent_param < 0:
            chords = [0.0, float(np.linalg.norm(states[i] - states[i - 1]))]
            chords.append(chords[1] + float(np.linalg.norm(states[i + 1] - states[i])))
            params = np.array([points[i - 1].param, points[i].param, points[i + 1].param])
            folds.append(_fold_location(np.array(chords), params))
    return folds


def _signature(mode: StationaryMode) -> npt.NDArray[np.float64]:
    return np.sort(mode.amplitudes())


def _intersects(curve: BranchCurve, param: float, mode: StationaryMode, param_tol: float, amp_tol: float) -> bool:
    signature = _signature(mode)
    for point in curve.points:
        if abs(point.param - param) <= param_tol and np.max(np.abs(_signature(point.mode) - signature)) <= amp_tol:
            return True
    return False


def detect_branch_point(
        curve: BranchCurve,
        others: Iterable[BranchCurve] = (),
        param_tol: float = 0.02,
        amp_tol: float = 0.05,
) -> list[BranchCrossing]:
    """Where the count of growing eigenvalues changes between consecutive points."""
    others = list(others)
    crossings = []
    for before, after in zip(curve.points, curve.points[1:]):
        if before.stability is None or after.stability is None:
            raise ValueError(f"Branch {curve.label} has no stability reports attached")
        change = after.stability.n_unstable - before.stability.n_unstable
        if change == 0:
            continue
        param = 0.5 * (before.param + after.param)
        kind = CrossingKind.UNCLASSIFIED
        if any(_intersects(other, param, after.mode, param_tol, amp_tol) for other in others):
            kind = CrossingKind.PITCHFORK_CANDIDATE
        crossings.append(BranchCrossing(param=param, count_change=change, classification=kind))
    return crossings


def is_pt_symmetric(w: npt.ArrayLike, tol: float = PT_TOL) -> bool:
    """PT w = e^{i phi} w for some phi."""
    state = field_state(w)
    mirrored = pt_apply(state)
    overlap = scalar_product(mirrored, state)
    if overlap == 0:
        return False
    phase = overlap / abs(overlap)
    scale = max(1.0, float(np.linalg.norm(state)))
    return float(np.linalg.norm(mirrored - phase * state)) < tol * scale


def polarization_of(mode: StationaryMode) -> Polarization:
    amplitudes = mode.amplitudes()
    if float(np.max(amplitudes) - np.min(amplitudes)) < CIRCULAR_SPREAD * max(1.0, float(np.max(amplitudes))):
        return Polarization.CIRCULAR
    return Polarization.ELLIPTIC


@dataclass(frozen=True, eq=False)
class SeedSearchResult:
    modes: list[StationaryMode]
    rng_seed: RngSeed
    attempts: int
    converged: int


def _perturbation_seeds(params: CouplerParams) -> list[npt.NDArray[np.complex128]]:
    seeds = []
    for sign in Sign:
        try:
            btilde = real_btilde(params, sign)
        except BrokenPhaseError:
            return []
        thetas = [theta_circular(btilde, params.gamma)]
        if params.alpha == 0 and params.gamma > 0:
            thetas += elliptic_roots(params, btilde)
        thetas += [math.pi * i / THETA_GRID for i in range(THETA_GRID)]
        for theta in thetas:
            v = pt_eigenvector(params, btilde, theta).v
            v = v / np.linalg.norm(v)
            seeds.extend(eps * v for eps in SEED_AMPLITUDES)
    return seeds


def _is_new(mode: StationaryMode, found: list[StationaryMode]) -> bool:
    for other in found:
        if abs(other.power - mode.power) < DISTINCT_TOL and \
                np.max(np.abs(_signature(other) - _signature(mode))) < DISTINCT_TOL:
            return False
    return True


def multi_seed_search(
        params: CouplerParams,
        b: float,
        family_filter: Optional[Polarization] = None,
        seed: RngSeed = RngSeed(0),
) -> SeedSearchResult:
    """
    Distinct PT-symmetric stationary modes at (params, b) reached from the fixed seed protocol:
    perturbation eigenvectors at eps in 0.1..1.0 and RANDOM_DRAWS random vectors from rng seed.
    An empty result means "not found" under this protocol, not a proof of nonexistence.
    """
    rng = np.random.default_rng(seed)
    seeds = _perturbation_seeds(params)
    for _ in range(RANDOM_DRAWS):
        seeds.append(rng.standard_normal(4) + 1j * rng.standard_normal(4))

    found: list[StationaryMode] = []
    converged = 0
    for w0 in seeds:
        try:
            mode = newton_solve(params, b, w0)
        except QuadrimerError as e:
            logging.debug(f"multi_seed_search: seed {w0} failed: {e}")
            continue
        converged += 1
        if mode.power < DISTINCT_TOL or not is_pt_symmetric(mode.w):
            continue
        polarization = polarization_of(mode)
        if family_filter is not None and polarization is not family_filter:
            continue
        if _is_new(mode, found):
            found.append(StationaryMode(w=mode.w, b=mode.b, params=mode.params, family=_family_of(mode, polarization)))

    logging.info(f"multi_seed_search at b={b}, {params}: {len(found)} distinct modes from {len(seeds)} seeds")
    return SeedSearchResult(modes=found, rng_seed=seed, attempts=len(seeds), converged=converged)


def _family_of(mode: StationaryMode, polarization: Polarization) -> Family:
    if polarization is Polarization.CIRCULAR:
        for sign in Sign:
            try:
                btilde = real_btilde(mode.params, sign)
            except BrokenPhaseError:
                break
            rho_squared = 3.0 * (mode.b - btilde) / (5.0 - mode.params.alpha)
            if abs(mode.power - 4.0 * rho_squared) < 1e-8 * max(1.0, mode.power):
                return Family.of(polarization, sign)
    return Family.NUMERIC
