"""Reproduction recipes: each figure_N writes the CSV/JSON bundle behind one bifurcation figure."""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Optional

import numpy as np

from base.data_types import Axis, Family, GhostPin, Polarization, RngSeed, Sign
from base.errors import FamilyDoesNotExistError, QuadrimerError
from base.params import CouplerParams, StationaryMode
from dynamics.evolution import (
    EvolutionTrace,
    IntegratorSettings,
    classify_evolution,
    ghost_trace,
    integrate,
    perturb,
    seed_sweep,
)
from dynamics.overlay import OverlayFit, overlay_shift_fit
from model.linear import real_btilde
from modes.exact import ExactModeSpec, circular_mode, elliptic_mode_alpha1
from modes.ghost import GhostMode, ghost_branch, ghost_closed_form, ghost_solve
from modes.perturbation import predict, seed_from_prediction
from solver.bifurcations import detect_branch_point
from solver.continuation import BranchCurve, ContinuationOptions, attach_stability, continue_branch
from solver.newton import newton_solve
from solver.stability import stability_report
from storage.serialization import (
    CrossingRecord,
    CrossingsFile,
    GhostRecord,
    ModeRecord,
    OverlayFile,
    SpectraFile,
    SpectrumEntry,
    StabilityRecord,
    SweepFile,
    SweepRun,
    write_branch_csv,
    write_ghost_csv,
    write_record,
    write_trace_csv,
)
from storage.settings import Settings

FIGURE_NUMBERS = (2, 3, 4, 5, 6, 7)
B_LIMIT = 4.0
# Distance from the linear eigenvalue where b-continuations start.
LINEAR_OFFSET = 0.02
GAMMA_MAX = 1.6
GHOST_START_OFFSET = 1e-2
GHOST_GAMMA_MAX = 3.0
ONSET_DEVIATION = 1e-2
OVERLAY_GROWTH = 5.0

FAMILIES = (Family.CIRCULAR_PLUS, Family.CIRCULAR_MINUS, Family.ELLIPTIC_PLUS, Family.ELLIPTIC_MINUS)


@dataclass(frozen=True)
class Job:
    name: str
    run: Callable[[], Optional[BranchCurve]]


def _sign_and_polarization(family: Family) -> tuple[Sign, Polarization]:
    info = family.value
    if info.sign is None or info.polarization is None:
        raise ValueError(f"{family.tag} is not an analytic family")
    return info.sign, info.polarization


def seed_mode(params: CouplerParams, family: Family, b: float, opts: ContinuationOptions) -> StationaryMode:
    """Member of family at b: closed form where one exists, otherwise a b-continuation from the perturbative seed."""
    sign, polarization = _sign_and_polarization(family)
    spec = ExactModeSpec(sign=sign, b=b, params=params)
    if polarization is Polarization.CIRCULAR:
        return circular_mode(spec)
    if params.alpha == 1:
        return elliptic_mode_alpha1(spec)

    prediction = predict(params, sign, polarization)
    direction = math.copysign(1.0, prediction.B2)
    start = prediction.btilde + LINEAR_OFFSET * direction
    if (b - start) * direction < 0:
        raise FamilyDoesNotExistError(f"family does not exist: {family.tag} at b = {b} for {params}")
    first = newton_solve(params, start, seed_from_prediction(prediction, params, start), family=family)
    if b == start:
        return first
    curve = continue_branch(params, Axis.B, (start, b), first, opts)
    last = curve.points[-1]
    if last.param != b:
        raise FamilyDoesNotExistError(f"family does not exist: {family.tag} lost at b = {last.param} before {b}")
    return last.mode


def b_family_curve(params: CouplerParams, family: Family, opts: ContinuationOptions) -> BranchCurve:
    """Family in the (b, U) plane from next to its linear eigenvalue out to |b| = B_LIMIT."""
    sign, polarization = _sign_and_polarization(family)
    btilde = real_btilde(params, sign)
    if polarization is Polarization.ELLIPTIC and params.alpha == 0:
        direction = math.copysign(1.0, predict(params, sign, polarization).B2)
    else:
        direction = 1.0
    start = btilde + LINEAR_OFFSET * direction
    seed = seed_mode(params, family, start, opts)
    return attach_stability(continue_branch(params, Axis.B, (start, B_LIMIT * direction), seed, opts))


def gamma_family_curve(
        params: CouplerParams,
        family: Family,
        b: float,
        gamma_range: tuple[float, float],
        opts: ContinuationOptions,
) -> BranchCurve:
    seed = seed_mode(params.with_gamma(gamma_range[0]), family, b, opts)
    return attach_stability(continue_branch(params, Axis.GAMMA, gamma_range, seed, opts))


def _run_jobs(jobs: list[Job], settings: Settings) -> dict[str, BranchCurve]:
    def guarded(job: Job) -> Optional[BranchCurve]:
        try:
            return job.run()
        except QuadrimerError as e:
            logging.warning(f"{job.name}: skipped ({e})")
            return None

    with ThreadPoolExecutor(max_workers=settings.workers()) as executor:
        results = list(executor.map(guarded, jobs))
    return {job.name: curve for job, curve in zip(jobs, results) if curve is not None}


def _write_curves(curves: dict[str, BranchCurve], out_dir: Path) -> list[Path]:
    paths = []
    for name in sorted(curves):
        path = out_dir / f"{name}.csv"
        write_branch_csv(curves[name], path)
        paths.append(path)
    return paths


def figure_2(out_dir: Path, settings: Settings) -> list[Path]:
    """Families in the (b, U) plane, panels A-D: gamma in {0.5, 1.1} x alpha in {0, 1}, k = 1."""
    opts = settings.continuation()
    panels = {"A": (0.5, 0), "B": (0.5, 1), "C": (1.1, 0), "D": (1.1, 1)}
    jobs = []
    for panel, (gamma, alpha) in panels.items():
        params = CouplerParams(k=1.0, gamma=gamma, alpha=alpha)
        for family in FAMILIES:
            jobs.append(Job(
                name=f"panel_{panel}/{family.tag}",
                run=lambda params=params, family=family: b_family_curve(params, family, opts),
            ))
    return _write_curves(_run_jobs(jobs, settings), out_dir)


def pitchfork_crossings(curves: Mapping[str, BranchCurve]) -> list[CrossingRecord]:
    """Stability changes along each curve, marked as pitchfork candidates where another curve passes through."""
    records = []
    for name in sorted(curves):
        others = [curve for other, curve in curves.items() if other != name]
        for crossing in detect_branch_point(curves[name], others):
            logging.info(f"{name}: {crossing.classification.value} at gamma = {crossing.param:.4f}")
            records.append(CrossingRecord(
                branch=name,
                param=crossing.param,
                count_change=crossing.count_change,
                classification=crossing.classification,
            ))
    return records


def _gamma_figure(alpha: int, out_dir: Path, settings: Settings) -> list[Path]:
    opts = settings.continuation()
    b = 2.0
    params = CouplerParams(k=1.0, gamma=0.0, alpha=alpha)
    jobs = [
        Job(name=family.tag, run=lambda family=family: gamma_family_curve(params, family, b, (0.0, GAMMA_MAX), opts))
        for family in (Family.CIRCULAR_PLUS, Family.CIRCULAR_MINUS)
    ]
    if alpha == 1:
        jobs += [
            Job(name=family.tag, run=lambda family=family: gamma_family_curve(params, family, b, (0.0, GAMMA_MAX), opts))
            for family in (Family.ELLIPTIC_PLUS, Family.ELLIPTIC_MINUS)
        ]
    else:
        # The perturbative elliptic seed needs gamma > 0; continue both ways from gamma = 0.5.
        for family in (Family.ELLIPTIC_PLUS, Family.ELLIPTIC_MINUS):
            jobs.append(Job(name=f"{family.tag}_up",
                            run=lambda family=family: gamma_family_curve(params, family, b, (0.5, GAMMA_MAX), opts)))
            jobs.append(Job(name=f"{family.tag}_down",
                            run=lambda family=family: gamma_family_curve(params, family, b, (0.5, 0.0), opts)))
    curves = _run_jobs(jobs, settings)
    paths = _write_curves(curves, out_dir)
    crossings_path = out_dir / "crossings.json"
    write_record(crossings_path, CrossingsFile(crossings=pitchfork_crossings(curves)))
    paths.append(crossings_path)

    pin = settings.ghost_pin()
    for branch in Sign:
        try:
            ghosts = ghost_branch(params, b, (1.0 + GHOST_START_OFFSET, GHOST_GAMMA_MAX), pin=pin, branch=branch)
        except QuadrimerError as e:
            logging.warning(f"ghost{branch.value}: skipped ({e})")
            continue
        path = out_dir / f"{ghosts.label}.csv"
        write_ghost_csv(ghosts, path)
        paths.append(path)
    return paths


def figure_3(out_dir: Path, settings: Settings) -> list[Path]:
    """gamma-continuations and ghosts at alpha = 0, b = 2, k = 1."""
    return _gamma_figure(0, out_dir, settings)


def figure_4(out_dir: Path, settings: Settings) -> list[Path]:
    """gamma-continuations and ghosts at alpha = 1, b = 2, k = 1."""
    return _gamma_figure(1, out_dir, settings)


def figure_5(out_dir: Path, settings: Settings) -> list[Path]:
    """Linearization spectra at gamma = 1.2, b = 2, k = 1 for both alpha."""
    opts = settings.continuation()
    records = []
    for alpha in (0, 1):
        params = CouplerParams(k=1.0, gamma=1.2, alpha=alpha)
        for family in FAMILIES:
            try:
                mode = seed_mode(params, family, 2.0, opts)
            except QuadrimerError as e:
                logging.info(f"figure 5: {family.tag} at alpha={alpha} absent ({e})")
                continue
            records.append(SpectrumEntry(mode=ModeRecord.of(mode), stability=StabilityRecord.of(stability_report(mode))))
    for branch in Sign:
        ghost = ghost_closed_form(CouplerParams(k=1.0, gamma=1.2), 2.0, settings.ghost_pin(), branch)
        records.append(SpectrumEntry(ghost=GhostRecord.of(ghost)))
    path = out_dir / "spectra.json"
    write_record(path, SpectraFile(records=records))
    return [path]


def unstable_circular(params: CouplerParams, b: float) -> StationaryMode:
    for sign in Sign:
        mode = circular_mode(ExactModeSpec(sign=sign, b=b, params=params))
        if not stability_report(mode).stable:
            return mode
    raise FamilyDoesNotExistError(f"No unstable circular mode at b = {b}, {params}")


def figure_6(out_dir: Path, settings: Settings) -> list[Path]:
    """Perturbed evolution of the unstable circular mode at b = 3, gamma = 0.5, alpha = 0."""
    mode = unstable_circular(CouplerParams(k=1.0, gamma=0.5), 3.0)
    first_seed = int(settings.get("rng_seed"))
    seeds = range(first_seed, first_seed + int(settings.get("sweep_seeds")))
    results = seed_sweep(mode, float(settings.get("perturbation")), seeds, float(settings.get("z_max")),
                         settings.integrator(), settings.workers())
    paths = []
    summary = []
    for result in results:
        path = out_dir / f"trace_seed{result.rng_seed}.csv"
        write_trace_csv(result.trace, path)
        paths.append(path)
        summary.append(SweepRun(rng_seed=result.rng_seed, evolution=result.kind, status=result.trace.status))
    summary_path = out_dir / "sweep.json"
    write_record(summary_path, SweepFile(mode=ModeRecord.of(mode), runs=summary))
    return paths + [summary_path]


def post_onset_window(z: np.ndarray, power: np.ndarray) -> tuple[float, float]:
    """From where the power leaves its initial value until it has grown OVERLAY_GROWTH-fold."""
    deviation = np.abs(power - power[0]) / power[0]
    onset = np.flatnonzero(deviation > ONSET_DEVIATION)
    if onset.size == 0:
        raise FamilyDoesNotExistError("Trace never leaves the stationary state")
    start = int(onset[0])
    grown = np.flatnonzero(power[start:] > OVERLAY_GROWTH * power[0])
    stop = start + int(grown[0]) if grown.size else len(z) - 1
    if stop <= start:
        stop = min(start + 1, len(z) - 1)
    return float(z[start]), float(z[stop])


@dataclass(frozen=True, eq=False)
class GhostOverlay:
    trace: EvolutionTrace
    reference: EvolutionTrace
    ghost: GhostMode
    window: tuple[float, float]
    fit: OverlayFit


def ghost_overlay(
    params: CouplerParams,
    b: float,
    eps: float,
    rng_seed: RngSeed,
    z_max: float,
    integrator: IntegratorSettings,
    pin: GhostPin,
) -> GhostOverlay:
    """Evolves the perturbed unstable circular mode and shifts the growing ghost onto it."""
    mode = unstable_circular(params, b)
    trace = integrate(params, perturb(mode, eps, rng_seed), z_max, integrator,
                      description=f"{mode.family.tag} at b={b} perturbed, seed {rng_seed}")
    # The growing sub-branch has Im b < 0.
    ghost = ghost_solve(params, b, ghost_closed_form(params, b, pin, Sign.MINUS), pin)
    reference = ghost_trace(ghost, float(trace.z[-1]), integrator.samples_per_unit)
    window = post_onset_window(trace.z, trace.U)
    return GhostOverlay(trace=trace, reference=reference, ghost=ghost, window=window,
                        fit=overlay_shift_fit(trace, reference, window))


def figure_7(out_dir: Path, settings: Settings) -> list[Path]:
    """Unstable circular evolution at gamma = 1.02 against the growing ghost."""
    overlay = ghost_overlay(CouplerParams(k=1.0, gamma=1.02), 2.0, float(settings.get("perturbation")),
                            settings.rng_seed(), float(settings.get("z_max")), settings.integrator(),
                            settings.ghost_pin())

    trace_path = out_dir / "evolution.csv"
    ghost_path = out_dir / "ghost_trace.csv"
    fit_path = out_dir / "overlay.json"
    write_trace_csv(overlay.trace, trace_path)
    write_trace_csv(overlay.reference, ghost_path)
    write_record(fit_path, OverlayFile(
        shift=overlay.fit.shift,
        misfit=overlay.fit.misfit,
        window=list(overlay.window),
        ghost=GhostRecord.of(overlay.ghost),
        evolution_kind=classify_evolution(overlay.trace),
    ))
    return [trace_path, ghost_path, fit_path]


FIGURES: dict[int, Callable[[Path, Settings], list[Path]]] = {
    2: figure_2,
    3: figure_3,
    4: figure_4,
    5: figure_5,
    6: figure_6,
    7: figure_7,
}


def run_figure(number: int, out_dir: Path, settings: Settings) -> list[Path]:
    if number not in FIGURES:
        raise ValueError(f"No recipe for figure {number}; choose from {FIGURE_NUMBERS}")
    paths = FIGURES[number](out_dir, settings)
    settings.export(out_dir)
    return paths
