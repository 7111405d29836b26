import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

from base.data_types import Axis, Family, GhostPin, Polarization, Sign
from base.errors import QuadrimerError
from base.params import CouplerParams, StationaryMode
from base.utils import get_default_output_dir
from dynamics.evolution import classify_evolution, integrate, perturb
from figures import FIGURE_NUMBERS, run_figure, seed_mode
from model.linear import eigenvalues_closed
from modes.exact import ExactModeSpec, exact_mode
from modes.ghost import ghost_branch
from modes.perturbation import predict, seed_from_prediction
from solver.continuation import attach_stability, continue_branch
from solver.newton import newton_solve
from solver.stability import stability_report
from storage.serialization import (
    ModeRecord,
    StabilityRecord,
    complex_pair,
    field_from_json,
    write_branch_csv,
    write_ghost_csv,
    write_trace_csv,
)
from storage.settings import Settings


def _add_params(parser: argparse.ArgumentParser, gamma_required: bool = True) -> None:
    parser.add_argument('--k', type=float, default=1.0, help='Coupling between the arms')
    parser.add_argument('--gamma', type=float, required=gamma_required, default=0.0, help='Gain/loss strength')
    parser.add_argument('--alpha', type=int, choices=[0, 1], default=0,
                        help='0: four-wave terms averaged out, 1: zero mismatch')


def _add_family(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--family', choices=[p.value for p in Polarization], default=Polarization.CIRCULAR.value)
    parser.add_argument('--sign', choices=[s.value for s in Sign], default=Sign.PLUS.value,
                        help='Linear eigenvalue the family bifurcates from')


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', type=Path, help='JSON config file; flags take precedence over it')
    common.add_argument('-v', '--verbose', action='store_true', help='Debug logging')

    parser = argparse.ArgumentParser(description='Modes, stability and dynamics of the birefringent PT coupler')
    commands = parser.add_subparsers(dest='command', required=True)

    spectrum = commands.add_parser('spectrum', parents=[common], help='Linear eigenvalues')
    spectrum.add_argument('--k', type=float, default=1.0)
    spectrum.add_argument('--gamma', type=float, required=True)

    predict_cmd = commands.add_parser('predict', parents=[common], help='Perturbative bifurcation data')
    _add_params(predict_cmd)
    _add_family(predict_cmd)

    mode = commands.add_parser('mode', parents=[common], help='Closed-form stationary mode')
    _add_params(mode)
    _add_family(mode)
    mode.add_argument('--b', type=float, required=True)

    solve = commands.add_parser('solve', parents=[common], help='Newton solve from a seed')
    _add_params(solve)
    _add_family(solve)
    solve.add_argument('--b', type=float, required=True)
    solve.add_argument('--w0', help='Seed as JSON list of four [re, im] pairs; default: perturbative seed')

    cont = commands.add_parser('continue', parents=[common], help='Continue a family in b or gamma')
    _add_params(cont, gamma_required=False)
    _add_family(cont)
    cont.add_argument('--axis', choices=[a.value for a in Axis], required=True)
    cont.add_argument('--from', dest='start', type=float, required=True)
    cont.add_argument('--to', dest='end', type=float, required=True)
    cont.add_argument('--b', type=float, default=2.0, help='Fixed b for gamma continuation')
    cont.add_argument('--stability', action='store_true', help='Attach linearization spectra')
    cont.add_argument('--out', type=Path, required=True, help='Output CSV')

    stability = commands.add_parser('stability', parents=[common], help='Linearization spectrum of a mode')
    _add_params(stability)
    _add_family(stability)
    stability.add_argument('--b', type=float, required=True)

    ghost = commands.add_parser('ghost', parents=[common], help='Ghost branch in gamma')
    _add_params(ghost, gamma_required=False)
    ghost.add_argument('--b', type=float, default=2.0, help='Pinned |b| or Re b')
    ghost.add_argument('--from', dest='start', type=float, default=1.01)
    ghost.add_argument('--to', dest='end', type=float, default=3.0)
    ghost.add_argument('--pin', choices=[p.value for p in GhostPin])
    ghost.add_argument('--branch', choices=[s.value for s in Sign], default=Sign.PLUS.value,
                       help='+: c2 > c1 (Im b > 0), -: mirror image')
    ghost.add_argument('--out', type=Path, required=True)

    evolve = commands.add_parser('evolve', parents=[common], help='Propagate a perturbed mode')
    _add_params(evolve)
    _add_family(evolve)
    evolve.add_argument('--b', type=float, required=True)
    evolve.add_argument('--eps', type=float, help='Perturbation size')
    evolve.add_argument('--rng-seed', type=int)
    evolve.add_argument('--z-max', type=float)
    evolve.add_argument('--out', type=Path, required=True)

    figure = commands.add_parser('figure', parents=[common], help='Reproduce the data behind a figure')
    figure.add_argument('number', type=int, choices=FIGURE_NUMBERS)
    figure.add_argument('--out', type=Path, help='Output directory')
    figure.add_argument('--workers', type=int)
    return parser


def _params(args: argparse.Namespace) -> CouplerParams:
    return CouplerParams(k=args.k, gamma=args.gamma, alpha=args.alpha)


def _family(args: argparse.Namespace) -> Family:
    return Family.of(Polarization(args.family), Sign(args.sign))


def _print_json(payload: Any) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def _settings(args: argparse.Namespace) -> Settings:
    overrides = {
        "rng_seed": getattr(args, 'rng_seed', None),
        "perturbation": getattr(args, 'eps', None),
        "z_max": getattr(args, 'z_max', None),
        "ghost_pin": getattr(args, 'pin', None),
        "workers": getattr(args, 'workers', None),
    }
    return Settings.load(args.config, overrides)


def _mode(args: argparse.Namespace, settings: Settings) -> StationaryMode:
    return seed_mode(_params(args), _family(args), args.b, settings.continuation())


def _dispatch(args: argparse.Namespace, settings: Settings) -> None:
    command = args.command
    if command == 'spectrum':
        spectrum = eigenvalues_closed(CouplerParams(k=args.k, gamma=args.gamma))
        _print_json({
            "b_plus": complex_pair(spectrum.b_plus),
            "b_minus": complex_pair(spectrum.b_minus),
            "broken": spectrum.broken,
            "gamma_cr1": spectrum.gamma_cr1,
        })
    elif command == 'predict':
        _print_json(predict(_params(args), Sign(args.sign), Polarization(args.family)).to_dict(encode_json=True))
    elif command == 'mode':
        spec = ExactModeSpec(sign=Sign(args.sign), b=args.b, params=_params(args))
        _print_json(ModeRecord.of(exact_mode(Polarization(args.family), spec)).to_dict(encode_json=True))
    elif command == 'solve':
        params = _params(args)
        if args.w0:
            w0 = field_from_json(json.loads(args.w0))
        else:
            w0 = seed_from_prediction(predict(params, Sign(args.sign), Polarization(args.family)), params, args.b)
        mode = newton_solve(params, args.b, w0, settings=settings.newton())
        _print_json(ModeRecord.of(mode).to_dict(encode_json=True))
    elif command == 'continue':
        params = _params(args)
        axis = Axis(args.axis)
        opts = settings.continuation()
        if axis is Axis.B:
            seed = seed_mode(params, _family(args), args.start, opts)
        else:
            seed = seed_mode(params.with_gamma(args.start), _family(args), args.b, opts)
        curve = continue_branch(params, axis, (args.start, args.end), seed, opts)
        if args.stability:
            curve = attach_stability(curve)
        write_branch_csv(curve, args.out)
        settings.export(args.out.parent)
        print(f"{curve.label}: {len(curve.points)} points, {curve.termination.value} -> {args.out}")
    elif command == 'stability':
        _print_json(StabilityRecord.of(stability_report(_mode(args, settings))).to_dict(encode_json=True))
    elif command == 'ghost':
        branch = ghost_branch(_params(args), args.b, (args.start, args.end), pin=settings.ghost_pin(),
                              branch=Sign(args.branch))
        write_ghost_csv(branch, args.out)
        settings.export(args.out.parent)
        print(f"{branch.label}: {len(branch.points)} points, {branch.termination.value} -> {args.out}")
    elif command == 'evolve':
        mode = _mode(args, settings)
        seed = settings.rng_seed()
        eps = float(settings.get("perturbation"))
        trace = integrate(mode.params, perturb(mode, eps, seed), float(settings.get("z_max")), settings.integrator(),
                          description=f"{mode.family.tag} at b={mode.b} + {eps} * r(seed={seed})")
        write_trace_csv(trace, args.out)
        settings.export(args.out.parent)
        print(f"{trace.status.value} ({classify_evolution(trace).value}) -> {args.out}")
    elif command == 'figure':
        out_dir = args.out or get_default_output_dir() / f"figure{args.number}"
        print(f"Running figure {args.number} recipe...")
        for path in run_figure(args.number, out_dir, settings):
            print(f"  wrote {path}")
    else:
        raise ValueError(f"Unknown command {command}")


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else 2

    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format='%(levelname)s %(name)s: %(message)s')
    try:
        _dispatch(args, _settings(args))
    except QuadrimerError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
