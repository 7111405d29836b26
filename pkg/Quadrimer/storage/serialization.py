"""
JSON and CSV forms of the library's results.

Complex numbers are [re, im] pairs in JSON and (x_re, x_im) column pairs in CSV. Floats in CSV use
17 significant digits, so files round-trip exactly and identical runs give identical bytes. Every
CSV has a JSON sidecar (same name, .json suffix) holding the non-tabular fields and the format version.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence, Type, TypeVar

import numpy as np
import numpy.typing as npt
from dataclasses_json import DataClassJsonMixin

from base.data_types import Axis, Family, GhostPin
from base.errors import FileFormatError
from base.params import CouplerParams, StationaryMode, field_state
from dynamics.evolution import EvolutionKind, EvolutionTrace, TraceStatus
from modes.ghost import GhostBranch, GhostMode
from solver.bifurcations import CrossingKind
from solver.continuation import BranchCurve, BranchPoint, Termination
from solver.stability import StabilityReport

FILE_FORMAT_VERSION = 2

R = TypeVar("R", bound=DataClassJsonMixin)

_FIELD_COLUMNS = [f"u{j}_{part}" for j in range(1, 5) for part in ("re", "im")]
_EIGEN_COLUMNS = [f"lam{j}_{part}" for j in range(1, 9) for part in ("re", "im")]
BRANCH_COLUMNS = (
    ["param", "b", "U", "a1", "a2", "a3", "a4", "dphi12", "dphi23", "dphi34", "max_re_lambda", "n_unstable", "stable"]
    + ["tangent_param"] + _FIELD_COLUMNS + _EIGEN_COLUMNS
)
TRACE_COLUMNS = ["z", "i1", "i2", "i3", "i4", "U"] + _FIELD_COLUMNS
GHOST_COLUMNS = ["gamma", "c1", "c2", "dphi", "B", "phi_b", "re_b", "im_b"]


def format_float(value: float) -> str:
    return "%.17g" % value


def complex_pair(value: complex) -> list[float]:
    return [float(value.real), float(value.imag)]


def pair_to_complex(pair: Sequence[float]) -> complex:
    if len(pair) != 2:
        raise FileFormatError(f"Expected a [re, im] pair, got {pair}")
    return complex(float(pair[0]), float(pair[1]))


def field_to_json(w: npt.ArrayLike) -> list[list[float]]:
    return [complex_pair(value) for value in np.asarray(w)]


def field_from_json(values: Sequence[Sequence[float]]) -> npt.NDArray[np.complex128]:
    return field_state([pair_to_complex(pair) for pair in values])


@dataclass(frozen=True)
class ModeRecord(DataClassJsonMixin):
    family: str
    b: float
    params: CouplerParams
    w: list[list[float]]
    U: float

    @staticmethod
    def of(mode: StationaryMode) -> ModeRecord:
        return ModeRecord(family=mode.family.tag, b=float(mode.b), params=mode.params, w=field_to_json(mode.w), U=mode.power)

    def to_mode(self) -> StationaryMode:
        return StationaryMode(w=field_from_json(self.w), b=self.b, params=self.params, family=Family.from_tag(self.family))


@dataclass(frozen=True)
class StabilityRecord(DataClassJsonMixin):
    eigenvalues: list[list[float]]
    max_growth: float
    n_unstable: int
    stable: bool

    @staticmethod
    def of(report: StabilityReport) -> StabilityRecord:
        return StabilityRecord(
            eigenvalues=field_to_json(report.eigenvalues),
            max_growth=float(report.max_growth),
            n_unstable=int(report.n_unstable),
            stable=bool(report.stable),
        )


@dataclass(frozen=True)
class GhostRecord(DataClassJsonMixin):
    c1: float
    c2: float
    phi1: float
    phi2: float
    B: float
    phi_b: float
    b: list[float]
    params: CouplerParams

    @staticmethod
    def of(g: GhostMode) -> GhostRecord:
        return GhostRecord(
            c1=g.c1, c2=g.c2, phi1=g.phi1, phi2=g.phi2, B=g.B, phi_b=g.phi_b, b=complex_pair(g.b), params=g.params,
        )

    def to_ghost(self) -> GhostMode:
        return GhostMode(
            c1=self.c1, c2=self.c2, phi1=self.phi1, phi2=self.phi2, B=self.B, phi_b=self.phi_b, params=self.params,
        )


@dataclass(frozen=True)
class BranchSidecar(DataClassJsonMixin):
    label: str
    axis: Axis
    termination: Termination
    params: Optional[CouplerParams]
    kind: str = "branch"
    version: int = FILE_FORMAT_VERSION


@dataclass(frozen=True)
class TraceSidecar(DataClassJsonMixin):
    status: TraceStatus
    meta: dict[str, Any]
    kind: str = "trace"
    version: int = FILE_FORMAT_VERSION


@dataclass(frozen=True)
class GhostSidecar(DataClassJsonMixin):
    label: str
    pin: GhostPin
    b_pin: float
    termination: Termination
    params: Optional[CouplerParams]
    kind: str = "ghost"
    version: int = FILE_FORMAT_VERSION


@dataclass(frozen=True)
class SpectrumEntry(DataClassJsonMixin):
    """A stationary mode with its spectrum, or a ghost state."""
    mode: Optional[ModeRecord] = None
    stability: Optional[StabilityRecord] = None
    ghost: Optional[GhostRecord] = None


@dataclass(frozen=True)
class SpectraFile(DataClassJsonMixin):
    records: list[SpectrumEntry]
    kind: str = "spectra"
    version: int = FILE_FORMAT_VERSION


@dataclass(frozen=True)
class SweepRun(DataClassJsonMixin):
    rng_seed: int
    evolution: EvolutionKind
    status: TraceStatus


@dataclass(frozen=True)
class SweepFile(DataClassJsonMixin):
    mode: ModeRecord
    runs: list[SweepRun]
    kind: str = "sweep"
    version: int = FILE_FORMAT_VERSION


@dataclass(frozen=True)
class OverlayFile(DataClassJsonMixin):
    shift: float
    misfit: float
    window: list[float]
    ghost: GhostRecord
    evolution_kind: EvolutionKind
    kind: str = "overlay"
    version: int = FILE_FORMAT_VERSION


@dataclass(frozen=True)
class CrossingRecord(DataClassJsonMixin):
    branch: str
    param: float
    count_change: int
    classification: CrossingKind


@dataclass(frozen=True)
class CrossingsFile(DataClassJsonMixin):
    crossings: list[CrossingRecord]
    kind: str = "crossings"
    version: int = FILE_FORMAT_VERSION


def write_record(path: Path, record: DataClassJsonMixin) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(record.to_json(indent=2, sort_keys=True) + "\n")


def read_record(path: Path, record_type: Type[R]) -> R:
    contents = json.loads(path.read_bytes())
    if (version := contents.get("version")) != FILE_FORMAT_VERSION:
        raise FileFormatError(f"{path} has format version {version}, expected {FILE_FORMAT_VERSION}")
    try:
        return record_type.from_dict(contents)
    except (KeyError, TypeError, ValueError) as e:
        raise FileFormatError(f"{path}: malformed {record_type.__name__}") from e


def sidecar_path(path: Path) -> Path:
    return path.with_suffix(".json")


def _write_rows(path: Path, columns: Sequence[str], rows: Iterable[Sequence[str]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(rows)


def _read_rows(path: Path, columns: Sequence[str]) -> list[dict[str, str]]:
    with path.open("r", newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != list(columns):
            raise FileFormatError(f"{path}: unexpected header {reader.fieldnames}")
        return list(reader)


def _field_cells(w: npt.ArrayLike) -> list[str]:
    return [format_float(part) for value in np.asarray(w) for part in (value.real, value.imag)]


def _field_from_row(row: dict[str, str]) -> npt.NDArray[np.complex128]:
    return field_state([complex(float(row[f"u{j}_re"]), float(row[f"u{j}_im"])) for j in range(1, 5)])


def _branch_row(point: BranchPoint) -> list[str]:
    cells = [format_float(point.param), format_float(point.mode.b), format_float(point.U)]
    cells += [format_float(a) for a in point.amplitudes]
    cells += [format_float(d) for d in point.phase_diffs]
    report = point.stability
    if report is None:
        cells += ["", "", ""]
    else:
        cells += [format_float(report.max_growth), str(report.n_unstable), "1" if report.stable else "0"]
    cells.append(format_float(point.tangent_param))
    cells += _field_cells(point.mode.w)
    if report is None:
        cells += [""] * len(_EIGEN_COLUMNS)
    else:
        cells += _field_cells(report.eigenvalues)
    return cells


def write_branch_csv(curve: BranchCurve, path: Path, params: Optional[CouplerParams] = None) -> None:
    """Writes the curve and its sidecar; params defaults to those of the first point."""
    base = params or (curve.points[0].mode.params if curve.points else None)
    _write_rows(path, BRANCH_COLUMNS, (_branch_row(point) for point in curve.points))
    write_record(sidecar_path(path), BranchSidecar(
        label=curve.label, axis=curve.axis, termination=curve.termination, params=base,
    ))


def read_branch_csv(path: Path) -> BranchCurve:
    meta = read_record(sidecar_path(path), BranchSidecar)
    axis, base, label = meta.axis, meta.params, meta.label
    family = Family.from_tag(label) if label in {f.tag for f in Family} else Family.NUMERIC
    points = []
    for row in _read_rows(path, BRANCH_COLUMNS):
        if base is None:
            raise FileFormatError(f"{path}: rows without parameters in the sidecar")
        param = float(row["param"])
        params = base.with_gamma(param) if axis is Axis.GAMMA else base
        mode = StationaryMode(w=_field_from_row(row), b=float(row["b"]), params=params, family=family)
        stability = None
        if row["n_unstable"]:
            eigenvalues = np.array([complex(float(row[f"lam{j}_re"]), float(row[f"lam{j}_im"])) for j in range(1, 9)])
            stability = StabilityReport(
                eigenvalues=eigenvalues,
                max_growth=float(row["max_re_lambda"]),
                n_unstable=int(row["n_unstable"]),
                stable=row["stable"] == "1",
            )
        points.append(BranchPoint(param=param, mode=mode, tangent_param=float(row["tangent_param"]), stability=stability))
    return BranchCurve(label=label, axis=axis, points=points, termination=meta.termination)


def write_trace_csv(trace: EvolutionTrace, path: Path) -> None:
    intensities, power = trace.intensities, trace.U
    rows = (
        [format_float(trace.z[i])] + [format_float(v) for v in intensities[i]] + [format_float(power[i])]
        + _field_cells(trace.fields[i])
        for i in range(len(trace.z))
    )
    _write_rows(path, TRACE_COLUMNS, rows)
    write_record(sidecar_path(path), TraceSidecar(status=trace.status, meta=trace.meta))


def read_trace_csv(path: Path) -> EvolutionTrace:
    meta = read_record(sidecar_path(path), TraceSidecar)
    rows = _read_rows(path, TRACE_COLUMNS)
    z = np.array([float(row["z"]) for row in rows])
    fields = np.array([_field_from_row(row) for row in rows]).reshape(len(rows), 4)
    return EvolutionTrace(z=z, fields=fields, status=meta.status, meta=meta.meta)


def write_ghost_csv(branch: GhostBranch, path: Path) -> None:
    rows = (
        [format_float(v) for v in (g.params.gamma, g.c1, g.c2, g.dphi, g.B, g.phi_b, g.b.real, g.b.imag)]
        for g in branch.points
    )
    _write_rows(path, GHOST_COLUMNS, rows)
    base = branch.points[0].params if branch.points else None
    write_record(sidecar_path(path), GhostSidecar(
        label=branch.label, pin=branch.pin, b_pin=branch.b_pin, termination=branch.termination, params=base,
    ))


def read_ghost_csv(path: Path) -> GhostBranch:
    meta = read_record(sidecar_path(path), GhostSidecar)
    points = []
    for row in _read_rows(path, GHOST_COLUMNS):
        if meta.params is None:
            raise FileFormatError(f"{path}: rows without parameters in the sidecar")
        params = meta.params.with_gamma(float(row["gamma"]))
        points.append(GhostMode(
            c1=float(row["c1"]),
            c2=float(row["c2"]),
            phi1=0.0,
            phi2=float(row["dphi"]),
            B=float(row["B"]),
            phi_b=float(row["phi_b"]),
            params=params,
        ))
    return GhostBranch(
        label=meta.label,
        pin=meta.pin,
        b_pin=meta.b_pin,
        points=points,
        termination=meta.termination,
    )
