import json

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from base.data_types import Axis, GhostPin, Sign
from base.errors import FileFormatError
from base.params import CouplerParams
from dynamics.evolution import EvolutionKind, TraceStatus, integrate
from modes.exact import ExactModeSpec, circular_mode
from modes.ghost import ghost_branch, ghost_closed_form
from solver.bifurcations import CrossingKind
from solver.continuation import BranchCurve, Termination, attach_stability, continue_branch
from storage.serialization import (
    BRANCH_COLUMNS,
    FILE_FORMAT_VERSION,
    BranchSidecar,
    CrossingRecord,
    CrossingsFile,
    GhostRecord,
    ModeRecord,
    OverlayFile,
    read_branch_csv,
    read_ghost_csv,
    read_record,
    read_trace_csv,
    sidecar_path,
    write_branch_csv,
    write_ghost_csv,
    write_record,
    write_trace_csv,
)


@pytest.fixture
def curve(params_a0):
    seed = circular_mode(ExactModeSpec(sign=Sign.PLUS, b=2.0, params=params_a0))
    return attach_stability(continue_branch(params_a0, Axis.B, (2.0, 2.3), seed))


def test_branch_round_trip(curve, tmp_path):
    path = tmp_path / "circular.csv"
    write_branch_csv(curve, path)
    loaded = read_branch_csv(path)
    assert loaded.label == curve.label
    assert loaded.axis is Axis.B
    assert loaded.termination is curve.termination
    assert len(loaded.points) == len(curve.points)
    for original, point in zip(curve.points, loaded.points):
        assert point.param == original.param
        assert_array_equal(point.mode.w, original.mode.w)
        assert point.mode.family is original.mode.family
        assert point.stability.n_unstable == original.stability.n_unstable
        assert_array_equal(point.stability.eigenvalues, original.stability.eigenvalues)


def test_gamma_branch_restores_parameters(params_a0, tmp_path):
    seed = circular_mode(ExactModeSpec(sign=Sign.PLUS, b=2.0, params=params_a0))
    curve = continue_branch(params_a0, Axis.GAMMA, (0.5, 0.6), seed)
    path = tmp_path / "gamma.csv"
    write_branch_csv(curve, path)
    loaded = read_branch_csv(path)
    assert [p.mode.params.gamma for p in loaded.points] == list(curve.params)
    assert all(p.stability is None for p in loaded.points)


def test_identical_curves_give_identical_bytes(curve, tmp_path):
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    write_branch_csv(curve, first)
    write_branch_csv(curve, second)
    assert first.read_bytes() == second.read_bytes()
    assert sidecar_path(first).read_bytes() == sidecar_path(second).read_bytes()


def test_empty_curve_is_header_only(tmp_path):
    path = tmp_path / "empty.csv"
    write_branch_csv(BranchCurve(label="circular-", axis=Axis.GAMMA, termination=Termination.BOUNDARY), path)
    assert path.read_text() == ",".join(BRANCH_COLUMNS) + "\n"
    loaded = read_branch_csv(path)
    assert loaded.points == []
    assert loaded.termination is Termination.BOUNDARY


def test_trace_round_trip(params_a0, tmp_path):
    trace = integrate(params_a0, np.array([0.3, 0.1j, 0.2, 0.0]), 2.0, description="test")
    path = tmp_path / "trace.csv"
    write_trace_csv(trace, path)
    loaded = read_trace_csv(path)
    assert_array_equal(loaded.z, trace.z)
    assert_array_equal(loaded.fields, trace.fields)
    assert loaded.status is TraceStatus.COMPLETE
    assert loaded.meta == trace.meta


def test_ghost_round_trip(tmp_path):
    branch = ghost_branch(CouplerParams(k=1.0, gamma=1.0), 2.0, (1.01, 1.1), pin=GhostPin.MODULUS)
    path = tmp_path / "ghost.csv"
    write_ghost_csv(branch, path)
    loaded = read_ghost_csv(path)
    assert loaded.label == "ghost+"
    assert loaded.pin is GhostPin.MODULUS
    assert loaded.termination is branch.termination
    assert_array_equal(loaded.gammas, branch.gammas)
    for original, ghost in zip(branch.points, loaded.points):
        assert (ghost.c1, ghost.c2, ghost.B, ghost.phi_b) == (original.c1, original.c2, original.B, original.phi_b)
        assert ghost.dphi == pytest.approx(original.dphi, abs=1e-15)


def test_mode_record_round_trip(params_a1):
    mode = circular_mode(ExactModeSpec(sign=Sign.MINUS, b=1.0, params=params_a1))
    loaded = ModeRecord.from_json(ModeRecord.of(mode).to_json()).to_mode()
    assert_array_equal(loaded.w, mode.w)
    assert loaded.params == mode.params
    assert loaded.family is mode.family
    assert json.loads(ModeRecord.of(mode).to_json())["family"] == "circular-"


def test_sidecar_is_a_versioned_record(curve, tmp_path):
    path = tmp_path / "circular.csv"
    write_branch_csv(curve, path)
    raw = json.loads(sidecar_path(path).read_text())
    assert raw["version"] == FILE_FORMAT_VERSION
    assert raw["kind"] == "branch"
    assert raw["axis"] == "b"
    sidecar = read_record(sidecar_path(path), BranchSidecar)
    assert sidecar.axis is Axis.B
    assert sidecar.params == curve.points[0].mode.params


def test_overlay_record(tmp_path):
    ghost = ghost_closed_form(CouplerParams(k=1.0, gamma=1.2), 2.0, GhostPin.MODULUS, Sign.MINUS)
    path = tmp_path / "overlay.json"
    write_record(path, OverlayFile(
        shift=1.5, misfit=1e-3, window=[2.0, 9.0], ghost=GhostRecord.of(ghost), evolution_kind=EvolutionKind.OTHER,
    ))
    loaded = read_record(path, OverlayFile)
    assert loaded.evolution_kind is EvolutionKind.OTHER
    assert loaded.ghost.to_ghost() == ghost
    assert json.loads(path.read_text())["evolution_kind"] == "other"


def test_crossings_record(tmp_path):
    path = tmp_path / "crossings.json"
    crossing = CrossingRecord(branch="circular+", param=1.0, count_change=1,
                              classification=CrossingKind.PITCHFORK_CANDIDATE)
    write_record(path, CrossingsFile(crossings=[crossing]))
    assert read_record(path, CrossingsFile).crossings == [crossing]


def test_version_mismatch(tmp_path):
    path = tmp_path / "old.json"
    write_record(path, CrossingsFile(crossings=[]))
    assert read_record(path, CrossingsFile).version == FILE_FORMAT_VERSION
    path.write_text(json.dumps({"version": FILE_FORMAT_VERSION - 1, "kind": "crossings", "crossings": []}))
    with pytest.raises(FileFormatError):
        read_record(path, CrossingsFile)


def test_malformed_record(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text(json.dumps({"version": FILE_FORMAT_VERSION, "kind": "crossings"}))
    with pytest.raises(FileFormatError):
        read_record(path, CrossingsFile)


def test_unexpected_header(curve, tmp_path):
    path = tmp_path / "broken.csv"
    write_branch_csv(curve, path)
    path.write_text("param,b\n1,2\n")
    with pytest.raises(FileFormatError):
        read_branch_csv(path)
