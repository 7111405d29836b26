import numpy as np
import pytest
from numpy.testing import assert_allclose

from base.data_types import GhostPin, RngSeed, Sign
from base.errors import InvalidParametersError
from base.params import CouplerParams
from dynamics.evolution import (
    EvolutionKind,
    EvolutionTrace,
    IntegratorSettings,
    TraceStatus,
    classify_evolution,
    ghost_trace,
    integrate,
    perturb,
    seed_sweep,
)
from figures import unstable_circular
from modes.exact import ExactModeSpec, circular_mode
from modes.ghost import ghost_closed_form, ghost_intensity_trace


def _circular(gamma, b=2.0, sign=Sign.PLUS):
    return circular_mode(ExactModeSpec(sign=sign, b=b, params=CouplerParams(k=1.0, gamma=gamma)))


def test_stationary_mode_keeps_its_intensities():
    mode = _circular(0.0)
    trace = integrate(mode.params, mode.w, 100.0)
    assert trace.status is TraceStatus.COMPLETE
    assert trace.z[0] == 0.0
    assert trace.z[-1] == 100.0
    assert len(trace.z) == 1001
    assert np.max(np.abs(trace.intensities - np.abs(mode.w) ** 2)) < 1e-8
    assert trace.meta["power_law_defect"] < 1e-6
    assert trace.blowup_z is None


def test_stable_mode_stays_close_under_perturbation():
    mode = _circular(0.5)
    trace = integrate(mode.params, perturb(mode, 1e-4, RngSeed(7)), 200.0)
    assert trace.status is TraceStatus.COMPLETE
    assert np.max(np.abs(trace.intensities - np.abs(mode.w) ** 2)) < 1e-2
    assert trace.meta["power_law_defect"] < 1e-6
    assert classify_evolution(trace) is EvolutionKind.BREATHING


def test_gauge_covariance(params_a0, rng):
    u0 = 0.05 * (rng.standard_normal(4) + 1j * rng.standard_normal(4))
    phase = np.exp(1.1j)
    plain = integrate(params_a0, u0, 10.0)
    rotated = integrate(params_a0, phase * u0, 10.0)
    assert_allclose(rotated.fields, phase * plain.fields, atol=1e-8)


def test_gain_growth_blows_up_in_broken_phase():
    params = CouplerParams(k=1.0, gamma=2.0)
    trace = integrate(params, np.array([0.1, 0.0, 0.1, 0.1], dtype=complex), 200.0)
    assert trace.status is TraceStatus.BLOWUP
    assert trace.blowup_z is not None and 0.0 < trace.blowup_z < 200.0
    assert trace.z[-1] <= trace.blowup_z
    assert classify_evolution(trace) is EvolutionKind.GAIN_GROWTH


def test_blowup_threshold_is_configurable():
    params = CouplerParams(k=1.0, gamma=2.0)
    early = integrate(params, np.full(4, 0.1, dtype=complex), 200.0, IntegratorSettings(blowup_norm=1.0))
    late = integrate(params, np.full(4, 0.1, dtype=complex), 200.0)
    assert early.blowup_z < late.blowup_z


def test_trace_metadata(params_a0):
    trace = integrate(params_a0, np.ones(4), 1.0, description="flat start")
    assert trace.meta["params"] == params_a0.to_dict()
    assert trace.meta["initial"] == "flat start"
    assert trace.meta["integrator"]["method"] == "DOP853"
    assert trace.meta["z_max"] == 1.0


def test_invalid_runs(params_a0):
    with pytest.raises(InvalidParametersError):
        integrate(params_a0, np.ones(4), 0.0)
    with pytest.raises(InvalidParametersError):
        integrate(params_a0, np.ones(4), 1.0, IntegratorSettings(rtol=1e-2))
    with pytest.raises(InvalidParametersError):
        integrate(params_a0, np.ones(4), 1.0, IntegratorSettings(atol=1e-15))


def test_perturb():
    mode = _circular(0.5)
    first = perturb(mode, 1e-3, RngSeed(5))
    assert_allclose(first, perturb(mode, 1e-3, RngSeed(5)))
    assert not np.allclose(first, perturb(mode, 1e-3, RngSeed(6)))
    assert np.linalg.norm(first - mode.w) == pytest.approx(1e-3)
    assert_allclose(perturb(mode, 0.0, RngSeed(5)), mode.w)
    with pytest.raises(InvalidParametersError):
        perturb(mode, -1e-3, RngSeed(5))


def test_ghost_trace_follows_exponential_law():
    ghost = ghost_closed_form(CouplerParams(k=1.0, gamma=1.5), 2.0, GhostPin.MODULUS, Sign.MINUS)
    trace = ghost_trace(ghost, 5.0, samples_per_unit=4)
    assert len(trace.z) == 21
    assert_allclose(trace.intensities, ghost_intensity_trace(ghost, trace.z), rtol=1e-12)
    assert np.all(np.diff(trace.U) > 0)


@pytest.mark.slow
def test_unstable_circular_sweep_shows_both_scenarios():
    mode = unstable_circular(CouplerParams(k=1.0, gamma=0.5), 3.0)
    results = seed_sweep(mode, 1e-3, range(32), 2000.0, workers=4)
    assert [r.rng_seed for r in results] == list(range(32))
    kinds = {r.kind for r in results}
    assert EvolutionKind.GAIN_GROWTH in kinds
    assert EvolutionKind.BREATHING in kinds


def _synthetic_trace(z, amplitudes, status=TraceStatus.COMPLETE):
    return EvolutionTrace(z=z, fields=np.asarray(amplitudes, dtype=complex), status=status)


def test_symmetric_gain_growth_blowup_is_classified():
    params = CouplerParams(k=1.0, gamma=2.0)
    trace = integrate(params, np.array([0.1, 0.0, 0.1, 0.1], dtype=complex), 200.0)
    final = trace.intensities[-1]
    assert final[0] == pytest.approx(final[2], rel=1e-3)
    assert final[3] < np.max(trace.intensities[:, 3])


def test_lopsided_growth_is_not_gain_growth():
    z = np.linspace(0.0, 10.0, 101)
    start = np.array([0.1, 0.1, 0.1, 0.1])
    end = np.sqrt([1e3, 1e-3, 0.0, 1e-3])
    weights = np.linspace(0.0, 1.0, len(z))[:, None]
    trace = _synthetic_trace(z, (1 - weights) * start + weights * end)
    assert trace.U[-1] > 1e3 * trace.U[0]
    assert classify_evolution(trace) is EvolutionKind.OTHER


def test_growth_with_undecayed_lossy_sites_is_not_gain_growth():
    z = np.linspace(0.0, 10.0, 101)
    growth = np.exp(z)[:, None] * np.full(4, 0.1)
    trace = _synthetic_trace(z, growth, TraceStatus.BLOWUP)
    assert classify_evolution(trace) is EvolutionKind.OTHER


def test_constant_trace_is_not_breathing():
    z = np.linspace(0.0, 10.0, 101)
    trace = _synthetic_trace(z, np.tile(np.sqrt([0.3, 0.2, 0.2, 0.3]), (len(z), 1)))
    assert classify_evolution(trace) is EvolutionKind.OTHER


def test_power_exchange_is_breathing():
    z = np.linspace(0.0, 20.0, 201)
    swing = 1.0 + 0.3 * np.sin(z)
    amplitudes = np.sqrt(np.column_stack([0.3 * swing, 0.2 * swing, 0.2 * swing, 0.3 * swing]))
    assert classify_evolution(_synthetic_trace(z, amplitudes)) is EvolutionKind.BREATHING
