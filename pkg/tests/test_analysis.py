import math

import numpy as np
import pytest

from susyband.analysis import (
    bound_states_in_gaps,
    compare_band_structure,
    displacement_fit,
    invariance_test,
    shooting_eigenvalue,
)
from susyband.errors import BandEnergyError, PeriodMismatchError
from susyband.floquet import discriminant
from susyband.potentials import ShiftedPotential, lame

LAME1 = lame(1, 0.5)
LAME2 = lame(2, 0.5)


def test_compare_shifted_is_invisible():
    grid = np.linspace(0.2, 2.5, 20)
    dev = compare_band_structure(LAME1, ShiftedPotential(LAME1, 0.77), grid)
    assert dev < 1e-9


def test_compare_distinct_potentials():
    v1 = lame(1, 0.5)
    # same period, different index: spectra differ visibly
    dev = compare_band_structure(v1, lame(2, 0.5), np.linspace(0.2, 2.5, 20))
    assert dev > 0.1


def test_period_mismatch_rejected():
    with pytest.raises(PeriodMismatchError):
        compare_band_structure(lame(1, 0.5), lame(1, 0.6), [1.0])


def test_displacement_fit_recovers_exact_shifts():
    period = LAME1.period
    rng = np.random.default_rng(17)
    for delta in rng.uniform(0.0, period, 20):
        found, residual = displacement_fit(LAME1, ShiftedPotential(LAME1, float(delta)))
        err = abs((found - delta + period / 2) % period - period / 2)
        assert err < 1e-8
        assert residual < 1e-10


def test_displacement_fit_fig1a(scenario_cache):
    run = scenario_cache("fig1a")
    delta, residual = displacement_fit(run.potential, run.result.partner)
    assert delta == pytest.approx(run.potential.period / 2, abs=1e-4)
    assert residual < 1e-4


def test_displacement_not_a_copy(scenario_cache):
    run = scenario_cache("fig1b")  # n=2 lowest-edge transform
    _, residual = displacement_fit(run.potential, run.result.partner)
    assert residual > 0.1


def test_invariance_n1_below_spectrum():
    report = invariance_test(LAME1, -1.0)
    assert report.invariant
    assert report.residual_product < 1e-4
    assert report.residual_displacement < 1e-4


def test_invariance_n2_fails():
    report = invariance_test(LAME2, 0.4)
    assert not report.invariant
    assert report.residual_displacement > 1e-2


def test_invariance_at_edge_half_period():
    report = invariance_test(LAME1, 0.5)
    assert report.invariant
    assert report.delta == pytest.approx(LAME1.period / 2, abs=1e-4)


def test_invariance_midband_error():
    with pytest.raises(BandEnergyError):
        invariance_test(LAME1, 0.75)


def test_invariance_report_schema():
    report = invariance_test(LAME1, -1.0)
    doc = report.to_dict()
    assert set(doc) == {
        "epsilon",
        "delta",
        "residual_displacement",
        "residual_product",
        "verdict",
    }
    assert doc["verdict"] == "invariant"


@pytest.mark.parametrize("m", [0.3, 0.5, 0.7])
def test_invariance_across_parameter(m):
    v = lame(1, m)
    e0 = m  # the lowest edge of the n=1 family sits at the parameter itself
    for frac in (0.15, 0.35, 0.55, 0.75, 0.95):
        eps = e0 - 0.2 - frac  # five energies below the spectrum
        report = invariance_test(v, eps)
        assert report.invariant, (m, eps, report)
        assert report.residual_product < 1e-4
        assert report.residual_displacement < 1e-4


def test_bound_states_fig3(scenario_cache):
    run = scenario_cache("fig3b")
    states = bound_states_in_gaps(run.result, run.band_structure)
    assert len(states) == 1
    state = states[0]
    assert state.epsilon == 0.4
    assert state.gap_index == 0  # below the first edge
    assert state.decay_rate_relative_error < 0.05

    run = scenario_cache("fig3d")
    states = bound_states_in_gaps(run.result, run.band_structure)
    assert len(states) == 2
    assert [s.gap_index for s in states] == [1, 1]
    assert all(s.decay_rate_relative_error < 0.05 for s in states)


def test_bound_states_empty_for_bloch(scenario_cache):
    run = scenario_cache("fig2c")
    assert bound_states_in_gaps(run.result, run.band_structure) == []


def test_decay_matches_multiplier(scenario_cache):
    # expected rate equals log beta_+ / T of the original potential at eps
    run = scenario_cache("fig3a")
    state = run.result.kernel[0]
    d = discriminant(run.potential, state.epsilon)
    beta_plus = abs(d) / 2 + math.sqrt(d * d / 4 - 1.0)
    rate = math.log(beta_plus) / run.potential.period
    assert state.expected_decay_rate == pytest.approx(rate, rel=1e-9)
    assert state.decay_rate == pytest.approx(rate, rel=0.05)


def test_shooting_finds_created_level(scenario_cache):
    run = scenario_cache("fig3a")
    partner = run.result.partner
    x = run.result.x
    found = shooting_eigenvalue(partner, -0.05, 0.05, x_lo=x[0], x_hi=x[-1])
    assert found == pytest.approx(0.0, abs=1e-3)


def test_shooting_no_eigenvalue_in_empty_bracket(scenario_cache):
    run = scenario_cache("fig3a")
    partner = run.result.partner
    x = run.result.x
    # a slice of the same gap well away from the created level
    found = shooting_eigenvalue(partner, 0.12, 0.18, x_lo=x[0], x_hi=x[-1])
    assert found is None
