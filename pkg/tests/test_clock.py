import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aqgates.clock import (
    ACCURACY_CAP,
    ClockParams,
    TickRecord,
    build_clock_model,
    ensemble_rate,
    excited_probability,
    fractional_gate_plan,
    gibbs_baseline_flux,
    metastable_margin,
    plan_fractional_gate,
    simulate_ticks,
    steady_state_flux,
    thermal_occupation,
    tick_count_pmf,
    tick_ensemble,
    tick_statistics,
)
from aqgates.core import partial_trace, steady_state
from aqgates.errors import InsufficientDataError, InvalidParameterError, ResonanceWarning

DEFAULT_ACCURACY = 2.3848017  # frozen: pooled intervals, 400 trajectories x 150 time units, seed 11


@pytest.fixture(scope="module")
def model():
    return build_clock_model(ClockParams())


class TestModel:
    def test_structure(self, model):
        assert model.dim == 12
        assert model.hamiltonian.hermitian
        assert model.labels[model.tick_channel] == "emission"
        assert model.warnings == ()

    def test_thermal_occupation(self):
        assert thermal_occupation(0.01, 1.0) == pytest.approx(99.5, rel=1e-3)
        assert thermal_occupation(1.0, 0.0) == 0.0

    def test_cold_ground_population(self, model):
        p = model.params
        pops = model.initial_distribution().reshape(3, 2, 2)
        assert pops[0, 0].sum() == pytest.approx(1 / (1 + math.exp(-p.omega_c / p.temp_c)), abs=1e-15)
        assert pops.sum() == pytest.approx(1.0)
        assert pops[1:].sum() == 0

    def test_detailed_balance_of_channels(self, model):
        p = model.params
        rates = dict(zip(model.labels, (r for _, r in model.channels)))
        assert rates["cold_up"] / rates["cold_down"] == pytest.approx(math.exp(-p.omega_c / p.temp_c))
        assert rates["hot_up"] / rates["hot_down"] == pytest.approx(math.exp(-p.omega_h / p.temp_h))
        assert rates["cold_down"] == pytest.approx(10 * p.coupling * (thermal_occupation(p.omega_c, p.temp_c) + 1))

    def test_off_resonance_warns(self):
        with pytest.warns(ResonanceWarning):
            m = build_clock_model(ClockParams(omega_h=6.5))
        assert m.warnings and "residual" in m.warnings[0]

    def test_on_resonance_silent(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            build_clock_model(ClockParams())

    @pytest.mark.parametrize("kw", [dict(temp_c=0.0), dict(temp_c=2.0, temp_h=1.0), dict(coupling=-1.0)])
    def test_validation(self, kw):
        with pytest.raises(InvalidParameterError):
            ClockParams(**kw)

    def test_lambda_steady_state_diagonal(self, model):
        rho = partial_trace(steady_state(model), (3, 2, 2), [0])
        assert np.max(np.abs(rho - np.diag(np.diag(rho)))) < 1e-8

    def test_equal_temperatures_match_gibbs_baseline(self):
        # weak exchange: the engine stays thermal and the hop is incoherent
        p = ClockParams(coupling=0.1, cold_rate=1.0, temp_h=0.5)
        assert steady_state_flux(build_clock_model(p)) == pytest.approx(gibbs_baseline_flux(p), rel=0.03)

    def test_baseline_tracks_driven_engine(self):
        p = ClockParams(coupling=0.1, cold_rate=1.0)
        assert steady_state_flux(build_clock_model(p)) == pytest.approx(gibbs_baseline_flux(p), rel=0.03)


class TestTicks:
    def test_seed_reproducible(self, model):
        a = simulate_ticks(model, 400.0, seed=5, step=0.05)
        b = simulate_ticks(model, 400.0, seed=5, step=0.05)
        assert len(a) > 3
        np.testing.assert_array_equal(a.times, b.times)

    def test_no_exchange_no_ticks(self):
        m = build_clock_model(ClockParams(coupling=0.0, cold_rate=10.0))
        assert all(len(r) == 0 for r in tick_ensemble(m, 100.0, seed=1, n_traj=200, step=0.05))

    def test_no_hot_bath_single_tick_at_most(self):
        m = build_clock_model(ClockParams(hot_rate=0.0))
        recs = tick_ensemble(m, 200.0, seed=2, n_traj=300, step=0.05)
        assert max(len(r) for r in recs) <= 1
        assert sum(len(r) for r in recs) > 0  # the thermally excited hot qubit pumps once

    def test_hotter_bath_ticks_faster(self):
        temps = (2.0, 5.0, 10.0)
        models = [build_clock_model(ClockParams(temp_h=t)) for t in temps]
        oracle = [steady_state_flux(m) for m in models]
        assert oracle[0] < oracle[1] < oracle[2]
        rates = [ensemble_rate(tick_ensemble(m, 50.0, seed=3, n_traj=1000, step=0.05, start="steady"), 0, 50)
                 for m in models]
        assert rates[0] < rates[1] < rates[2]

    def test_flux_matches_steady_state(self, model):
        recs = tick_ensemble(model, 40.0, seed=4, n_traj=3000, step=0.05, start="steady")
        # ~2800 ticks: 3 sigma is about 6 %
        assert ensemble_rate(recs, 0, 40) == pytest.approx(steady_state_flux(model), rel=0.06)

    def test_default_accuracy_golden(self, model):
        recs = tick_ensemble(model, 150.0, seed=11, n_traj=400, step=0.05)
        assert tick_statistics(recs).accuracy == pytest.approx(DEFAULT_ACCURACY, abs=1e-6)

    def test_unknown_start(self, model):
        with pytest.raises(InvalidParameterError):
            tick_ensemble(model, 1.0, seed=0, n_traj=1, start="hot")


class TestStatistics:
    def test_poissonian(self):
        rng = np.random.default_rng(0)
        t = np.cumsum(rng.exponential(2.0, 50_000))
        stats = tick_statistics(TickRecord(t, 0))
        assert stats.mean_interval == pytest.approx(2.0, rel=0.02)
        assert stats.accuracy == pytest.approx(1.0, rel=0.03)

    def test_periodic(self):
        stats = tick_statistics(TickRecord(np.arange(1, 20) * 0.5, 0))
        assert stats.variance == 0 and stats.capped and stats.accuracy == ACCURACY_CAP

    def test_insufficient(self):
        with pytest.raises(InsufficientDataError):
            tick_statistics(TickRecord(np.array([1.0]), 0))

    def test_two_ticks_have_no_variance(self):
        stats = tick_statistics(TickRecord(np.array([1.0, 3.0]), 0))
        assert stats.mean_interval == 2.0 and math.isnan(stats.variance)

    def test_records_must_increase(self):
        with pytest.raises(InvalidParameterError):
            TickRecord(np.array([1.0, 1.0]), 0)

    @given(st.lists(st.floats(0.01, 10), min_size=3, max_size=40))
    def test_unbiased_variance(self, gaps):
        stats = tick_statistics(TickRecord(np.cumsum(gaps), 0))
        # the first gap is the time of the first tick, not an interval
        assert stats.variance == pytest.approx(np.var(gaps[1:], ddof=1), rel=1e-9, abs=1e-12) or stats.capped


class TestMargin:
    @pytest.mark.parametrize("life,gate,ratio,ok", [(4e-6, 250e-9, 16.0, True), (1e-6, 1e-6, 1.0, False),
                                                    (1e-3, 250e-9, 4000.0, True)])
    def test_margin(self, life, gate, ratio, ok):
        check = metastable_margin(life, gate)
        assert check.ratio == pytest.approx(ratio, rel=1e-12) and check.passed is ok

    def test_rejects_nonpositive(self):
        with pytest.raises(InvalidParameterError):
            metastable_margin(0.0, 1.0)


class TestFractionalPlan:
    def test_quarter_turn_in_eighths(self):
        # theta = 2 g t = pi/8
        plan = plan_fractional_gate(math.pi / 2, coupling=math.pi / 16, tick_time=1.0)
        assert plan.ticks == 4 and not plan.overshoot

    def test_single_tick_has_no_spread(self):
        spread = fractional_gate_plan(math.pi / 2, coupling=math.pi / 4, tick_time=1.0, budget=None)
        assert spread.plan.ticks == 1
        assert np.all(spread.errors == 0)

    def test_overshoot_flag(self):
        plan = plan_fractional_gate(0.1, coupling=1.0, tick_time=1.0)
        assert plan.ticks == 1 and plan.overshoot

    @settings(max_examples=200)
    @given(target=st.floats(0.01, 10), per_tick=st.floats(1e-3, 10))
    def test_rounding_bound(self, target, per_tick):
        plan = plan_fractional_gate(target, coupling=per_tick / 2, tick_time=1.0)
        if not plan.overshoot:
            assert abs(plan.ticks * plan.per_tick_angle - target) <= plan.per_tick_angle / 2 + 1e-12

    def test_budget_rms_matches_exact_distribution(self):
        theta = math.pi / 8
        spread = fractional_gate_plan(math.pi / 2, coupling=theta / 2, tick_time=1.0, budget=(4.0, 1.0),
                                      samples=100_000, seed=9)
        pmf = tick_count_pmf(4.0, 1.0, 40)
        k = np.arange(pmf.size)
        exact_rms = theta * math.sqrt(np.sum(pmf * (k - 4) ** 2))
        assert pmf.sum() == pytest.approx(1.0, abs=1e-12)
        assert spread.rms_error == pytest.approx(exact_rms, rel=0.01)
        freq = np.bincount(spread.tick_counts, minlength=pmf.size)[:pmf.size] / 100_000
        np.testing.assert_allclose(freq, pmf, atol=5e-3)

    def test_rejects_bad_inputs(self):
        with pytest.raises(InvalidParameterError):
            plan_fractional_gate(0.0, 1.0, 1.0)
        with pytest.raises(InvalidParameterError):
            plan_fractional_gate(1.0, 0.0, 1.0)


def test_excited_probability_limits():
    assert excited_probability(1.0, 0.0) == 0.0
    assert excited_probability(1e-9, 1e3) == pytest.approx(0.5)
