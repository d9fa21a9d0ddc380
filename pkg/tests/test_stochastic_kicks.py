import logging
import math

import numpy as np
import pytest
from scipy import integrate as sp_integrate

from models import ValidationError, MultipleRootsError
from stochastic_kicks import (KickProcess, LangevinParams, ThermalParams, gaussian_pulse,
                              heaviside_from_delta, spike_integral, sample_kick_times,
                              simulate_langevin, simulate_langevin_ensemble, ensemble_stats,
                              einstein_Q)


class TestPulses:
    @pytest.mark.parametrize('alpha', [1.0, 0.1, 1e-3])
    def test_unit_area(self, alpha):
        reach = 20.0 * math.sqrt(alpha)
        area, _ = sp_integrate.quad(gaussian_pulse, -reach, reach, args=(alpha,))
        assert area == pytest.approx(1.0, abs=1e-8)

    def test_heaviside(self):
        assert heaviside_from_delta(0.0, 0.01) == 0.5
        assert heaviside_from_delta(0.1, 0.01) == pytest.approx(0.5 + 0.5 * math.erf(1.0), abs=1e-10)
        assert heaviside_from_delta(-0.1, 0.01) == pytest.approx(0.5 - 0.5 * math.erf(1.0), abs=1e-10)
        assert heaviside_from_delta(5.0, 0.01) == pytest.approx(1.0, abs=1e-12)

    def test_width_must_be_positive(self):
        with pytest.raises(ValidationError):
            gaussian_pulse(0.0, 0.0)


class TestSpikeIntegral:
    def test_single_crossing(self):
        assert spike_integral(lambda t: t - 1.0, 5.0, 0.01) == pytest.approx(1.0, abs=1e-6)

    def test_before_crossing(self):
        assert spike_integral(lambda t: t - 1.0, 0.5, 0.01) == pytest.approx(0.0, abs=1e-6)

    def test_bare_delta_scales_with_rate(self):
        value = spike_integral(lambda t: 2.0 * (t - 1.0), 5.0, 0.01, with_rate=False)
        assert value == pytest.approx(0.5, abs=1e-6)

    def test_multiple_roots(self):
        with pytest.raises(MultipleRootsError):
            spike_integral(math.sin, 5.0, 0.01, window_start=-10.0)


class TestKickProcess:
    def test_fluctuation_strength(self):
        proc = KickProcess.from_fluctuation(2.0, 0.1, seed=3)
        assert proc.strength == pytest.approx(math.sqrt(0.2))
        assert proc.Q == pytest.approx(2.0)

    def test_kick_times_are_reproducible(self):
        proc = KickProcess(strength=1.0, mean_free_time=0.1, seed=11)
        first = sample_kick_times(proc, 50.0, run_index=2)
        again = sample_kick_times(proc, 50.0, run_index=2)
        other = sample_kick_times(proc, 50.0, run_index=3)
        assert np.array_equal(first, again)
        assert not np.array_equal(first, other)
        assert np.all(np.diff(first) >= 0)

    def test_kick_rate(self):
        proc = KickProcess(strength=1.0, mean_free_time=0.1, seed=0)
        assert len(sample_kick_times(proc, 1000.0)) == pytest.approx(10000, rel=0.05)

    def test_bad_mean_free_time(self):
        with pytest.raises(ValidationError):
            KickProcess(mean_free_time=0.0)


class TestLangevin:
    def test_no_kicks_is_pure_decay(self):
        params = LangevinParams(gamma=2.0, m=1.0, Q=0.0)
        proc = KickProcess.from_fluctuation(0.0, 0.1)
        traj = simulate_langevin(params, proc, 1.0, 0.01, v0=1.0)
        assert traj.final_state[0] == pytest.approx(math.exp(-2.0), rel=1e-12)

    def test_single_run_matches_ensemble_row(self):
        params = LangevinParams(gamma=1.0, m=1.0, Q=2.0)
        proc = KickProcess.from_fluctuation(2.0, 0.1)
        ensemble = simulate_langevin_ensemble(params, proc, 5.0, 0.01, runs=5, seed=7)
        single = simulate_langevin(params, proc, 5.0, 0.01, seed=7, run_index=3)
        assert np.array_equal(single.states[:, 0], ensemble[3])

    def test_coarse_step_warning(self, caplog):
        params = LangevinParams(gamma=1.0, m=1.0, Q=2.0)
        proc = KickProcess.from_fluctuation(2.0, 0.1)
        with caplog.at_level(logging.WARNING, logger='liectl'):
            simulate_langevin(params, proc, 1.0, 0.05)
        assert any('coarse' in record.getMessage() for record in caplog.records)

    def test_stats_from_trajectories(self):
        params = LangevinParams(gamma=1.0, m=1.0, Q=2.0)
        proc = KickProcess.from_fluctuation(2.0, 0.1)
        runs = [simulate_langevin(params, proc, 2.0, 0.01, seed=1, run_index=i) for i in range(4)]
        stats = ensemble_stats(runs, 1.0, max_lag=5)
        assert stats.runs == 4
        assert stats.autocorr[0] == pytest.approx(1.0)
        assert len(stats.lag_times) == 6

    def test_start_beyond_end(self):
        with pytest.raises(ValidationError):
            ensemble_stats(np.zeros((2, 10)), 5.0, dt=0.1)

    def test_parameters(self):
        with pytest.raises(ValidationError):
            LangevinParams(gamma=0.0)
        assert LangevinParams(gamma=1.0, m=2.0, Q=2.0).stationary_second_moment == 0.5


def test_einstein_relation():
    assert einstein_Q(1.0, ThermalParams(kB=1.0, T_abs=2.0)) == 4.0


@pytest.mark.slow
def test_stationary_statistics():
    params = LangevinParams(gamma=1.0, m=1.0, Q=2.0)
    proc = KickProcess.from_fluctuation(params.Q, 0.1)
    ensemble = simulate_langevin_ensemble(params, proc, 8.0, 0.01, runs=10000, seed=0)
    stats = ensemble_stats(ensemble, 4.0, dt=0.01, max_lag=100)
    assert stats.second_moment == pytest.approx(1.0, abs=0.05)
    assert stats.mean == pytest.approx(0.0, abs=0.05)
    assert stats.decay_constant == pytest.approx(1.0, rel=0.1)


@pytest.mark.slow
def test_einstein_round_trip():
    thermal = ThermalParams(kB=1.0, T_abs=0.5)
    params = LangevinParams(gamma=1.0, m=1.0, Q=einstein_Q(1.0, thermal))
    proc = KickProcess.from_fluctuation(params.Q, 0.1)
    ensemble = simulate_langevin_ensemble(params, proc, 8.0, 0.01, runs=10000, seed=1)
    stats = ensemble_stats(ensemble, 4.0, dt=0.01)
    assert params.m * stats.second_moment == pytest.approx(thermal.kB * thermal.T_abs, rel=0.05)
