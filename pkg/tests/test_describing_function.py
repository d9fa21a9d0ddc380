import math

import pytest

from models import ValidationError, ConvergenceError
from describing_function import (QuasiLinearLoop, SaturationNonlinearity, RelayNonlinearity,
                                 vdp_loop, vdp_eigen_locus, vdp_linear_block, harmonic_balance_solve,
                                 describing_function, measure_cycle, vdp_simulate_amplitude,
                                 amplitude_sweep, spring_tracer, vdp_tracer)


class TestHarmonicBalance:
    @pytest.mark.parametrize('alpha', [0.1, 1.0, 5.0])
    def test_van_der_pol_cycle(self, alpha):
        prediction = harmonic_balance_solve(vdp_loop(alpha), 1.5, 0.8)
        assert prediction.A == pytest.approx(2.0, abs=1e-8)
        assert prediction.omega == pytest.approx(1.0, abs=1e-8)

    def test_guess_already_on_the_cycle(self):
        prediction = harmonic_balance_solve(vdp_loop(1.0), 2.0, 1.0)
        assert (prediction.A, prediction.omega, prediction.restarts) == (2.0, 1.0, 0)

    def test_eigen_locus_crosses_axis_at_two(self):
        upper, lower = vdp_eigen_locus(2.0, 1.0)
        assert upper == pytest.approx(1j)
        assert lower == pytest.approx(-1j)
        assert vdp_eigen_locus(1.0, 1.0)[0].real > 0
        assert vdp_eigen_locus(3.0, 1.0)[0].real < 0

    def test_no_cycle(self):
        # 1 + 1 * N with a purely imaginary N never vanishes
        loop = QuasiLinearLoop(G=lambda w: 1.0 + 0j, N=lambda A, w: 1j * A * w, name='no-cycle')
        with pytest.raises(ConvergenceError):
            harmonic_balance_solve(loop, 1.0, 1.0)

    def test_bad_guess(self):
        with pytest.raises(ValidationError):
            harmonic_balance_solve(vdp_loop(1.0), -1.0, 1.0)

    def test_linear_block(self):
        assert vdp_linear_block(1.0, 1.0) == pytest.approx(1j)


class TestStaticNonlinearities:
    @pytest.mark.parametrize('A', [0.5, 2.0, 5.0])
    def test_saturation_quadrature(self, A):
        sat = SaturationNonlinearity(1.0)
        numeric = describing_function(sat, A, num_points=4000, use_closed_form=False)
        assert numeric.real == pytest.approx(sat.describing_function(A).real, abs=1e-3)
        assert abs(numeric.imag) < 1e-9

    def test_saturation_below_bound_is_unity(self):
        assert describing_function(SaturationNonlinearity(2.0), 1.0) == 1.0

    def test_relay_quadrature(self):
        relay = RelayNonlinearity(1.0)
        numeric = describing_function(relay, 2.0, num_points=4000, use_closed_form=False)
        assert numeric.real == pytest.approx(2.0 / math.pi, abs=1e-3)

    def test_vector_amplitudes(self):
        values = describing_function(RelayNonlinearity(1.0), [1.0, 2.0])
        assert values.shape == (2,)
        assert values[0] == pytest.approx(4.0 / math.pi)

    def test_amplitude_must_be_positive(self):
        with pytest.raises(ValidationError):
            describing_function(RelayNonlinearity(), [1.0, 0.0])


class TestTracers:
    def test_spring(self):
        traj = spring_tracer(k=0.2, T=30.0, dt=0.01)
        assert traj.meta['system'] == 'spring'
        assert traj.states.shape == (3001, 2)
        assert abs(traj.final_state[0]) < 0.1

    def test_negative_damping(self):
        with pytest.raises(ValidationError):
            spring_tracer(k=-0.1)

    def test_short_run_has_no_cycle(self):
        with pytest.raises(ValidationError):
            measure_cycle(vdp_tracer(alpha=1.0, T=1.0))

    def test_cycle_from_long_tracer(self):
        cycle = measure_cycle(vdp_tracer(alpha=1.0, T=100.0))
        assert cycle['amplitude'] == pytest.approx(2.0, abs=0.05)


@pytest.mark.slow
def test_simulation_agrees_for_small_alpha():
    result = vdp_simulate_amplitude(0.1)
    assert result['amplitude'] == pytest.approx(2.0, rel=0.05)
    assert result['period'] == pytest.approx(2.0 * math.pi, rel=0.01)


@pytest.mark.slow
def test_prediction_degrades_with_alpha():
    small, large = amplitude_sweep([0.1, 1.0])
    assert large['amplitude_error'] > small['amplitude_error']
    assert large['period'] > small['period']
