import math

import numpy as np
import pytest

from models import IntegratorConfig, ValidationError, DivergenceError, SlidingError
from vector_calculus import constant_field, coordinate, linear_field
from ode_engine import (time_grid, integrate, DelaySpec, integrate_with_delay, SwitchingSurface,
                        sliding_alpha, sliding_field, integrate_variable_structure, ImpulseSchedule,
                        integrate_with_impulses, green_first_order, green_second_order,
                        kick_response, convolution_response)
from catalog import relay_surface


class TestTimeGrid:
    def test_lands_on_T(self):
        steps, dt = time_grid(0.0, 1.0, 0.3)
        assert steps == 4
        assert dt == 0.25

    def test_exact_division(self):
        assert time_grid(0.0, 1.0, 0.1) == (10, 0.1)

    def test_rejects_empty_interval(self):
        with pytest.raises(ValidationError):
            time_grid(1.0, 1.0, 0.1)


class TestIntegrate:
    def test_exponential_decay(self):
        traj = integrate(linear_field([[-1.0]]), [1.0], 0.0, 2.0, IntegratorConfig(dt=0.01))
        assert traj.final_state[0] == pytest.approx(math.exp(-2.0), abs=1e-9)
        assert traj.times[-1] == pytest.approx(2.0)

    def test_time_dependent_rhs(self):
        traj = integrate(lambda t, x: np.array([math.cos(t)]), [0.0], 0.0, 1.0, IntegratorConfig(dt=0.01))
        assert traj.final_state[0] == pytest.approx(math.sin(1.0), abs=1e-10)

    @pytest.mark.parametrize('scheme, order', [('rk4', 4.0), ('euler', 1.0)])
    def test_convergence_order(self, scheme, order):
        steps = [0.1, 0.05, 0.025]
        errors = []
        for dt in steps:
            traj = integrate(linear_field([[-1.0]]), [1.0], 0.0, 1.0, IntegratorConfig(dt=dt, scheme=scheme))
            errors.append(abs(traj.final_state[0] - math.exp(-1.0)))
        slope, _ = np.polyfit(np.log(steps), np.log(errors), 1)
        assert slope == pytest.approx(order, abs=0.2)

    def test_blow_up_raises_divergence(self):
        with pytest.raises(DivergenceError) as info:
            integrate(lambda t, x: x * x, [1.0], 0.0, 5.0, IntegratorConfig(dt=0.1))
        assert info.value.time is not None


class TestDelay:
    def test_delayed_state_piecewise_solution(self):
        # x' = -x(t - 1) with history 1: x(2) = -1/2
        delay = DelaySpec(tau=1.0, history=lambda s: [1.0])
        traj = integrate_with_delay(lambda t, x, z: -z, delay, [1.0], 0.0, 2.0, IntegratorConfig(dt=0.01))
        assert traj.final_state[0] == pytest.approx(-0.5, abs=1e-9)
        assert traj.states[100, 0] == pytest.approx(0.0, abs=1e-9)

    def test_delayed_signal(self):
        tau = 0.3
        delay = DelaySpec(tau=tau, history=math.sin, signal=math.sin)
        traj = integrate_with_delay(lambda t, x, z: z, delay, [0.0], 0.0, 2.0, IntegratorConfig(dt=0.01))
        expected = math.cos(-tau) - math.cos(2.0 - tau)
        assert traj.final_state[0] == pytest.approx(expected, abs=1e-8)

    def test_zero_delay_matches_plain_integration(self):
        delay = DelaySpec(tau=0.0)
        delayed = integrate_with_delay(lambda t, x, z: -z, delay, [1.0], 0.0, 1.0, IntegratorConfig(dt=0.01))
        plain = integrate(linear_field([[-1.0]]), [1.0], 0.0, 1.0, IntegratorConfig(dt=0.01))
        assert np.allclose(delayed.states, plain.states)

    def test_history_required(self):
        with pytest.raises(ValidationError):
            DelaySpec(tau=0.5)

    def test_delay_shorter_than_step(self):
        delay = DelaySpec(tau=0.005, history=lambda s: [0.0])
        with pytest.raises(ValidationError, match="shorter than the step"):
            integrate_with_delay(lambda t, x, z: -z, delay, [1.0], 0.0, 1.0, IntegratorConfig(dt=0.01))

    def test_small_delay_approaches_undelayed_solution(self):
        cfg = IntegratorConfig(dt=0.005)
        plain = integrate(linear_field([[-1.0]]), [1.0], 0.0, 3.0, cfg)
        gaps = []
        for tau in (0.04, 0.02):
            delay = DelaySpec(tau=tau, history=lambda s: [1.0])
            traj = integrate_with_delay(lambda t, x, z: -z, delay, [1.0], 0.0, 3.0, cfg)
            gaps.append(float(np.max(np.abs(traj.states - plain.states))))
        assert gaps[0] < 0.05
        assert gaps[1] < 0.75 * gaps[0]


class TestSliding:
    def test_relay_alpha_and_field(self):
        surface = relay_surface()
        assert sliding_alpha(surface, [0.0]) == pytest.approx(0.5)
        assert np.allclose(sliding_field(surface, [0.0]), 0.0)

    def test_equally_transversal_fields(self):
        surface = SwitchingSurface(coordinate(0, 1), constant_field([1.0]), constant_field([1.0]))
        with pytest.raises(SlidingError):
            sliding_alpha(surface, [0.0])

    def test_relay_reaches_and_holds_surface(self):
        dt = 1e-3
        traj = integrate_variable_structure(relay_surface(), [1.0], 0.0, 2.0, IntegratorConfig(dt=dt))
        t_enter, label = traj.events[0]
        assert label == 'enter-sliding'
        assert t_enter == pytest.approx(1.0, abs=2 * dt)
        assert all(label != 'exit-sliding' for _, label in traj.events)
        after = traj.times > 1.0 + 2 * dt
        assert np.all(np.abs(traj.outputs[after, 0]) < 1e-6)
        assert np.all(traj.outputs[after, 1] == 1.0)

    def test_transversal_surface_is_crossed(self):
        # both fields point down: trajectories cross M
        surface = SwitchingSurface(coordinate(0, 1), constant_field([-1.0]), constant_field([-1.0]))
        traj = integrate_variable_structure(surface, [0.5], 0.0, 1.0, IntegratorConfig(dt=1e-3))
        assert [label for _, label in traj.events] == ['cross']
        assert traj.final_state[0] == pytest.approx(-0.5, abs=1e-9)

    def test_planar_sliding_along_surface(self):
        # s = x2, f- = (1, 1) below, f+ = (1, -1) above: slide along x1 at unit speed
        surface = SwitchingSurface(coordinate(1, 2), constant_field([1.0, -1.0]), constant_field([1.0, 1.0]))
        assert sliding_alpha(surface, [0.3, 0.0]) == pytest.approx(0.5)
        assert np.allclose(sliding_field(surface, [0.3, 0.0]), [1.0, 0.0])

        dt = 0.01
        traj = integrate_variable_structure(surface, [0.0, -0.505], 0.0, 2.0, IntegratorConfig(dt=dt))
        t_enter, label = traj.events[0]
        assert label == 'enter-sliding'
        assert t_enter == pytest.approx(0.505, abs=dt)
        after = traj.times > 0.505 + dt
        assert np.all(np.abs(traj.states[after, 1]) <= 1e-6)
        assert np.all(traj.outputs[after, 1] == 1.0)
        assert np.allclose(traj.states[:, 0], traj.times, atol=1e-9)


class TestImpulses:
    def test_kicks_match_green_superposition(self):
        schedule = ImpulseSchedule(times=[0.5, 1.25], strengths=[1.0, -0.5])
        traj = integrate_with_impulses(linear_field([[-1.0]]), schedule, [0.0], 0.0, 3.0,
                                       IntegratorConfig(dt=0.01))
        assert traj.final_state[0] == pytest.approx(float(kick_response(3.0, schedule, 1.0)), abs=1e-8)
        assert [label for _, label in traj.events] == ['kick', 'kick']

    def test_coincident_kicks_collapse(self):
        schedule = ImpulseSchedule(times=[1.0, 1.0, 2.0], strengths=[1.0, 2.0, 1.0])
        assert schedule.times == [1.0, 2.0]
        assert schedule.strengths == [3.0, 1.0]

    def test_unsorted_times(self):
        with pytest.raises(ValidationError, match="sorted"):
            ImpulseSchedule(times=[2.0, 1.0], strengths=[1.0, 1.0])

    def test_kicks_outside_window(self):
        schedule = ImpulseSchedule(times=[5.0], strengths=[1.0])
        with pytest.raises(ValidationError):
            integrate_with_impulses(constant_field([0.0]), schedule, [0.0], 0.0, 1.0)


class TestGreenFunctions:
    def test_first_order(self):
        assert float(green_first_order(0.5, 1.0, 2.0)) == 0.0
        assert float(green_first_order(2.0, 1.0, 2.0)) == pytest.approx(math.exp(-2.0))

    def test_second_order(self):
        assert float(green_second_order(2.0, 1.0, 1.0)) == pytest.approx(math.exp(-1.0))
        assert float(green_second_order(0.0, 1.0, 1.0)) == 0.0

    def test_convolution_constant_force(self):
        assert convolution_response(lambda s: 1.0, 1.0, 2.0) == pytest.approx(1.0 - math.exp(-2.0))
        assert convolution_response(lambda s: 1.0, 1.0, -1.0) == 0.0
