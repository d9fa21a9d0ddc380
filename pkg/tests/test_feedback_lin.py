import math

import numpy as np
import pytest

from models import ValidationError, DepthError, SingularityError, RelativeDegreeError
from vector_calculus import VectorField, coordinate, linear_field, zero_field
from feedback_lin import (AffineSISO, BUILTIN_SYSTEMS, cubic_system, sine_system, linear_siso,
                          relative_degree, butterworth_beta, synthesize_controller,
                          decoupling_identity_error, closed_loop_simulate, reference_response,
                          verify_linearity)


def scaled_input_system() -> AffineSISO:
    """x1' = x2, x2' = x1 u; the input drops out on x1 = 0"""
    g = VectorField(2, lambda x: np.array([0.0, x[0]]), name='x1 e2')
    return AffineSISO(linear_field([[0.0, 1.0], [0.0, 0.0]]), g, coordinate(0, 2), 'scaled')


class TestRelativeDegree:
    @pytest.mark.parametrize('name', sorted(BUILTIN_SYSTEMS))
    def test_builtin_systems_have_degree_two(self, name):
        assert relative_degree(BUILTIN_SYSTEMS[name](), [0.3, -0.2]) == 2

    def test_velocity_output(self):
        sys = linear_siso([[0.0, 1.0], [0.0, 0.0]], [0.0, 1.0], [0.0, 1.0])
        assert relative_degree(sys, [0.0, 0.0]) == 1

    def test_vanishes_only_at_the_point(self):
        with pytest.raises(RelativeDegreeError):
            relative_degree(scaled_input_system(), [0.0, 0.0])

    def test_never_reaches_the_output(self):
        sys = AffineSISO(zero_field(2), zero_field(2), coordinate(0, 2), 'decoupled')
        with pytest.raises(RelativeDegreeError):
            relative_degree(sys, [1.0, 1.0])

    def test_depth_cap(self):
        with pytest.raises(DepthError):
            relative_degree(cubic_system(), [0.0, 0.0], r_max=5)


class TestButterworth:
    def test_second_order(self):
        assert butterworth_beta(2) == pytest.approx([math.sqrt(2.0), 1.0])

    def test_orders_and_cutoff(self):
        assert butterworth_beta(1) == pytest.approx([1.0])
        assert butterworth_beta(3) == pytest.approx([2.0, 2.0, 1.0])
        assert butterworth_beta(2, cutoff=2.0) == pytest.approx([2.0 * math.sqrt(2.0), 4.0])

    @pytest.mark.parametrize('r, cutoff', [(0, 1.0), (5, 1.0), (2, 0.0)])
    def test_bad_arguments(self, r, cutoff):
        with pytest.raises(ValidationError):
            butterworth_beta(r, cutoff)


class TestController:
    def test_beta_length_must_match(self):
        with pytest.raises(ValidationError):
            synthesize_controller(cubic_system(), [1.0], [1.0, 0.0])

    def test_decoupling_identity(self, rng):
        ctrl = synthesize_controller(sine_system(), [2.0, 1.0], [0.0, 0.0])
        assert decoupling_identity_error(ctrl, rng.normal(size=(20, 2))) < 1e-9

    def test_cubic_control_law(self):
        ctrl = synthesize_controller(cubic_system(), [2.0, 1.0], [1.0, 0.0])
        x = np.array([0.5, -0.3])
        # u = x1^3 - 2 x2 - x1 + v
        assert ctrl.control(x, 0.4) == pytest.approx(0.125 + 0.6 - 0.5 + 0.4, abs=1e-6)
        assert ctrl.output_derivatives(x) == pytest.approx([0.5, -0.3])

    def test_singular_state(self):
        ctrl = synthesize_controller(scaled_input_system(), [2.0, 1.0], [1.0, 0.0])
        with pytest.raises(SingularityError) as info:
            ctrl.evaluate([0.0, 0.5])
        assert info.value.state.tolist() == [0.0, 0.5]


class TestClosedLoop:
    def test_cubic_benchmark_is_linear(self):
        sys = cubic_system()
        ctrl = synthesize_controller(sys, [2.0, 1.0], [1.0, 0.0])
        traj = closed_loop_simulate(sys, ctrl, 0.0, [1.0, 0.0], 10.0, 1e-3)
        result = verify_linearity(traj, [2.0, 1.0], 0.0)
        assert result['max_deviation'] < 1e-3
        assert traj.meta['r'] == 2

    def test_reference_model_closed_form(self):
        y = reference_response([2.0, 1.0], 0.0, [1.0, 0.0], 2.0, 0.01)
        assert y[-1] == pytest.approx(3.0 * math.exp(-2.0), abs=1e-8)

    def test_setpoint_tracking(self):
        sys = sine_system()
        ctrl = synthesize_controller(sys, [2.0, 1.0], [0.0, 0.0])
        traj = closed_loop_simulate(sys, ctrl, 0.5, [0.0, 0.0], 20.0, 0.01)
        assert traj.outputs[-1, 0] == pytest.approx(0.5, abs=1e-5)
        assert verify_linearity(traj, [2.0, 1.0], 0.5)['max_deviation'] < 1e-6

    def test_output_depends_only_on_initial_output_derivatives(self):
        # x3 is internal: it enters the drift but the controller cancels it
        f = VectorField(3, lambda x: np.array([x[1], -x[0] ** 3 + math.sin(x[2]), x[0] - x[2]]), name='hidden')
        sys = AffineSISO(f, VectorField(3, lambda x: np.array([0.0, 1.0, 0.0]), name='e2'),
                         coordinate(0, 3), 'hidden-state')
        beta = [2.0, 1.0]
        ctrl = synthesize_controller(sys, beta, [0.8, -0.3, 0.0])
        first = closed_loop_simulate(sys, ctrl, 0.2, [0.8, -0.3, 0.0], 5.0, 0.01)
        second = closed_loop_simulate(sys, ctrl, 0.2, [0.8, -0.3, 2.5], 5.0, 0.01)
        assert not np.allclose(first.states[:, 2], second.states[:, 2])
        assert np.allclose(first.outputs[:, 0], second.outputs[:, 0], atol=1e-6)
        expected = reference_response(beta, 0.2, [0.8, -0.3], 5.0, 0.01)
        assert np.allclose(second.outputs[:, 0], expected, atol=1e-6)

    def test_singular_trajectory(self):
        sys = scaled_input_system()
        ctrl = synthesize_controller(sys, [2.0, 1.0], [1.0, 0.0])
        with pytest.raises(SingularityError):
            closed_loop_simulate(sys, ctrl, 0.0, [0.0, 1.0], 1.0, 0.01)

    def test_reference_needs_initial_conditions(self):
        with pytest.raises(ValidationError):
            reference_response([2.0, 1.0], 0.0, [1.0], 1.0, 0.01)
