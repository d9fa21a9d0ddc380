import math

import numpy as np
import pytest

from models import StateSpaceModel, TaskMode, Trajectory, ValidationError, DivergenceError
from human_operator import (CrossoverParams, ExpandedCrossoverParams, CostWeights, TrackingTask,
                            crossover_frequency_response, expanded_frequency_response,
                            crossover_margin, response_rows, simulate_tracking, margin_sweep,
                            cost_functional)


class TestFrequencyResponse:
    def test_unit_gain_at_crossover(self):
        values = crossover_frequency_response(CrossoverParams(K=2.0, tau=0.0), [2.0])
        assert values[0] == pytest.approx(-1j)

    def test_delay_adds_phase_lag(self):
        p = CrossoverParams(K=1.0, tau=0.2)
        value = crossover_frequency_response(p, [1.0])[0]
        assert abs(value) == pytest.approx(1.0)
        assert np.angle(value) == pytest.approx(-math.pi / 2 - 0.2)

    @pytest.mark.parametrize('tau', [0.05, 0.3, 1.0])
    def test_phase_strictly_decreasing(self, tau):
        omegas = np.geomspace(0.01, 100.0, 400)
        phase = np.unwrap(np.angle(crossover_frequency_response(CrossoverParams(K=1.5, tau=tau), omegas)))
        assert np.all(np.diff(phase) < 0)

    def test_non_positive_frequency(self):
        with pytest.raises(ValidationError):
            crossover_frequency_response(CrossoverParams(), [0.0, 1.0])

    def test_expanded_drop_term_is_pure_phase(self):
        p = ExpandedCrossoverParams(K=3.0, alpha_drop=0.5)
        value = expanded_frequency_response(p, [2.0])[0]
        assert abs(value) == pytest.approx(3.0)
        assert np.angle(value) == pytest.approx(0.25)

    def test_expanded_lead_lag(self):
        p = ExpandedCrossoverParams(K=1.0, T_L=1.0, T_I=1.0)
        assert expanded_frequency_response(p, [0.7])[0] == pytest.approx(1.0)

    def test_margin(self):
        margin = crossover_margin(CrossoverParams(K=1.0, tau=0.2))
        assert margin == {'omega_c': 1.0, 'phase_margin': pytest.approx(math.pi / 2 - 0.2)}

    def test_rows_unwrap_phase(self):
        p = CrossoverParams(K=1.0, tau=1.0)
        omegas = [1.0, 3.0, 5.0]
        rows = response_rows(omegas, crossover_frequency_response(p, omegas))
        assert [row[4] for row in rows] == pytest.approx([-math.pi / 2 - w for w in omegas])


class TestTracking:
    def test_step_is_tracked(self):
        traj = simulate_tracking(TrackingTask(T=20.0, dt=0.01), CrossoverParams(K=1.0, tau=0.2))
        assert traj.outputs.shape[1] == 1
        assert traj.outputs[0, 0] == 1.0
        assert abs(traj.outputs[-1, 0]) < 1e-3
        assert traj.inputs[-1, 0] == pytest.approx(1.0, abs=1e-3)

    def test_pursuit_channels(self):
        task = TrackingTask(mode='pursuit', forcing='sine', T=5.0, dt=0.01)
        traj = simulate_tracking(task, CrossoverParams(K=2.0, tau=0.1))
        e, r, y = traj.outputs.T
        assert task.mode == TaskMode.PURSUIT
        assert np.allclose(e, r - y)
        assert np.allclose(r, np.sin(traj.times))

    def test_first_order_plant(self):
        plant = StateSpaceModel(A=[[-1.0]], B=[[1.0]], C=[[1.0]])
        traj = simulate_tracking(TrackingTask(plant=plant, T=40.0, dt=0.01), CrossoverParams(K=1.0, tau=0.1))
        assert traj.states.shape[1] == 2
        assert abs(traj.outputs[-1, 0]) < 1e-2

    def test_large_delay_diverges(self):
        with pytest.raises(DivergenceError) as info:
            simulate_tracking(TrackingTask(T=100.0, dt=0.01), CrossoverParams(K=1.0, tau=2.0))
        assert info.value.time is not None

    def test_divergence_check_can_be_skipped(self):
        traj = simulate_tracking(TrackingTask(T=100.0, dt=0.01), CrossoverParams(K=1.0, tau=2.0),
                                 check_divergence=False)
        assert traj.n_samples == 10001

    def test_delay_shorter_than_step(self):
        with pytest.raises(ValidationError):
            simulate_tracking(TrackingTask(T=1.0, dt=0.01), CrossoverParams(K=1.0, tau=0.005))

    @pytest.mark.parametrize('kwargs', [{'forcing': 'ramp'}, {'mode': 'preview'}, {'T': 0.0},
                                        {'plant': 'double'}])
    def test_bad_task(self, kwargs):
        with pytest.raises(ValidationError):
            TrackingTask(**kwargs)

    def test_task_document(self):
        assert TrackingTask().to_dict() == {'mode': 'compensatory', 'forcing': 'step', 'plant': 'unity',
                                            'T': 20.0, 'dt': 0.01}


class TestCost:
    def test_weighted_average(self):
        times = np.linspace(0.0, 1.0, 101)
        traj = Trajectory(dt=0.01, states=np.zeros((101, 1)), outputs=np.ones(101), inputs=times)
        J = cost_functional(traj, CostWeights(q=[1.0], r=[3.0], g=[2.0]))
        # 1 + 3 * mean(t^2) + 2 * mean(1)
        assert J == pytest.approx(4.0, abs=1e-3)

    def test_ensemble_mean(self):
        runs = [Trajectory(dt=0.1, states=np.zeros((11, 1)), outputs=np.full(11, v)) for v in (1.0, 3.0)]
        assert cost_functional(runs, CostWeights()) == pytest.approx(5.0)

    def test_states_are_used_without_outputs(self):
        traj = Trajectory(dt=0.1, states=np.full((11, 1), 2.0))
        assert cost_functional(traj, CostWeights()) == pytest.approx(4.0)

    def test_time_reversal_leaves_cost_unchanged(self, rng):
        n = 201
        outputs, inputs = rng.normal(size=(n, 2)), rng.normal(size=(n, 1))
        forward = Trajectory(dt=0.05, states=np.zeros((n, 1)), outputs=outputs, inputs=inputs)
        backward = Trajectory(dt=0.05, states=np.zeros((n, 1)), outputs=outputs[::-1], inputs=inputs[::-1])
        w = CostWeights(q=[1.0, 0.5], r=[2.0], g=[0.1])
        assert cost_functional(backward, w) == pytest.approx(cost_functional(forward, w), rel=1e-12)

    def test_too_many_weights(self):
        traj = Trajectory(dt=0.1, states=np.zeros((11, 1)), outputs=np.zeros(11))
        with pytest.raises(ValidationError):
            cost_functional(traj, CostWeights(q=[1.0, 1.0]))

    def test_negative_weight(self):
        with pytest.raises(ValidationError):
            CostWeights(q=[-1.0])


@pytest.mark.slow
def test_margin_sign_predicts_boundedness():
    results = margin_sweep(K_values=(0.5, 2.0), kappa_values=np.linspace(0.0, math.pi, 11))
    assert len(results) == 20
    assert all(abs(r['kappa'] - math.pi / 2) > 0.05 * math.pi / 2 for r in results)
    agreement = sum(r['agrees'] for r in results) / len(results)
    assert agreement >= 0.95
