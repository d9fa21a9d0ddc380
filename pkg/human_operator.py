#!/usr/bin/env python3
"""
liectl - Human Operator
Crossover models of the manual controller, tracking-loop simulation and the
quadratic tracking cost.
"""

import math
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Any, Optional, Sequence, Union

import numpy as np
from scipy import integrate as sp_integrate

from config import Config
from models import (BaseModel, IntegratorConfig, StateSpaceModel, TaskMode, Trajectory,
                    ValidationError, DivergenceError)
from ode_engine import DelaySpec, integrate_with_delay
from utils import log_action, parallel_map

logger = logging.getLogger('liectl.human_operator')


@dataclass
class CrossoverParams(BaseModel):
    """H(s) = K e^{-tau s} / s"""

    K: float = 1.0
    tau: float = 0.0

    def validate(self) -> None:
        errors = []
        if not (np.isfinite(self.K) and self.K > 0):
            errors.append("K must be positive")
        if not (np.isfinite(self.tau) and self.tau >= 0):
            errors.append("tau must be non-negative")
        if errors:
            raise ValidationError(f"CrossoverParams validation errors: {'; '.join(errors)}")


@dataclass
class ExpandedCrossoverParams(BaseModel):
    """K (T_L s + 1) e^{-(tau s + alpha/s)} / ((T_I s + 1)(T_N s + 1))"""

    K: float = 1.0
    tau: float = 0.0
    T_L: float = 0.0
    T_I: float = 0.0
    T_N: float = 0.0
    alpha_drop: float = 0.0

    def validate(self) -> None:
        values = [self.K, self.tau, self.T_L, self.T_I, self.T_N, self.alpha_drop]
        errors = []
        if not all(np.isfinite(v) for v in values):
            errors.append("all parameters must be finite")
        if self.T_I < 0 or self.T_N < 0:
            errors.append("lag constants must be non-negative")
        if self.tau < 0:
            errors.append("tau must be non-negative")
        if errors:
            raise ValidationError(f"ExpandedCrossoverParams validation errors: {'; '.join(errors)}")


@dataclass
class CostWeights(BaseModel):
    """Per-channel weights: q on displayed signals, r on control, g on control rate"""

    q: List[float] = field(default_factory=lambda: [1.0])
    r: List[float] = field(default_factory=list)
    g: List[float] = field(default_factory=list)

    def validate(self) -> None:
        for name in ('q', 'r', 'g'):
            values = [float(v) for v in getattr(self, name)]
            if any(not np.isfinite(v) or v < 0 for v in values):
                raise ValidationError(f"CostWeights validation errors: {name} must be non-negative")
            setattr(self, name, values)


def step_signal(t: float) -> float:
    return 1.0 if t >= 0 else 0.0


FORCINGS: Dict[str, Callable[[float], float]] = {
    'step': step_signal,
    'sine': math.sin,
    'zero': lambda t: 0.0,
}


@dataclass
class TrackingTask(BaseModel):
    """Tracking experiment; forcing is a named signal or a callable r(t)"""

    mode: TaskMode = TaskMode.COMPENSATORY
    forcing: Union[str, Callable[[float], float]] = 'step'
    plant: Union[str, StateSpaceModel] = 'unity'
    T: float = 20.0
    dt: float = 0.01

    def __post_init__(self):
        if isinstance(self.mode, str):
            try:
                self.mode = TaskMode(self.mode)
            except ValueError:
                raise ValidationError(f"Unknown task mode: {self.mode}")
        super().__post_init__()

    def validate(self) -> None:
        errors = []
        if not self.T > 0:
            errors.append("duration must be positive")
        if not self.dt > 0:
            errors.append("dt must be positive")
        if isinstance(self.forcing, str) and self.forcing not in FORCINGS:
            errors.append(f"unknown forcing: {self.forcing}")
        if isinstance(self.plant, str) and self.plant != 'unity':
            errors.append(f"unknown plant: {self.plant}")
        if isinstance(self.plant, StateSpaceModel) and (self.plant.m != 1 or self.plant.k != 1):
            errors.append("plant must be single-input single-output")
        if errors:
            raise ValidationError(f"TrackingTask validation errors: {'; '.join(errors)}")

    def target(self) -> Callable[[float], float]:
        if callable(self.forcing):
            return self.forcing
        return FORCINGS[self.forcing]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'mode': self.mode.value,
            'forcing': self.forcing if isinstance(self.forcing, str) else 'custom',
            'plant': self.plant if isinstance(self.plant, str) else self.plant.to_dict(),
            'T': self.T,
            'dt': self.dt,
        }


# =============================================================================
# Frequency domain
# =============================================================================

def _frequencies(omegas: Sequence[float]) -> np.ndarray:
    w = np.atleast_1d(np.asarray(omegas, dtype=float))
    if np.any(~np.isfinite(w)) or np.any(w <= 0):
        raise ValidationError("Frequencies must be positive; omega = 0 is the integrator pole")
    return w


def crossover_frequency_response(p: CrossoverParams, omegas: Sequence[float]) -> np.ndarray:
    """K e^{-i tau w} / (i w)"""
    w = _frequencies(omegas)
    s = 1j * w
    return p.K * np.exp(-p.tau * s) / s


def expanded_frequency_response(p: ExpandedCrossoverParams, omegas: Sequence[float]) -> np.ndarray:
    """Full expanded expression at s = i w.

    The factor e^{-alpha/s} equals e^{+i alpha/w}: a pure phase term, evaluated as written.
    """
    w = _frequencies(omegas)
    s = 1j * w
    numerator = p.K * (p.T_L * s + 1.0) * np.exp(-(p.tau * s + p.alpha_drop / s))
    return numerator / ((p.T_I * s + 1.0) * (p.T_N * s + 1.0))


def crossover_margin(p: CrossoverParams) -> Dict[str, float]:
    """|H| = 1 at w = K, where the phase is -pi/2 - tau K"""
    return {'omega_c': float(p.K), 'phase_margin': math.pi / 2 - p.tau * p.K}


def response_rows(omegas: Sequence[float], values: np.ndarray) -> List[List[float]]:
    """omega, re, im, mag, phase rows; phase unwrapped along omega"""
    values = np.asarray(values, dtype=complex)
    phase = np.unwrap(np.angle(values))
    return [[float(w), float(v.real), float(v.imag), float(abs(v)), float(ph)]
            for w, v, ph in zip(omegas, values, phase)]


# =============================================================================
# Tracking loop
# =============================================================================

def _check_divergence(times: np.ndarray, error: np.ndarray, target: np.ndarray) -> None:
    bound = Config.DIVERGENCE_BOUND * max(1.0, float(np.max(np.abs(target))))
    magnitude = np.abs(error)
    over = np.nonzero(magnitude > bound)[0]
    if over.size:
        t_blow = float(times[over[0]])
        raise DivergenceError(f"Tracking error exceeded {bound:g} at t={t_blow:.6g}", time=t_blow)

    window = max(1, int(0.2 * len(times)))
    early = float(magnitude[:window].max())
    late = float(magnitude[-window:].max())
    if late > early:
        t_blow = float(times[np.argmax(magnitude > early)])
        raise DivergenceError(f"Tracking error grows: late peak {late:.3g} exceeds early peak "
                              f"{early:.3g} (first exceeded at t={t_blow:.6g})", time=t_blow)


def simulate_tracking(task: TrackingTask, operator: CrossoverParams,
                      check_divergence: bool = True) -> Trajectory:
    """Closed loop u' = K e(t - tau), y = plant(u), e = r - y from rest.

    States are [u, plant states]; outputs are [e] in compensatory mode and [e, r, y]
    in pursuit mode; the input channel carries u.
    """
    r = task.target()
    plant = task.plant if isinstance(task.plant, StateSpaceModel) else None
    n = 1 + (plant.n if plant is not None else 0)

    if 0 < operator.tau < task.dt * (1 - 1e-9):
        raise ValidationError(f"Reaction delay {operator.tau} is shorter than dt {task.dt}")

    def reference(t: float) -> float:
        return float(r(t)) if t >= 0 else 0.0

    def output(x: np.ndarray) -> float:
        if plant is None:
            return float(x[0])
        return float(plant.C[0] @ x[1:] + plant.D[0, 0] * x[0])

    def rhs(t: float, x: np.ndarray, delayed: np.ndarray) -> np.ndarray:
        e_delayed = reference(t - operator.tau) - output(delayed)
        dx = np.empty(n)
        dx[0] = operator.K * e_delayed
        if plant is not None:
            dx[1:] = plant.A @ x[1:] + plant.B[:, 0] * x[0]
        return dx

    delay = DelaySpec(tau=operator.tau, history=lambda s: np.zeros(n))
    traj = integrate_with_delay(rhs, delay, np.zeros(n), 0.0, task.T, IntegratorConfig(dt=task.dt))

    times = traj.times
    targets = np.array([reference(t) for t in times])
    outputs = np.array([output(x) for x in traj.states])
    error = targets - outputs
    if check_divergence:
        try:
            _check_divergence(times, error, targets)
        except DivergenceError as e:
            log_action("Tracking loop diverged", "human_operator", level='WARNING',
                       additional_data={'K': operator.K, 'tau': operator.tau, 'time': e.time})
            raise

    if task.mode == TaskMode.PURSUIT:
        channels = np.column_stack([error, targets, outputs])
    else:
        channels = error
    meta = {'mode': task.mode.value, 'K': operator.K, 'tau': operator.tau}
    return Trajectory(t0=0.0, dt=traj.dt, states=traj.states, outputs=channels,
                      inputs=traj.states[:, 0], meta=meta)


def margin_sweep(K_values: Sequence[float] = (0.5, 1.0, 2.0, 4.0),
                 kappa_values: Optional[Sequence[float]] = None,
                 band: float = 0.05, horizon: float = 100.0) -> List[Dict[str, Any]]:
    """Bounded/divergent step responses over a (K, tau K) grid against the margin sign.

    Points within `band` (relative) of tau K = pi/2 are skipped.
    """
    if kappa_values is None:
        kappa_values = np.linspace(0.0, math.pi, 21)
    boundary = math.pi / 2
    grid = [(float(K), float(kappa)) for K in K_values for kappa in kappa_values
            if abs(kappa - boundary) > band * boundary]

    def run(point):
        K, kappa = point
        tau = kappa / K
        dt = tau / 20.0 if tau > 0 else 0.01 / K
        T = horizon * max(tau, 1.0 / K)
        params = CrossoverParams(K=K, tau=tau)
        margin = crossover_margin(params)['phase_margin']
        try:
            simulate_tracking(TrackingTask(forcing='step', T=T, dt=dt), params)
            bounded = True
        except DivergenceError:
            bounded = False
        return {'K': K, 'kappa': kappa, 'tau': tau, 'phase_margin': margin,
                'predicted_bounded': margin > 0, 'bounded': bounded,
                'agrees': (margin > 0) == bounded}

    results = parallel_map(run, grid)
    log_action("Margin sweep finished", "human_operator",
               additional_data={'points': len(results),
                                'disagreements': sum(not r['agrees'] for r in results)})
    return results


# =============================================================================
# Cost functional
# =============================================================================

def _time_average(values: np.ndarray, times: np.ndarray) -> float:
    if values.shape[0] < 2:
        return float(values.mean()) if values.size else 0.0
    span = times[-1] - times[0]
    return float(sp_integrate.trapezoid(values, times) / span)


def _weighted(channels: np.ndarray, weights: Sequence[float], name: str) -> np.ndarray:
    if len(weights) > channels.shape[1]:
        raise ValidationError(f"{len(weights)} {name} weights for {channels.shape[1]} channels")
    total = np.zeros(channels.shape[0])
    for i, w in enumerate(weights):
        total += w * channels[:, i] ** 2
    return total


def cost_functional(traj: Union[Trajectory, Sequence[Trajectory]], w: CostWeights) -> float:
    """Time average of sum q y^2 + r u^2 + g u'^2; several runs give the ensemble mean.

    Displayed signals y are the output channels (the states when no outputs are recorded);
    u are the input channels.
    """
    if isinstance(traj, Trajectory):
        runs = [traj]
    else:
        runs = list(traj)
    if not runs:
        raise ValidationError("Cost functional needs at least one trajectory")

    costs = []
    for run in runs:
        if run.n_samples == 0:
            raise ValidationError("Trajectory is empty")
        shown = run.outputs if run.outputs.shape[1] else run.states
        penalty = _weighted(shown, w.q, 'q')
        if w.r or w.g:
            u = run.inputs
            penalty = penalty + _weighted(u, w.r, 'r')
            if w.g and run.n_samples > 1:
                rate = np.gradient(u, run.dt, axis=0, edge_order=2 if run.n_samples > 2 else 1)
                penalty = penalty + _weighted(rate, w.g, 'g')
        costs.append(_time_average(penalty, run.times))
    return float(np.mean(costs))
