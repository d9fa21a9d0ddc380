#!/usr/bin/env python3
"""
liectl - Adaptive Lie-derivative Tracking
Certainty-equivalence tracking of relative-degree-one plants in quasilinear form,
with a Lyapunov-gradient update of the unknown coefficients.

Plant:    x' = sum_i gamma_i f_i(x) + sum_j d_j g_j(x) u,  y = h(x)
Control:  u = (-L^f h + y_R' + alpha (y_R - y)) / L^g h   (hats: estimated sums)
Update:   estimates' = +update_gain * eps * W,  eps = y - y_R,
          W = [L_{f_i} h ..., L_{g_j} h * u]
With this sign the candidate eps^2/2 + |true - estimates|^2 / (2 update_gain) has
derivative -alpha eps^2 along the continuous closed loop.
"""

import math
import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Any, Optional, Sequence, Tuple, Union

import numpy as np

from config import Config
from models import (BaseModel, Trajectory, ValidationError, DimensionError, SingularityError,
                    DivergenceError)
from vector_calculus import ScalarField, VectorField, as_state, lie_derivative, coordinate, linear_field, constant_field
from ode_engine import time_grid, rk4_step
from utils import log_action, parallel_map

logger = logging.getLogger('liectl.adaptive_lie')

Coefficient = Union[float, Callable[[float], float]]


def _value(c: Coefficient, t: float) -> float:
    return float(c(t)) if callable(c) else float(c)


@dataclass(frozen=True)
class QuasiLinearSystem:
    """Basis fields with true (possibly time-varying) coefficients"""

    f_list: Tuple[VectorField, ...]
    g_list: Tuple[VectorField, ...]
    h: ScalarField
    true_gamma: Tuple[Coefficient, ...]
    true_d: Tuple[Coefficient, ...]
    name: str = 'quasilinear'

    def __post_init__(self):
        object.__setattr__(self, 'f_list', tuple(self.f_list))
        object.__setattr__(self, 'g_list', tuple(self.g_list))
        object.__setattr__(self, 'true_gamma', tuple(self.true_gamma))
        object.__setattr__(self, 'true_d', tuple(self.true_d))
        if not self.g_list:
            raise ValidationError("At least one input field is required")
        dims = {fld.dim for fld in self.f_list + self.g_list} | {self.h.dim}
        if len(dims) != 1:
            raise DimensionError(f"{self.name}: basis fields and output disagree on dimension ({sorted(dims)})")
        if len(self.true_gamma) != len(self.f_list) or len(self.true_d) != len(self.g_list):
            raise ValidationError(f"{self.name}: one true coefficient is needed per basis field")

    @property
    def dim(self) -> int:
        return self.h.dim

    @property
    def n_params(self) -> int:
        return len(self.f_list) + len(self.g_list)

    def lie_terms(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """(L_{f_i} h(x))_i and (L_{g_j} h(x))_j"""
        Lf = np.array([lie_derivative(self.h, f, x) for f in self.f_list])
        Lg = np.array([lie_derivative(self.h, g, x) for g in self.g_list])
        return Lf, Lg

    def gamma_at(self, t: float) -> np.ndarray:
        return np.array([_value(c, t) for c in self.true_gamma])

    def d_at(self, t: float) -> np.ndarray:
        return np.array([_value(c, t) for c in self.true_d])

    def rhs(self, t: float, x: np.ndarray, u: float) -> np.ndarray:
        dx = np.zeros(self.dim)
        for c, f in zip(self.gamma_at(t), self.f_list):
            dx += c * f(x)
        for c, g in zip(self.d_at(t), self.g_list):
            dx += c * u * g(x)
        return dx


@dataclass
class AdaptiveEstimates(BaseModel):
    """Current gamma_hat and d_hat with the update gain and feedback gain alpha"""

    gamma_hat: List[float] = field(default_factory=list)
    d_hat: List[float] = field(default_factory=list)
    update_gain: float = 1.0
    alpha: float = 1.0

    def validate(self) -> None:
        self.gamma_hat = [float(v) for v in self.gamma_hat]
        self.d_hat = [float(v) for v in self.d_hat]
        errors = []
        if not (np.isfinite(self.update_gain) and self.update_gain >= 0):
            errors.append("update_gain must be non-negative")
        if not (np.isfinite(self.alpha) and self.alpha >= 0):
            errors.append("alpha must be non-negative")
        if not all(np.isfinite(self.gamma_hat + self.d_hat)):
            errors.append("estimates must be finite")
        if errors:
            raise ValidationError(f"AdaptiveEstimates validation errors: {'; '.join(errors)}")

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.gamma_hat + self.d_hat, dtype=float)

    def check(self, sys: QuasiLinearSystem) -> None:
        if len(self.gamma_hat) != len(sys.f_list) or len(self.d_hat) != len(sys.g_list):
            raise DimensionError(f"Estimates have {len(self.gamma_hat)}+{len(self.d_hat)} entries, "
                                 f"system has {len(sys.f_list)}+{len(sys.g_list)} basis fields")


@dataclass(frozen=True)
class ReferenceSignal:
    """y_R(t) with its derivative"""

    y_R: Callable[[float], float]
    y_R_dot: Callable[[float], float]

    def consistency_error(self, times: Sequence[float], step: float = 1e-5) -> float:
        """Largest gap between y_R_dot and a central difference of y_R on the samples"""
        worst = 0.0
        for t in times:
            numeric = (self.y_R(t + step) - self.y_R(t - step)) / (2.0 * step)
            worst = max(worst, abs(numeric - self.y_R_dot(t)))
        return worst


def constant_reference(c: float) -> ReferenceSignal:
    return ReferenceSignal(lambda t: float(c), lambda t: 0.0)


def sine_reference(amplitude: float = 1.0, omega: float = 1.0) -> ReferenceSignal:
    return ReferenceSignal(lambda t: amplitude * math.sin(omega * t),
                           lambda t: amplitude * omega * math.cos(omega * t))


# =============================================================================
# Control laws
# =============================================================================

def tracking_control(sys: QuasiLinearSystem, x, ref: ReferenceSignal, t: float, alpha: float) -> float:
    """Exact-parameter law u = (-L_f h + y_R' + alpha (y_R - y)) / L_g h"""
    x = as_state(x, sys.dim)
    Lf, Lg = sys.lie_terms(x)
    drift = float(sys.gamma_at(t) @ Lf)
    gain = float(sys.d_at(t) @ Lg)
    if not abs(gain) > Config.DECOUPLING_THRESHOLD:
        raise SingularityError(f"L_g h = {gain:.3g} is singular at x={x.tolist()}", state=x)
    return (-drift + ref.y_R_dot(t) + alpha * (ref.y_R(t) - sys.h(x))) / gain


def estimate_lie_derivatives(est: AdaptiveEstimates, sys: QuasiLinearSystem, x) -> Tuple[float, float]:
    """(sum gamma_hat_i L_{f_i} h, sum d_hat_j L_{g_j} h)"""
    est.check(sys)
    Lf, Lg = sys.lie_terms(as_state(x, sys.dim))
    return float(np.dot(est.gamma_hat, Lf)), float(np.dot(est.d_hat, Lg))


def _clamped_control(est: AdaptiveEstimates, sys: QuasiLinearSystem, x: np.ndarray,
                     ref: ReferenceSignal, t: float) -> Tuple[float, bool]:
    Lf_hat, Lg_hat = estimate_lie_derivatives(est, sys, x)
    clamped = abs(Lg_hat) < Config.DELTA_MIN
    if clamped:
        original = Lg_hat
        Lg_hat = math.copysign(Config.DELTA_MIN, Lg_hat) if Lg_hat != 0 else Config.DELTA_MIN
        log_action("Estimated L_g h clamped", "adaptive_lie", level='WARNING',
                   additional_data={'t': t, 'estimate': original, 'clamped_to': Lg_hat})
    u = (-Lf_hat + ref.y_R_dot(t) + est.alpha * (ref.y_R(t) - sys.h(x))) / Lg_hat
    return u, clamped


def adaptive_control(est: AdaptiveEstimates, sys: QuasiLinearSystem, x, ref: ReferenceSignal,
                     t: float) -> float:
    """Certainty-equivalence law with the denominator held away from zero by DELTA_MIN"""
    u, _ = _clamped_control(est, sys, as_state(x, sys.dim), ref, t)
    return u


def build_W(est: AdaptiveEstimates, sys: QuasiLinearSystem, x, ref: ReferenceSignal, t: float,
            u: Optional[float] = None) -> np.ndarray:
    """Regressor [L_{f_i} h ..., L_{g_j} h * u] with u the (clamped) adaptive control"""
    x = as_state(x, sys.dim)
    if u is None:
        u = adaptive_control(est, sys, x, ref, t)
    Lf, Lg = sys.lie_terms(x)
    return np.concatenate([Lf, Lg * u])


def parameter_update_step(est: AdaptiveEstimates, epsilon: float, W, dt: float) -> AdaptiveEstimates:
    """One Euler step estimates += dt * update_gain * eps * W"""
    if not dt > 0:
        raise ValidationError("dt must be positive")
    W = np.asarray(W, dtype=float).reshape(-1)
    n = len(est.gamma_hat)
    if W.shape[0] != n + len(est.d_hat):
        raise DimensionError(f"W has {W.shape[0]} entries, estimates have {n + len(est.d_hat)}")
    theta = est.vector + dt * est.update_gain * float(epsilon) * W
    return replace(est, gamma_hat=theta[:n].tolist(), d_hat=theta[n:].tolist())


# =============================================================================
# Closed-loop runs
# =============================================================================

@dataclass
class AdaptiveRun:
    """Closed-loop record: states, outputs [y, y_R, eps], input u and estimate traces"""

    trajectory: Trajectory
    estimates: np.ndarray
    errors: np.ndarray
    clamp_count: int = 0
    final: Optional[AdaptiveEstimates] = None

    def columns(self) -> List[str]:
        n = len(self.final.gamma_hat)
        m = len(self.final.d_hat)
        return (['t', 'y', 'y_R', 'u', 'eps'] + [f"gamma_hat{i + 1}" for i in range(n)] +
                [f"d_hat{j + 1}" for j in range(m)])

    def to_rows(self) -> List[List[float]]:
        traj = self.trajectory
        data = np.column_stack([traj.times, traj.outputs[:, 0], traj.outputs[:, 1],
                                traj.inputs[:, 0], self.errors, self.estimates])
        return data.tolist()

    def tail_rms_error(self, fraction: float = 0.2) -> float:
        start = int(math.floor((1.0 - fraction) * (self.errors.shape[0] - 1)))
        tail = self.errors[start:]
        return float(np.sqrt(np.mean(tail * tail)))


def run_adaptive_tracking(sys: QuasiLinearSystem, est0: AdaptiveEstimates, ref: ReferenceSignal,
                          x0, T: float, dt: float) -> AdaptiveRun:
    """Per sample: control from current estimates, RK4 plant step with u held, Euler update"""
    est0.check(sys)
    x = as_state(x0, sys.dim, 'x0').copy()
    steps, dt = time_grid(0.0, T, dt)

    states = np.empty((steps + 1, sys.dim))
    outputs = np.empty((steps + 1, 3))
    inputs = np.empty(steps + 1)
    traces = np.empty((steps + 1, sys.n_params))
    est = est0
    clamps = 0

    for k in range(steps + 1):
        t = k * dt
        u, clamped = _clamped_control(est, sys, x, ref, t)
        clamps += int(clamped)
        y = sys.h(x)
        eps = y - ref.y_R(t)
        states[k] = x
        outputs[k] = (y, ref.y_R(t), eps)
        inputs[k] = u
        traces[k] = est.vector
        if k == steps:
            break

        W = build_W(est, sys, x, ref, t, u=u)
        x = rk4_step(lambda s, xs: sys.rhs(s, xs, u), t, x, dt)
        if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > Config.DIVERGENCE_BOUND:
            log_action("Adaptive loop diverged", "adaptive_lie", level='WARNING',
                       additional_data={'t': t + dt})
            raise DivergenceError(f"Adaptive loop diverged at t={t + dt:.6g}", time=t + dt)
        est = parameter_update_step(est, eps, W, dt)

    if clamps:
        log_action(f"{clamps} clamp events during run", "adaptive_lie", level='INFO')
    traj = Trajectory(t0=0.0, dt=dt, states=states, outputs=outputs, inputs=inputs,
                      meta={'system': sys.name, 'clamp_count': clamps})
    return AdaptiveRun(trajectory=traj, estimates=traces, errors=outputs[:, 2].copy(),
                       clamp_count=clamps, final=est)


def lyapunov_trace(run: AdaptiveRun, sys: QuasiLinearSystem, update_gain: float) -> np.ndarray:
    """eps^2/2 + |true - estimates|^2 / (2 update_gain) at every sample"""
    if not update_gain > 0:
        raise ValidationError("The Lyapunov candidate needs a positive update gain")
    times = run.trajectory.times
    truth = np.array([np.concatenate([sys.gamma_at(t), sys.d_at(t)]) for t in times])
    psi = truth - run.estimates
    return 0.5 * run.errors ** 2 + np.sum(psi * psi, axis=1) / (2.0 * update_gain)


# =============================================================================
# Benchmarks
# =============================================================================

def scalar_benchmark(params: Dict[str, Any]) -> Tuple[QuasiLinearSystem, AdaptiveEstimates, ReferenceSignal, List[float]]:
    """x' = gamma x + d u, y = x, tracking sin t"""
    sys = QuasiLinearSystem(f_list=(linear_field([[1.0]], 'x'),),
                            g_list=(constant_field([1.0], '1'),),
                            h=coordinate(0, 1),
                            true_gamma=(float(params['gamma_true']),),
                            true_d=(float(params['d_true']),), name='scalar')
    est0 = AdaptiveEstimates(gamma_hat=[float(params['gamma_hat0'])], d_hat=[float(params['d_hat0'])],
                             update_gain=float(params['update_gain']), alpha=float(params['alpha']))
    x0 = params.get('x0', 0.0)
    return sys, est0, sine_reference(), [float(v) for v in np.atleast_1d(x0)]


def run_benchmark_batch(configs: Sequence[Dict[str, Any]]) -> List[AdaptiveRun]:
    """Scalar benchmarks for several parameter sets, one worker thread each"""
    def run(params: Dict[str, Any]) -> AdaptiveRun:
        sys, est0, ref, x0 = scalar_benchmark(params)
        return run_adaptive_tracking(sys, est0, ref, x0, float(params['T']), float(params['dt']))
    return parallel_map(run, list(configs))
