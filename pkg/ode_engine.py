#!/usr/bin/env python3
"""
liectl - ODE Engine
Fixed-step integration of smooth, delayed, impulsive and variable-structure dynamics
"""

import math
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional, Union, List, Tuple, Any

import numpy as np
from scipy import integrate as sp_integrate

from config import Config
from models import (BaseModel, IntegratorConfig, IntegrationScheme, Trajectory,
                    ValidationError, DivergenceError, SlidingError)
from vector_calculus import ScalarField, VectorField, gradient, as_state
from utils import log_action

logger = logging.getLogger('liectl.ode_engine')

Rhs = Callable[[float, np.ndarray], np.ndarray]


def as_rhs(f: Union[VectorField, Callable]) -> Rhs:
    """VectorFields are autonomous; any other callable is taken as rhs(t, x)"""
    if isinstance(f, VectorField):
        return lambda t, x: f(x)
    if not callable(f):
        raise ValidationError("Right-hand side must be a VectorField or a callable rhs(t, x)")
    return lambda t, x: np.asarray(f(t, x), dtype=float).reshape(-1)


def time_grid(t0: float, T: float, dt: float) -> Tuple[int, float]:
    """Number of steps and the uniform step that lands exactly on T (never above dt)"""
    if not T > t0:
        raise ValidationError(f"Final time {T} must exceed start time {t0}")
    if not dt > 0:
        raise ValidationError("dt must be positive")
    span = T - t0
    steps = max(1, int(math.ceil(span / dt - 1e-9)))
    return steps, span / steps


def rk4_step(rhs: Rhs, t: float, x: np.ndarray, dt: float) -> np.ndarray:
    k1 = rhs(t, x)
    k2 = rhs(t + 0.5 * dt, x + 0.5 * dt * k1)
    k3 = rhs(t + 0.5 * dt, x + 0.5 * dt * k2)
    k4 = rhs(t + dt, x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def euler_step(rhs: Rhs, t: float, x: np.ndarray, dt: float) -> np.ndarray:
    return x + dt * rhs(t, x)


def stepper(cfg: IntegratorConfig) -> Callable[[Rhs, float, np.ndarray, float], np.ndarray]:
    return euler_step if cfg.scheme == IntegrationScheme.EULER else rk4_step


def _check_finite(x: np.ndarray, t: float) -> None:
    if not np.all(np.isfinite(x)):
        log_action(f"Non-finite state at t={t:.6g}", "ode_engine", level='WARNING')
        raise DivergenceError(f"State became non-finite at t={t:.6g}", time=t)


# =============================================================================
# Smooth dynamics
# =============================================================================

def integrate(f: Union[VectorField, Callable], x0, t0: float, T: float,
              cfg: Optional[IntegratorConfig] = None) -> Trajectory:
    """Fixed-step solution of x' = f(x) or x' = f(t, x) on [t0, T]"""
    cfg = cfg or IntegratorConfig()
    rhs = as_rhs(f)
    step = stepper(cfg)
    steps, dt = time_grid(t0, T, cfg.dt)

    x = np.asarray(x0, dtype=float).reshape(-1).copy()
    states = np.empty((steps + 1, x.shape[0]))
    states[0] = x
    for k in range(steps):
        t = t0 + k * dt
        x = step(rhs, t, x, dt)
        _check_finite(x, t + dt)
        states[k + 1] = x

    return Trajectory(t0=t0, dt=dt, states=states)


# =============================================================================
# Delayed dynamics
# =============================================================================

@dataclass
class DelaySpec(BaseModel):
    """Dead time tau with the delayed signal's history before t0.

    With `signal` set, the delayed quantity is the known signal u(t - tau);
    otherwise it is the state x(t - tau).
    """

    tau: float = 0.0
    history: Optional[Callable[[float], Any]] = None
    signal: Optional[Callable[[float], Any]] = None

    def validate(self) -> None:
        errors = []
        if not np.isfinite(self.tau) or self.tau < 0:
            errors.append("tau must be non-negative")
        if self.tau > 0 and self.history is None:
            errors.append("a history is required when tau > 0")
        if errors:
            raise ValidationError(f"DelaySpec validation errors: {'; '.join(errors)}")


class _DelayBuffer:
    """Ring buffer of recent samples read back by linear interpolation"""

    def __init__(self, t0: float, dt: float, tau: float, history: Callable[[float], Any]):
        self.t0 = t0
        self.dt = dt
        self.history = history
        self.samples = deque(maxlen=int(math.ceil(tau / dt)) + 3)
        self.first_index = 0

    def push(self, x: np.ndarray) -> None:
        if len(self.samples) == self.samples.maxlen:
            self.first_index += 1
        self.samples.append(x)

    def read(self, s: float) -> np.ndarray:
        if s < self.t0 - 1e-12 * max(1.0, abs(self.t0)):
            return np.asarray(self.history(s), dtype=float).reshape(-1)
        pos = (s - self.t0) / self.dt - self.first_index
        i = int(math.floor(pos + 1e-9))
        i = min(max(i, 0), len(self.samples) - 1)
        w = pos - i
        if i + 1 >= len(self.samples) or w <= 1e-12:
            return self.samples[i]
        return (1.0 - w) * self.samples[i] + w * self.samples[i + 1]


def integrate_with_delay(rhs: Callable[[float, np.ndarray, np.ndarray], Any], delay: DelaySpec, x0,
                         t0: float, T: float, cfg: Optional[IntegratorConfig] = None) -> Trajectory:
    """Fixed-step solution of x' = rhs(t, x, z) with z the delayed state or signal"""
    cfg = cfg or IntegratorConfig()
    step = stepper(cfg)
    steps, dt = time_grid(t0, T, cfg.dt)
    tau = delay.tau
    if 0 < tau < dt * (1 - 1e-9):
        raise ValidationError(f"Delay {tau} is shorter than the step {dt}; reduce dt")
    if tau > 0 and abs(tau / dt - round(tau / dt)) > 1e-9:
        logger.debug("tau is not a multiple of dt; delayed values are interpolated")

    x = np.asarray(x0, dtype=float).reshape(-1).copy()

    if delay.signal is not None:
        def delayed(t: float, xs: np.ndarray) -> np.ndarray:
            s = t - tau
            source = delay.signal if (tau == 0 or s >= t0) else delay.history
            return np.asarray(source(s), dtype=float).reshape(-1)
        buffer = None
    elif tau == 0:
        def delayed(t: float, xs: np.ndarray) -> np.ndarray:
            return xs
        buffer = None
    else:
        buffer = _DelayBuffer(t0, dt, tau, delay.history)
        buffer.push(x.copy())

        def delayed(t: float, xs: np.ndarray) -> np.ndarray:
            return buffer.read(t - tau)

    def closed(t: float, xs: np.ndarray) -> np.ndarray:
        return np.asarray(rhs(t, xs, delayed(t, xs)), dtype=float).reshape(-1)

    states = np.empty((steps + 1, x.shape[0]))
    states[0] = x
    for k in range(steps):
        t = t0 + k * dt
        x = step(closed, t, x, dt)
        _check_finite(x, t + dt)
        states[k + 1] = x
        if buffer is not None:
            buffer.push(x.copy())

    return Trajectory(t0=t0, dt=dt, states=states, meta={'tau': tau})


# =============================================================================
# Variable-structure (Filippov) dynamics
# =============================================================================

@dataclass(frozen=True)
class SwitchingSurface:
    """Surface M = {s = 0} separating f_plus (s > 0) from f_minus (s < 0)"""

    s: ScalarField
    f_plus: VectorField
    f_minus: VectorField

    def __post_init__(self):
        if not (self.s.dim == self.f_plus.dim == self.f_minus.dim):
            raise ValidationError("Switching surface and fields must share a dimension")

    @property
    def dim(self) -> int:
        return self.s.dim


def _normal_rates(surface: SwitchingSurface, x: np.ndarray) -> Tuple[np.ndarray, float, float]:
    grad = gradient(surface.s, x)
    return grad, float(grad @ surface.f_minus(x)), float(grad @ surface.f_plus(x))


def sliding_alpha(surface: SwitchingSurface, x) -> float:
    """alpha with (1 - alpha) f- + alpha f+ tangent to M at x, clamped to [0, 1]"""
    x = as_state(x, surface.dim)
    _, a, b = _normal_rates(surface, x)
    denominator = a - b
    if abs(denominator) <= 1e-14 * max(1.0, abs(a), abs(b)):
        raise SlidingError(f"Sliding direction undefined at {x.tolist()}: fields equally transversal")
    return float(min(1.0, max(0.0, a / denominator)))


def sliding_field(surface: SwitchingSurface, x) -> np.ndarray:
    x = as_state(x, surface.dim)
    alpha = sliding_alpha(surface, x)
    return (1.0 - alpha) * surface.f_minus(x) + alpha * surface.f_plus(x)


def _attracting(a: float, b: float) -> bool:
    # both fields point toward M
    return b < 0.0 < a


def integrate_variable_structure(surface: SwitchingSurface, x0, t0: float, T: float,
                                 cfg: Optional[IntegratorConfig] = None,
                                 band: float = Config.SLIDING_BAND) -> Trajectory:
    """Band-method Filippov integration.

    Outputs hold s(x) and a 0/1 sliding flag per sample; events mark entering and
    leaving the sliding regime and plain crossings of M.
    """
    cfg = cfg or IntegratorConfig()
    if not band > 0:
        raise ValidationError("Sliding band must be positive")
    step = stepper(cfg)
    steps, dt = time_grid(t0, T, cfg.dt)

    plus = as_rhs(surface.f_plus)
    minus = as_rhs(surface.f_minus)
    slide = lambda t, xs: sliding_field(surface, xs)

    x = as_state(x0, surface.dim).copy()
    states = np.empty((steps + 1, surface.dim))
    outputs = np.zeros((steps + 1, 2))
    events: List[Tuple[float, str]] = []
    sliding = False

    def record(k: int, xs: np.ndarray, flag: bool) -> None:
        states[k] = xs
        outputs[k, 0] = surface.s(xs)
        outputs[k, 1] = 1.0 if flag else 0.0

    def project(xs: np.ndarray) -> np.ndarray:
        sv = surface.s(xs)
        if abs(sv) <= 0.5 * band:
            return xs
        grad = gradient(surface.s, xs)
        norm2 = float(grad @ grad)
        return xs if norm2 == 0.0 else xs - sv * grad / norm2

    record(0, x, False)
    for k in range(steps):
        t = t0 + k * dt
        sv = surface.s(x)
        _, a, b = _normal_rates(surface, x)
        attracting = _attracting(a, b)

        if abs(sv) < band and attracting:
            if not sliding:
                sliding = True
                events.append((t, 'enter-sliding'))
                log_action(f"Entered sliding at t={t:.6g}", "ode_engine", level='DEBUG')
            x = project(step(slide, t, x, dt))
        else:
            if sliding:
                sliding = False
                events.append((t, 'exit-sliding'))
                log_action(f"Left sliding at t={t:.6g}", "ode_engine", level='DEBUG')
            if sv > 0 or (sv == 0 and b > 0):
                rhs = plus
            elif sv < 0 or a < 0:
                rhs = minus
            else:
                rhs = plus
            x_next = step(rhs, t, x, dt)
            s_next = surface.s(x_next)
            if sv != 0 and np.sign(s_next) != np.sign(sv):
                theta = sv / (sv - s_next)
                x_cross = x + theta * (x_next - x)
                _, a_c, b_c = _normal_rates(surface, x_cross)
                if _attracting(a_c, b_c):
                    # clip onto M and slide for the rest of the step
                    t_cross = t + theta * dt
                    sliding = True
                    events.append((t_cross, 'enter-sliding'))
                    log_action(f"Entered sliding at t={t_cross:.6g}", "ode_engine", level='DEBUG')
                    remaining = (1.0 - theta) * dt
                    x_next = project(step(slide, t_cross, project(x_cross), remaining)) \
                        if remaining > 0 else project(x_cross)
                else:
                    events.append((t + theta * dt, 'cross'))
            x = x_next
        _check_finite(x, t + dt)
        record(k + 1, x, sliding)

    return Trajectory(t0=t0, dt=dt, states=states, outputs=outputs, events=events,
                      meta={'band': band, 'output_columns': ['s', 'sliding']})


# =============================================================================
# Impulsive dynamics
# =============================================================================

@dataclass
class ImpulseSchedule(BaseModel):
    """Kick times sigma_j with strengths s_j added to one state channel"""

    times: List[float] = field(default_factory=list)
    strengths: List[float] = field(default_factory=list)
    channel: int = 0

    def __post_init__(self):
        times = [float(t) for t in self.times]
        strengths = [float(s) for s in self.strengths]
        if len(times) == len(strengths):
            merged_t: List[float] = []
            merged_s: List[float] = []
            for t, s in zip(times, strengths):
                if merged_t and t == merged_t[-1]:
                    merged_s[-1] += s  # coincident kicks collapse
                else:
                    merged_t.append(t)
                    merged_s.append(s)
            times, strengths = merged_t, merged_s
        self.times = times
        self.strengths = strengths
        super().__post_init__()

    def validate(self) -> None:
        errors = []
        if len(self.times) != len(self.strengths):
            errors.append("times and strengths differ in length")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            errors.append("kick times must be sorted")
        if self.channel < 0:
            errors.append("channel must be a non-negative index")
        if errors:
            raise ValidationError(f"ImpulseSchedule validation errors: {'; '.join(errors)}")


def integrate_with_impulses(f: Union[VectorField, Callable], schedule: ImpulseSchedule, x0,
                            t0: float, T: float, cfg: Optional[IntegratorConfig] = None) -> Trajectory:
    """Integrate f between kicks; each kick lands on the sample boundary nearest sigma_j"""
    cfg = cfg or IntegratorConfig()
    rhs = as_rhs(f)
    step = stepper(cfg)
    steps, dt = time_grid(t0, T, cfg.dt)

    x = np.asarray(x0, dtype=float).reshape(-1).copy()
    if schedule.channel >= x.shape[0]:
        raise ValidationError(f"Kick channel {schedule.channel} outside state of length {x.shape[0]}")
    if schedule.times and (schedule.times[0] < t0 or schedule.times[-1] > T):
        raise ValidationError("Kick times must lie within [t0, T]")

    kicks = {}
    for sigma, strength in zip(schedule.times, schedule.strengths):
        index = int(round((sigma - t0) / dt))
        kicks[index] = kicks.get(index, 0.0) + strength

    states = np.empty((steps + 1, x.shape[0]))
    x[schedule.channel] += kicks.get(0, 0.0)
    states[0] = x
    for k in range(steps):
        t = t0 + k * dt
        x = step(rhs, t, x, dt)
        if k + 1 in kicks:
            x[schedule.channel] += kicks[k + 1]
        _check_finite(x, t + dt)
        states[k + 1] = x

    events = [(sigma, 'kick') for sigma in schedule.times]
    return Trajectory(t0=t0, dt=dt, states=states, events=events)


# =============================================================================
# Green's functions
# =============================================================================

def green_first_order(t, sigma: float, gamma: float):
    """Response of v' = -gamma v to a unit kick at sigma"""
    t = np.asarray(t, dtype=float)
    lag = t - sigma
    return np.where(lag >= 0, np.exp(-gamma * np.maximum(lag, 0.0)), 0.0)


def green_second_order(t, sigma: float, gamma: float):
    """(t - sigma) exp(-gamma (t - sigma)) for t >= sigma, the critically damped kernel"""
    t = np.asarray(t, dtype=float)
    lag = np.maximum(t - sigma, 0.0)
    return np.where(t >= sigma, lag * np.exp(-gamma * lag), 0.0)


def kick_response(t, schedule: ImpulseSchedule, gamma: float):
    """Superposition sum_j s_j G(t - sigma_j) of first-order kick responses"""
    t = np.asarray(t, dtype=float)
    total = np.zeros_like(t)
    for sigma, strength in zip(schedule.times, schedule.strengths):
        total = total + strength * green_first_order(t, sigma, gamma)
    return total


def convolution_response(force: Callable[[float], float], gamma: float, t: float,
                         t_start: float = 0.0) -> float:
    """v(t) = integral of F(sigma) exp(-gamma (t - sigma)) from t_start to t"""
    if t <= t_start:
        return 0.0
    value, _ = sp_integrate.quad(lambda s: force(s) * math.exp(-gamma * (t - s)), t_start, t, limit=200)
    return float(value)
