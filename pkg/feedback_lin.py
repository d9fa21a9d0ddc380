#!/usr/bin/env python3
"""
liectl - Feedback Linearization
Relative degree, linearizing control u = p(x) + q(x) v for affine SISO systems,
Butterworth pole placement and closed-loop verification.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Any, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import signal

from config import Config
from models import (DiffConfig, IntegratorConfig, Trajectory, ValidationError, DepthError,
                    SingularityError, RelativeDegreeError)
from vector_calculus import (ScalarField, VectorField, as_state, constant_field, coordinate,
                             linear_field, linear_scalar, lie_chain_field)
from ode_engine import integrate, time_grid, rk4_step
from utils import log_action

logger = logging.getLogger('liectl.feedback_lin')

Setpoint = Union[float, Callable[[float], float]]


@dataclass(frozen=True)
class AffineSISO:
    """x' = f(x) + g(x) u, y = h(x)"""

    f: VectorField
    g: VectorField
    h: ScalarField
    name: str = 'affine'

    def __post_init__(self):
        if not (self.f.dim == self.g.dim == self.h.dim):
            raise ValidationError(f"{self.name}: f, g and h must share one dimension "
                                  f"(got {self.f.dim}, {self.g.dim}, {self.h.dim})")

    @property
    def n(self) -> int:
        return self.f.dim

    def decoupling_field(self, r: int, cfg: Optional[DiffConfig] = None) -> ScalarField:
        """L_g L_f^{r-1} h"""
        return lie_chain_field(self.h, [self.f] * (r - 1) + [self.g], cfg)


# =============================================================================
# Built-in systems
# =============================================================================

def cubic_system() -> AffineSISO:
    """x1' = x2, x2' = -x1^3 + u, y = x1"""
    f = VectorField(2, lambda x: np.array([x[1], -x[0] ** 3]),
                    lambda x: np.array([[0.0, 1.0], [-3.0 * x[0] ** 2, 0.0]]), 'cubic')
    return AffineSISO(f, constant_field([0.0, 1.0], 'e2'), coordinate(0, 2), 'cubic')


def sine_system() -> AffineSISO:
    """Pendulum-like x1' = x2, x2' = -sin x1 + u, y = x1"""
    f = VectorField(2, lambda x: np.array([x[1], -np.sin(x[0])]),
                    lambda x: np.array([[0.0, 1.0], [-np.cos(x[0]), 0.0]]), 'pendulum')
    return AffineSISO(f, constant_field([0.0, 1.0], 'e2'), coordinate(0, 2), 'sine')


def linear_siso(A, b, c) -> AffineSISO:
    """x' = A x + b u, y = c x"""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    return AffineSISO(linear_field(A), constant_field(b, 'b'), linear_scalar(c, 'cx'), 'linear')


BUILTIN_SYSTEMS: Dict[str, Callable[[], AffineSISO]] = {
    'cubic': cubic_system,
    'sine': sine_system,
    'double-integrator': lambda: linear_siso([[0.0, 1.0], [0.0, 0.0]], [0.0, 1.0], [1.0, 0.0]),
}


# =============================================================================
# Relative degree
# =============================================================================

def _star(x0: np.ndarray, radius: float) -> List[np.ndarray]:
    points = [x0]
    for i in range(x0.shape[0]):
        e = np.zeros_like(x0)
        e[i] = radius
        points.extend([x0 + e, x0 - e])
    return points


def relative_degree(sys: AffineSISO, x0, r_max: int = Config.LIE_DEPTH_CAP,
                    cfg: Optional[DiffConfig] = None) -> int:
    """Smallest r with |L_g L_f^{r-1} h(x0)| above the decoupling threshold.

    An order that vanishes at x0 but not on the surrounding star of sample points
    leaves the relative degree undefined at x0.
    """
    if r_max > Config.LIE_DEPTH_CAP:
        raise DepthError(f"r_max {r_max} exceeds the Lie depth cap {Config.LIE_DEPTH_CAP}")
    if r_max < 1:
        raise ValidationError("r_max must be at least 1")
    x0 = as_state(x0, sys.n, 'x0')
    star = _star(x0, Config.STAR_RADIUS)

    for r in range(1, r_max + 1):
        term = sys.decoupling_field(r, cfg)
        if abs(term(x0)) > Config.DECOUPLING_THRESHOLD:
            return r
        nearby = max(abs(term(p)) for p in star[1:])
        if nearby > Config.STAR_THRESHOLD:
            raise RelativeDegreeError(f"L_g L_f^{r - 1} h vanishes at x0 but not nearby "
                                      f"(|value| up to {nearby:.3g}); relative degree undefined at x0")
    raise RelativeDegreeError(f"L_g L_f^k h vanishes for every k < {r_max}; relative degree undefined")


# =============================================================================
# Controller synthesis
# =============================================================================

def butterworth_beta(r: int, cutoff: float = 1.0) -> List[float]:
    """beta_1..beta_r of the analog Butterworth polynomial of order r with the given cutoff"""
    if r not in (1, 2, 3, 4):
        raise ValidationError(f"Butterworth order must be 1..4, got {r}")
    if not cutoff > 0:
        raise ValidationError("Cutoff frequency must be positive")
    _, a = signal.butter(r, cutoff, btype='low', analog=True)
    a = np.real(a) / np.real(a[0])
    return [float(c) for c in a[1:]]


@dataclass
class LinearizingController:
    """u = p(x) + q(x) v with p = -(L_f^r h + sum beta_k L_f^{r-k} h) / a, q = 1 / a"""

    system: AffineSISO
    r: int
    beta: List[float]
    drift_terms: List[ScalarField] = field(default_factory=list)
    decoupling: Optional[ScalarField] = None

    def evaluate(self, x) -> Tuple[float, float]:
        x = as_state(x, self.system.n)
        a = self.decoupling(x)
        if not abs(a) > Config.DECOUPLING_THRESHOLD:
            raise SingularityError(f"Decoupling term L_g L_f^{self.r - 1} h = {a:.3g} is singular "
                                   f"at x={x.tolist()}", state=x)
        combo = self.drift_terms[self.r](x)
        for k, b in enumerate(self.beta, start=1):
            combo += b * self.drift_terms[self.r - k](x)
        return -combo / a, 1.0 / a

    def control(self, x, v: float) -> float:
        p, q = self.evaluate(x)
        return p + q * v

    def output_derivatives(self, x) -> List[float]:
        """y, y', ..., y^(r-1) at x (valid because L_g L_f^k h = 0 below r - 1)"""
        return [term(x) for term in self.drift_terms[:self.r]]


def synthesize_controller(sys: AffineSISO, beta: Sequence[float], x0,
                          cfg: Optional[DiffConfig] = None) -> LinearizingController:
    """Linearizing controller for the relative degree found at x0"""
    r = relative_degree(sys, x0, cfg=cfg)
    beta = [float(b) for b in beta]
    if len(beta) != r:
        raise ValidationError(f"Relative degree is {r} but {len(beta)} beta coefficients were given")
    terms = [sys.h] + [lie_chain_field(sys.h, [sys.f] * k, cfg) for k in range(1, r + 1)]
    log_action(f"Synthesized controller for {sys.name}", "feedback_lin", level='DEBUG',
               additional_data={'r': r, 'beta': beta})
    return LinearizingController(system=sys, r=r, beta=beta, drift_terms=terms,
                                 decoupling=sys.decoupling_field(r, cfg))


def decoupling_identity_error(ctrl: LinearizingController, points: Sequence[Sequence[float]]) -> float:
    """Largest |q(x) L_g L_f^{r-1} h(x) - 1| over sample points"""
    worst = 0.0
    for x in points:
        _, q = ctrl.evaluate(x)
        worst = max(worst, abs(q * ctrl.decoupling(x) - 1.0))
    return worst


# =============================================================================
# Closed loop
# =============================================================================

def _as_setpoint(v: Setpoint) -> Callable[[float], float]:
    if callable(v):
        return lambda t: float(v(t))
    value = float(v)
    return lambda t: value


def closed_loop_simulate(sys: AffineSISO, ctrl: LinearizingController, v: Setpoint, x0,
                         T: float, dt: float) -> Trajectory:
    """x' = f + g (p + q v) by RK4; outputs y = h(x), input u"""
    setpoint = _as_setpoint(v)
    x0 = as_state(x0, sys.n, 'x0')

    def rhs(t: float, x: np.ndarray) -> np.ndarray:
        u = ctrl.control(x, setpoint(t))
        return sys.f(x) + sys.g(x) * u

    try:
        traj = integrate(rhs, x0, 0.0, T, IntegratorConfig(dt=dt))
    except SingularityError as e:
        log_action("Closed loop hit a singular state", "feedback_lin", level='WARNING',
                   additional_data={'state': None if e.state is None else e.state.tolist()})
        raise

    y = np.array([sys.h(x) for x in traj.states])
    u = np.array([ctrl.control(x, setpoint(t)) for t, x in zip(traj.times, traj.states)])
    out = traj.with_outputs(y, u)
    out.meta.update({'system': sys.name, 'r': ctrl.r, 'beta': list(ctrl.beta),
                     'output_derivatives': ctrl.output_derivatives(x0)})
    return out


def reference_response(beta: Sequence[float], v: Setpoint, initial: Sequence[float],
                       T: float, dt: float, t0: float = 0.0) -> np.ndarray:
    """y of y^(r) + beta_1 y^(r-1) + ... + beta_r y = v from the given derivative conditions"""
    beta = np.asarray(beta, dtype=float)
    r = beta.shape[0]
    if len(initial) != r:
        raise ValidationError(f"Reference model of order {r} needs {r} initial conditions")
    setpoint = _as_setpoint(v)

    def rhs(t: float, z: np.ndarray) -> np.ndarray:
        dz = np.empty(r)
        dz[:-1] = z[1:]
        # z[r-1-k] is y^(r-1-k), weighted by beta_{k+1}
        dz[-1] = setpoint(t) - float(beta @ z[::-1])
        return dz

    steps, step = time_grid(t0, T, dt)
    z = np.asarray(initial, dtype=float).copy()
    y = np.empty(steps + 1)
    y[0] = z[0]
    for k in range(steps):
        z = rk4_step(rhs, t0 + k * step, z, step)
        y[k + 1] = z[0]
    return y


def verify_linearity(traj: Trajectory, beta: Sequence[float], v: Setpoint,
                     initial: Optional[Sequence[float]] = None) -> Dict[str, Any]:
    """Deviation of the recorded output from the beta reference model"""
    if initial is None:
        initial = traj.meta.get('output_derivatives')
    if initial is None:
        raise ValidationError("Initial output derivatives are required (none recorded in the trajectory)")
    if traj.outputs.shape[1] < 1:
        raise ValidationError("Trajectory has no recorded output")

    y = traj.outputs[:, 0]
    T = traj.t0 + traj.duration
    y_ref = reference_response(beta, v, initial, T, traj.dt, t0=traj.t0)
    if y_ref.shape[0] != y.shape[0]:
        raise ValidationError("Reference grid does not match the trajectory grid")
    gap = y - y_ref
    return {
        'max_deviation': float(np.max(np.abs(gap))),
        'rms_deviation': float(np.sqrt(np.mean(gap * gap))),
        'y_ref': y_ref,
    }
