#!/usr/bin/env python3
"""
liectl - Stability Diagnostics
Lyapunov rates, linearization verdicts, exponential-bound checks and decay/boundedness
estimates. Every verdict is a falsifiable check on samples, not a proof.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Any, Optional, Sequence, Union

import numpy as np

from config import Config
from models import (BaseModel, Classification, Trajectory, ValidationError, DimensionError,
                    NotEquilibriumError, UnboundedDecayError)
from vector_calculus import VectorField, jacobian, as_state
from ode_engine import as_rhs

logger = logging.getLogger('liectl.stability')


@dataclass(frozen=True)
class LyapunovCandidate:
    """V(t, x) with optional exact gradient or quadratic form P"""

    V: Optional[Callable[[float, np.ndarray], float]] = None
    gradV: Optional[Callable[[float, np.ndarray], np.ndarray]] = None
    form: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.form is not None:
            P = np.atleast_2d(np.asarray(self.form, dtype=float))
            if P.shape[0] != P.shape[1] or not np.allclose(P, P.T, rtol=0, atol=1e-12):
                raise ValidationError("Quadratic form P must be square and symmetric")
            object.__setattr__(self, 'form', P)
        elif self.V is None:
            raise ValidationError("A Lyapunov candidate needs V or a quadratic form")

    def value(self, t: float, x: np.ndarray) -> float:
        if self.form is not None:
            return float(x @ self.form @ x)
        return float(self.V(t, x))

    @classmethod
    def quadratic(cls, P) -> 'LyapunovCandidate':
        return cls(form=np.asarray(P, dtype=float))


@dataclass
class StabilityVerdict(BaseModel):
    """Linearization verdict at an equilibrium"""

    classification: Classification = Classification.INCONCLUSIVE
    eigenvalues: List[complex] = field(default_factory=list)
    decay_rate: Optional[float] = None

    def validate(self) -> None:
        real = [complex(ev).real for ev in self.eigenvalues]
        errors = []
        if self.classification == Classification.ASYMPTOTICALLY_STABLE and real and max(real) >= 0:
            errors.append("stable verdict with a non-negative real part")
        if self.classification == Classification.UNSTABLE and real and max(real) <= 0:
            errors.append("unstable verdict without a positive real part")
        if errors:
            raise ValidationError(f"StabilityVerdict validation errors: {'; '.join(errors)}")


def lyapunov_rate(cand: LyapunovCandidate, f: Union[VectorField, Callable], t: float, x,
                  time_step: float = Config.DIFF_STEP) -> float:
    """V' = dV/dt + (dV/dx) f(t, x); the quadratic form uses 2 x'P f(x) exactly"""
    x = np.asarray(x, dtype=float).reshape(-1)
    if isinstance(f, VectorField) and f.dim != x.shape[0]:
        raise DimensionError(f"state has length {x.shape[0]}, field has dimension {f.dim}")
    fx = as_rhs(f)(t, x)
    if fx.shape != x.shape:
        raise DimensionError(f"field returned length {fx.shape[0]}, expected {x.shape[0]}")

    if cand.form is not None:
        if cand.form.shape[0] != x.shape[0]:
            raise DimensionError(f"form is {cand.form.shape}, state has length {x.shape[0]}")
        return float(2.0 * x @ cand.form @ fx)

    dV_dt = (cand.V(t + time_step, x) - cand.V(t - time_step, x)) / (2.0 * time_step)
    if cand.gradV is not None:
        return float(dV_dt + np.asarray(cand.gradV(t, x), dtype=float) @ fx)
    norm = float(np.linalg.norm(fx))
    if norm == 0.0:
        return float(dV_dt)
    eps = time_step / norm
    along = (cand.V(t, x + eps * fx) - cand.V(t, x - eps * fx)) / (2.0 * eps)
    return float(dV_dt + along)


def classify_equilibrium(f: VectorField, xe, tol: float = Config.EQUILIBRIUM_TOL) -> StabilityVerdict:
    """Eigenvalues of the Jacobian at xe and the resulting verdict"""
    xe = as_state(xe, f.dim, 'xe')
    residual = float(np.linalg.norm(f(xe)))
    if residual > tol:
        raise NotEquilibriumError(f"|f(xe)| = {residual:.3g} exceeds equilibrium tolerance {tol:g}")

    eigenvalues = np.linalg.eigvals(jacobian(f, xe))
    real = eigenvalues.real
    band = Config.EIGEN_ZERO_TOL
    if np.all(real < -band):
        verdict = Classification.ASYMPTOTICALLY_STABLE
        decay = float(-real.max())
    elif np.any(real > band):
        verdict = Classification.UNSTABLE
        decay = None
    else:
        verdict = Classification.INCONCLUSIVE
        decay = None
    return StabilityVerdict(classification=verdict, eigenvalues=[complex(ev) for ev in eigenvalues],
                            decay_rate=decay)


def _norms(traj: Trajectory) -> np.ndarray:
    return np.linalg.norm(traj.states, axis=1)


def check_exponential_bounds(traj: Trajectory, cand: LyapunovCandidate, c: float, c1: float,
                             c2: float, c3: float,
                             f: Optional[Union[VectorField, Callable]] = None) -> Dict[str, Any]:
    """c1|x|^c <= V <= c2|x|^c and V' <= -c3|x|^c at every sample.

    V' comes from the field when given, else from differencing V along the samples.
    """
    if min(c, c1, c2, c3) <= 0:
        raise ValidationError("Exponential-bound constants must be positive")
    if c1 > c2:
        raise ValidationError("c1 must not exceed c2")

    times = traj.times
    values = np.array([cand.value(t, x) for t, x in zip(times, traj.states)])
    powers = _norms(traj) ** c
    if f is not None:
        rates = np.array([lyapunov_rate(cand, f, t, x) for t, x in zip(times, traj.states)])
    elif traj.n_samples > 1:
        rates = np.gradient(values, traj.dt, edge_order=2 if traj.n_samples > 2 else 1)
    else:
        rates = np.zeros(1)

    slack = 1e-9 * np.maximum(1.0, np.abs(values)) + 1e-12
    violations = (values < c1 * powers - slack) | (values > c2 * powers + slack) | \
                 (rates > -c3 * powers + slack)
    if np.any(violations):
        first = int(np.argmax(violations))
        return {'holds': False, 'first_violation': float(times[first])}
    return {'holds': True, 'first_violation': None}


def estimate_decay_rate(traj: Trajectory, tail_fraction: float = Config.DECAY_TAIL_FRACTION) -> float:
    """Negated least-squares slope of log|x(t)| over the trajectory tail"""
    if not 0 < tail_fraction <= 1:
        raise ValidationError("Tail fraction must lie in (0, 1]")
    norms = _norms(traj)
    start = int(np.floor((1.0 - tail_fraction) * (traj.n_samples - 1)))
    window = norms[start:]
    if window.size < 2:
        raise ValidationError("Decay fit needs at least two samples in the window")
    if np.any(window == 0.0):
        raise UnboundedDecayError("Trajectory reaches exactly zero; decay rate is unbounded")
    slope, _ = np.polyfit(traj.times[start:], np.log(window), 1)
    return float(-slope)


def ultimate_bound_estimate(ensemble: Sequence[Trajectory], settle_fraction: float) -> float:
    """Largest |x(t)| over the ensemble once t >= t0 + settle_fraction * T"""
    if not ensemble:
        raise ValidationError("Ensemble must not be empty")
    if not 0 < settle_fraction < 1:
        raise ValidationError("settle_fraction must lie in (0, 1)")
    bound = 0.0
    for traj in ensemble:
        cutoff = traj.t0 + settle_fraction * traj.duration
        mask = traj.times >= cutoff - 1e-12
        bound = max(bound, float(_norms(traj)[mask].max()))
    return bound


def sample_lyapunov_conditions(cand: LyapunovCandidate, f: Union[VectorField, Callable],
                               points: Sequence[Sequence[float]], t: float = 0.0) -> Dict[str, Any]:
    """Direct-method check on sample points: V > 0 and V' <= 0 away from the origin"""
    positive = True
    non_increasing = True
    strictly_decreasing = True
    for x in points:
        x = np.asarray(x, dtype=float).reshape(-1)
        if not np.any(x):
            continue
        if cand.value(t, x) <= 0:
            positive = False
        rate = lyapunov_rate(cand, f, t, x)
        if rate > 0:
            non_increasing = False
        if rate >= 0:
            strictly_decreasing = False
    return {
        'positive_definite': positive,
        'stable': positive and non_increasing,
        'asymptotically_stable': positive and strictly_decreasing,
        'samples': len(points),
    }


def is_bounded(traj: Trajectory, beta: float) -> bool:
    """Lagrange check: |x(t)| < beta at every sample"""
    return bool(np.all(_norms(traj) < beta))
