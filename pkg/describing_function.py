#!/usr/bin/env python3
"""
liectl - Describing Function
Harmonic-balance limit-cycle prediction with the Van der Pol oscillator as the
built-in case, simulation cross-checks and tracer-plot data.
"""

import cmath
import math
import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize, signal

from config import Config
from models import (BaseModel, IntegratorConfig, Trajectory, ValidationError,
                    ConvergenceError, DomainError)
from ode_engine import integrate
from utils import log_action, parallel_map

logger = logging.getLogger('liectl.describing_function')


@dataclass(frozen=True)
class QuasiLinearLoop:
    """Linear block G(w) closed through a quasi-linear element N(A, w)"""

    G: Callable[[float], complex]
    N: Callable[[float, float], complex]
    name: str = 'loop'

    def residual(self, A: float, omega: float) -> complex:
        return 1.0 + self.G(omega) * self.N(A, omega)


@dataclass
class LimitCyclePrediction(BaseModel):
    """Solution (A, omega) of 1 + G N = 0"""

    A: float = 0.0
    omega: float = 0.0
    residual: float = 0.0
    restarts: int = 0

    def validate(self) -> None:
        errors = []
        if not self.A > 0:
            errors.append("amplitude must be positive")
        if not self.omega > 0:
            errors.append("frequency must be positive")
        if errors:
            raise ValidationError(f"LimitCyclePrediction validation errors: {'; '.join(errors)}")


# =============================================================================
# Van der Pol loop
# =============================================================================

def vdp_describing_function(A: float, omega: float) -> complex:
    """N(A, w) = i w A^2 / 4 for the x^2 x' nonlinearity"""
    if not (A > 0 and omega > 0):
        raise ValidationError("Amplitude and frequency must be positive")
    return 1j * omega * A * A / 4.0


def vdp_linear_block(alpha: float, omega: float) -> complex:
    """alpha / ((i w)^2 - alpha (i w) + 1)"""
    if not omega > 0:
        raise ValidationError("Frequency must be positive")
    s = 1j * omega
    denominator = s * s - alpha * s + 1.0
    if denominator == 0:
        raise DomainError(f"Linear block has a resonance at omega={omega} for alpha={alpha}")
    return alpha / denominator


def vdp_loop(alpha: float) -> QuasiLinearLoop:
    return QuasiLinearLoop(G=lambda w: vdp_linear_block(alpha, w), N=vdp_describing_function,
                           name=f"van-der-pol(alpha={alpha:g})")


def vdp_eigen_locus(A: float, alpha: float) -> Tuple[complex, complex]:
    """Eigenvalues -alpha (A^2 - 4)/8 +- sqrt(alpha^2 (A^2 - 4)^2 / 64 - 1) of the quasi-linear loop"""
    if not (A > 0 and alpha > 0):
        raise ValidationError("Amplitude and alpha must be positive")
    shift = A * A - 4.0
    centre = -alpha * shift / 8.0
    root = cmath.sqrt(alpha * alpha * shift * shift / 64.0 - 1.0)
    return complex(centre + root), complex(centre - root)


# =============================================================================
# Harmonic balance
# =============================================================================

def _balance_equations(loop: QuasiLinearLoop):
    def equations(z: np.ndarray) -> List[float]:
        A, omega = float(z[0]), float(z[1])
        if A <= 0 or omega <= 0:
            # N depends on A^2, so mirror the negative branch to keep the solver defined
            A, omega = abs(A) or 1e-300, abs(omega) or 1e-300
        r = loop.residual(A, omega)
        return [r.real, r.imag]
    return equations


def _attempt(loop: QuasiLinearLoop, A0: float, omega0: float, tol: float) -> Optional[Tuple[float, float, float]]:
    try:
        solution = optimize.root(_balance_equations(loop), [A0, omega0], method='hybr',
                                 options={'xtol': 1e-14, 'maxfev': Config.BALANCE_MAX_ITER})
    except (ValidationError, DomainError, FloatingPointError, ZeroDivisionError):
        return None
    A, omega = float(solution.x[0]), float(solution.x[1])
    if not (np.isfinite(A) and np.isfinite(omega)) or A <= 0 or omega <= 0:
        return None
    try:
        residual = abs(loop.residual(A, omega))
    except (ValidationError, DomainError):
        return None
    if residual >= tol:
        return None
    return A, omega, residual


def harmonic_balance_solve(loop: QuasiLinearLoop, A0: float, omega0: float,
                           tol: float = Config.BALANCE_TOL) -> LimitCyclePrediction:
    """Root of Re/Im(1 + G(w) N(A, w)) in (A, w), restarting from a grid around the guess"""
    if not (A0 > 0 and omega0 > 0):
        raise ValidationError("Initial amplitude and frequency guesses must be positive")

    initial = abs(loop.residual(A0, omega0))
    if initial < tol:
        return LimitCyclePrediction(A=float(A0), omega=float(omega0), residual=float(initial))

    found = _attempt(loop, A0, omega0, tol)
    restarts = 0
    if found is None:
        seeds = [(a, w) for a in np.geomspace(0.1 * A0, 10.0 * A0, 7)
                 for w in np.geomspace(0.1 * omega0, 10.0 * omega0, 7)]
        for a, w in seeds:
            restarts += 1
            found = _attempt(loop, float(a), float(w), tol)
            if found is not None:
                break
        if found is not None:
            log_action(f"Harmonic balance converged after {restarts} restarts", "describing_function",
                       level='DEBUG', additional_data={'loop': loop.name})
    if found is None:
        raise ConvergenceError(f"Harmonic balance for {loop.name} did not converge "
                               f"(initial residual {initial:.3g}, {restarts} restarts)")

    A, omega, residual = found
    return LimitCyclePrediction(A=A, omega=omega, residual=residual, restarts=restarts)


# =============================================================================
# Static nonlinearities
# =============================================================================

class SaturationNonlinearity:
    """Symmetric saturation at +-bound"""

    def __init__(self, bound: float = 1.0):
        if not bound > 0:
            raise ValidationError("Saturation bound must be positive")
        self.bound = float(bound)

    def __call__(self, x):
        return np.clip(x, -self.bound, self.bound)

    def describing_function(self, A: float) -> complex:
        if A <= self.bound:
            return 1.0 + 0j
        ratio = self.bound / A
        return complex(2.0 / math.pi * (math.asin(ratio) + ratio * math.sqrt(1.0 - ratio * ratio)))


class RelayNonlinearity:
    """Ideal relay with output +-level"""

    def __init__(self, level: float = 1.0):
        if not level > 0:
            raise ValidationError("Relay level must be positive")
        self.level = float(level)

    def __call__(self, x):
        return self.level * np.sign(x)

    def describing_function(self, A: float) -> complex:
        return complex(4.0 * self.level / (math.pi * A))


def describing_function(F: Callable[[float], float], A, num_points: int = 100,
                        use_closed_form: bool = True):
    """First-harmonic describing function of a static nonlinearity at amplitude(s) A.

    N(A) = (1 / (pi A)) * integral of F(A sin th) (sin th + i cos th) over one period.
    """
    amplitudes = np.atleast_1d(np.asarray(A, dtype=float))
    if np.any(amplitudes <= 0):
        raise ValidationError("Describing function amplitudes must be positive")
    if num_points < 4:
        raise ValidationError("num_points must be at least 4")

    closed = getattr(F, 'describing_function', None) if use_closed_form else None
    theta, dtheta = np.linspace(0.0, 2.0 * np.pi, num_points, endpoint=False, retstep=True)
    sin_theta = np.sin(theta)
    cos_theta = np.cos(theta)

    values = np.empty(amplitudes.shape, dtype=complex)
    for i, a in enumerate(amplitudes):
        if closed is not None:
            values[i] = closed(a)
            continue
        response = np.array([float(np.squeeze(F(a * s))) for s in sin_theta])
        in_phase = np.sum(response * sin_theta) * dtheta
        quadrature = np.sum(response * cos_theta) * dtheta
        values[i] = (in_phase + 1j * quadrature) / (np.pi * a)
    return complex(values[0]) if np.ndim(A) == 0 else values


# =============================================================================
# Simulation cross-checks
# =============================================================================

def vdp_rhs(alpha: float) -> Callable[[float, np.ndarray], np.ndarray]:
    """x'' + alpha (x^2 - 1) x' + x = 0 as a first-order system"""
    def rhs(t: float, z: np.ndarray) -> np.ndarray:
        x, v = z
        return np.array([v, -alpha * (x * x - 1.0) * v - x])
    return rhs


def spring_rhs(k: float) -> Callable[[float, np.ndarray], np.ndarray]:
    """x'' = -k x' - x"""
    def rhs(t: float, z: np.ndarray) -> np.ndarray:
        return np.array([z[1], -k * z[1] - z[0]])
    return rhs


def _refined_peaks(x: np.ndarray) -> np.ndarray:
    indices, _ = signal.find_peaks(x)
    peaks = []
    for i in indices:
        if i == 0 or i == len(x) - 1:
            continue
        y0, y1, y2 = x[i - 1], x[i], x[i + 1]
        curvature = y0 - 2.0 * y1 + y2
        if curvature == 0:
            peaks.append(y1)
            continue
        offset = 0.5 * (y0 - y2) / curvature
        peaks.append(y1 - 0.25 * (y0 - y2) * offset)
    return np.asarray(peaks)


def _upward_crossings(times: np.ndarray, x: np.ndarray) -> np.ndarray:
    idx = np.nonzero((x[:-1] < 0) & (x[1:] >= 0))[0]
    fraction = -x[idx] / (x[idx + 1] - x[idx])
    return times[idx] + fraction * (times[idx + 1] - times[idx])


def measure_cycle(traj: Trajectory, window: int = 10) -> Dict[str, float]:
    """Amplitude (mean of the last `window` peaks of x1) and period (upward zero-crossing spacing)"""
    x = traj.states[:, 0]
    peaks = _refined_peaks(x)
    crossings = _upward_crossings(traj.times, x)
    if peaks.size < 2 or crossings.size < 3:
        raise ValidationError(f"Run of length {traj.duration:g} is too short to settle onto a cycle")

    amplitude = float(np.mean(np.abs(peaks[-window:])))
    period = float(np.mean(np.diff(crossings[-(window + 1):])))
    return {'amplitude': amplitude, 'period': period, 'peaks_used': int(min(window, peaks.size))}


def vdp_simulate_amplitude(alpha: float, x0: Sequence[float] = (0.5, 0.0), T: float = 400.0,
                           dt: float = 0.01, window: int = 10) -> Dict[str, float]:
    """Settled limit-cycle amplitude and period of the simulated oscillator"""
    if not alpha > 0:
        raise ValidationError("alpha must be positive")
    traj = integrate(vdp_rhs(alpha), x0, 0.0, T, IntegratorConfig(dt=dt))
    result = measure_cycle(traj, window)
    result['alpha'] = float(alpha)
    return result


def amplitude_sweep(alphas: Sequence[float], x0: Sequence[float] = (0.5, 0.0),
                    T: float = 400.0, dt: float = 0.01) -> List[Dict[str, float]]:
    """vdp_simulate_amplitude over several alpha values, fanned out over worker threads"""
    results = parallel_map(lambda a: vdp_simulate_amplitude(float(a), x0, T, dt), list(alphas))
    for entry in results:
        entry['amplitude_error'] = abs(entry['amplitude'] - 2.0)
    return results


def spring_tracer(k: float = 0.2, x0: Sequence[float] = (1.0, 0.0), T: float = 30.0,
                  dt: float = 0.01) -> Trajectory:
    """Tracer-plot data (t, x, x') for the damped spring"""
    if k < 0:
        raise ValidationError("Damping k must be non-negative")
    traj = integrate(spring_rhs(k), x0, 0.0, T, IntegratorConfig(dt=dt))
    traj.meta.update({'system': 'spring', 'k': k})
    return traj


def vdp_tracer(alpha: float = 1.0, x0: Sequence[float] = (0.5, 0.0), T: float = 30.0,
               dt: float = 0.01) -> Trajectory:
    """Tracer-plot data (t, x, x') for the Van der Pol oscillator"""
    traj = integrate(vdp_rhs(alpha), x0, 0.0, T, IntegratorConfig(dt=dt))
    traj.meta.update({'system': 'van-der-pol', 'alpha': alpha})
    return traj
