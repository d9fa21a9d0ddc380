#!/usr/bin/env python3
"""
liectl - Stochastic Kicks
Delta/spike approximations, Poisson kick processes and shot-noise Langevin ensembles.

Random streams: run `i` of seed `s` draws from PCG64 seeded by
SeedSequence(s, spawn_key=(i,)), so a run's kicks do not depend on the ensemble size
and single runs reproduce ensemble members bit for bit.
"""

import math
import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate as sp_integrate

from models import BaseModel, Trajectory, ValidationError, MultipleRootsError
from utils import log_action

logger = logging.getLogger('liectl.stochastic_kicks')


@dataclass
class KickProcess(BaseModel):
    """Kicks of strength s with random sign at Poisson times of mean spacing t0"""

    strength: float = 1.0
    mean_free_time: float = 1.0
    sign_law: str = 'symmetric'
    seed: int = 0

    def validate(self) -> None:
        errors = []
        if not self.mean_free_time > 0:
            errors.append("mean free time must be positive")
        if self.sign_law != 'symmetric':
            errors.append(f"unsupported sign law: {self.sign_law}")
        if not np.isfinite(self.strength):
            errors.append("strength must be finite")
        if errors:
            raise ValidationError(f"KickProcess validation errors: {'; '.join(errors)}")

    @property
    def Q(self) -> float:
        """Fluctuation strength s^2 / t0"""
        return self.strength ** 2 / self.mean_free_time

    @classmethod
    def from_fluctuation(cls, Q: float, mean_free_time: float, seed: int = 0) -> 'KickProcess':
        if Q < 0:
            raise ValidationError("Fluctuation strength Q must be non-negative")
        return cls(strength=math.sqrt(Q * mean_free_time), mean_free_time=mean_free_time, seed=seed)


@dataclass
class LangevinParams(BaseModel):
    """Damping gamma and mass m of m v' = -gamma v + F(t)"""

    gamma: float = 1.0
    m: float = 1.0
    Q: float = 0.0

    def validate(self) -> None:
        errors = []
        if not self.gamma > 0:
            errors.append("gamma must be positive")
        if not self.m > 0:
            errors.append("m must be positive")
        if self.Q < 0:
            errors.append("Q must be non-negative")
        if errors:
            raise ValidationError(f"LangevinParams validation errors: {'; '.join(errors)}")

    @property
    def stationary_second_moment(self) -> float:
        return self.Q / (2.0 * self.gamma * self.m)


@dataclass
class ThermalParams(BaseModel):
    """Boltzmann constant and absolute temperature"""

    kB: float = 1.0
    T_abs: float = 1.0

    def validate(self) -> None:
        if not (self.kB > 0 and self.T_abs > 0):
            raise ValidationError("ThermalParams validation errors: kB and T_abs must be positive")


@dataclass
class EnsembleStats(BaseModel):
    """Ensemble statistics of velocity traces after t_start"""

    runs: int = 0
    mean: float = 0.0
    var: float = 0.0
    second_moment: float = 0.0
    lag_times: List[float] = field(default_factory=list)
    autocorr: List[float] = field(default_factory=list)
    decay_constant: Optional[float] = None

    def validate(self) -> None:
        if self.runs < 0 or self.var < -1e-12:
            raise ValidationError("EnsembleStats validation errors: negative runs or variance")


# =============================================================================
# Delta and spike functions
# =============================================================================

def gaussian_pulse(t, alpha: float):
    """(1 / sqrt(pi alpha)) exp(-t^2 / alpha), unit area for every alpha"""
    if not alpha > 0:
        raise ValidationError("Pulse width alpha must be positive")
    t = np.asarray(t, dtype=float)
    value = np.exp(-t * t / alpha) / math.sqrt(math.pi * alpha)
    return float(value) if value.ndim == 0 else value


def heaviside_from_delta(T: float, alpha: float) -> float:
    """Integral of the pulse up to T; exactly 1/2 at T = 0"""
    if not alpha > 0:
        raise ValidationError("Pulse width alpha must be positive")
    if T == 0:
        return 0.5
    reach = min(abs(T), 40.0 * math.sqrt(alpha))
    half, _ = sp_integrate.quad(gaussian_pulse, 0.0, reach, args=(alpha,),
                                epsabs=1e-14, epsrel=1e-12, limit=200)
    return 0.5 + math.copysign(half, T)


def _roots(phase: Callable[[float], float], lo: float, hi: float, samples: int = 4001) -> List[float]:
    grid = np.linspace(lo, hi, samples)
    values = np.array([phase(t) for t in grid])
    roots = []
    for i in range(samples - 1):
        if values[i] == 0.0:
            roots.append(float(grid[i]))
        elif values[i] * values[i + 1] < 0:
            a, b = grid[i], grid[i + 1]
            roots.append(float(a - values[i] * (b - a) / (values[i + 1] - values[i])))
    return roots


def spike_integral(phase: Callable[[float], float], T: float, alpha: float,
                   window_start: float = -100.0,
                   phase_rate: Optional[Callable[[float], float]] = None,
                   with_rate: bool = True) -> float:
    """Quadrature of delta_alpha(phi(t)) phi'(t) over [window_start, T].

    with_rate=False integrates the bare delta_alpha(phi(t)), which tends to 1/phi'(root).
    """
    if not alpha > 0:
        raise ValidationError("Pulse width alpha must be positive")
    if not T > window_start:
        raise ValidationError("T must lie after the window start")
    roots = _roots(phase, window_start, T)
    if len(roots) > 1:
        raise MultipleRootsError(f"Phase function has {len(roots)} roots in [{window_start}, {T}]")

    if phase_rate is None:
        step = 1e-6
        phase_rate = lambda t: (phase(t + step) - phase(t - step)) / (2.0 * step)

    def integrand(t: float) -> float:
        pulse = gaussian_pulse(phase(t), alpha)
        return pulse * phase_rate(t) if with_rate else pulse

    points = [r for r in roots if window_start < r < T]
    value, _ = sp_integrate.quad(integrand, window_start, T, points=points or None,
                                 epsabs=1e-12, epsrel=1e-10, limit=400)
    return float(value)


# =============================================================================
# Kick sampling
# =============================================================================

def run_generator(seed: int, run_index: int = 0) -> np.random.Generator:
    """PCG64 stream for one run of a seeded ensemble"""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(run_index),))))


def sample_kicks(proc: KickProcess, T: float, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Poisson arrival times on [0, T) and their +-1 signs"""
    if T <= 0:
        return np.zeros(0), np.zeros(0)
    count = int(rng.poisson(T / proc.mean_free_time))
    times = np.sort(rng.uniform(0.0, T, size=count))
    signs = rng.choice(np.array([-1.0, 1.0]), size=count)
    return times, signs


def sample_kick_times(proc: KickProcess, T: float, run_index: int = 0) -> np.ndarray:
    """Sorted Poisson arrival times with rate 1/t0, deterministic under the process seed"""
    times, _ = sample_kicks(proc, T, run_generator(proc.seed, run_index))
    return times


# =============================================================================
# Langevin dynamics
# =============================================================================

def _kick_matrix(params: LangevinParams, proc: KickProcess, T: float, steps: int, dt: float,
                 seed: int, run_indices: Sequence[int]) -> np.ndarray:
    jumps = np.zeros((len(run_indices), steps + 1))
    scale = proc.strength / params.m
    for row, run in enumerate(run_indices):
        times, signs = sample_kicks(proc, T, run_generator(seed, run))
        index = np.minimum(np.rint(times / dt).astype(int), steps)
        np.add.at(jumps[row], index, scale * signs)
    return jumps


def _simulate_runs(params: LangevinParams, proc: KickProcess, T: float, dt: float, seed: int,
                   run_indices: Sequence[int], v0: float) -> Tuple[np.ndarray, float]:
    if not T > 0 or not dt > 0:
        raise ValidationError("T and dt must be positive")
    if dt > 0.1 * proc.mean_free_time:
        log_action(f"dt={dt:g} is coarse against mean free time {proc.mean_free_time:g}",
                   "stochastic_kicks", level='WARNING')
    steps = max(1, int(math.ceil(T / dt - 1e-9)))
    dt = T / steps
    decay = math.exp(-params.gamma / params.m * dt)

    jumps = _kick_matrix(params, proc, T, steps, dt, seed, run_indices)
    v = np.empty_like(jumps)
    v[:, 0] = v0 + jumps[:, 0]
    for k in range(steps):
        v[:, k + 1] = v[:, k] * decay + jumps[:, k + 1]
    return v, dt


def simulate_langevin(params: LangevinParams, proc: KickProcess, T: float, dt: float,
                      seed: Optional[int] = None, v0: float = 0.0, run_index: int = 0) -> Trajectory:
    """m v' = -gamma v + F(t): exact decay per step plus velocity jumps of +-s/m"""
    seed = proc.seed if seed is None else seed
    v, dt = _simulate_runs(params, proc, T, dt, seed, [run_index], v0)
    return Trajectory(t0=0.0, dt=dt, states=v[0], seed=seed,
                      meta={'Q': proc.Q, 'run_index': run_index})


def simulate_langevin_ensemble(params: LangevinParams, proc: KickProcess, T: float, dt: float,
                               runs: int, seed: Optional[int] = None, v0: float = 0.0) -> np.ndarray:
    """Velocity matrix (runs x samples); row i equals simulate_langevin(run_index=i)"""
    if runs < 1:
        raise ValidationError("Ensemble needs at least one run")
    seed = proc.seed if seed is None else seed
    v, _ = _simulate_runs(params, proc, T, dt, seed, range(runs), v0)
    return v


def ensemble_stats(ensemble, t_start: float, dt: Optional[float] = None,
                   max_lag: int = 0, t0: float = 0.0) -> EnsembleStats:
    """Mean, variance and normalized autocorrelation over runs after t_start.

    `ensemble` is a list of velocity Trajectories or a runs x samples matrix (then dt is required).
    """
    if isinstance(ensemble, np.ndarray):
        if dt is None:
            raise ValidationError("dt is required for a matrix ensemble")
        data = np.atleast_2d(ensemble)
    else:
        if not ensemble:
            raise ValidationError("Ensemble must not be empty")
        dt = ensemble[0].dt
        t0 = ensemble[0].t0
        data = np.vstack([traj.states[:, 0] for traj in ensemble])
    start = int(math.ceil((t_start - t0) / dt - 1e-9))
    if start >= data.shape[1]:
        raise ValidationError("t_start lies beyond the end of the ensemble")
    window = data[:, max(start, 0):]

    mean_t = window.mean(axis=0)
    centered = window - mean_t
    var = float(np.mean(centered * centered))
    lags = list(range(0, min(max_lag, window.shape[1] - 1) + 1))

    autocorr: List[float] = []
    decay = None
    if var > 0:
        for lag in lags:
            product = centered[:, :window.shape[1] - lag] * centered[:, lag:]
            autocorr.append(float(np.mean(product) / var))
        positive = [(lag * dt, c) for lag, c in zip(lags, autocorr) if c > 0.05]
        if len(positive) >= 2:
            xs, ys = zip(*positive)
            slope, _ = np.polyfit(xs, np.log(ys), 1)
            decay = float(-slope)

    return EnsembleStats(runs=int(data.shape[0]), mean=float(window.mean()), var=var,
                         second_moment=float(np.mean(window * window)),
                         lag_times=[lag * dt for lag in lags], autocorr=autocorr,
                         decay_constant=decay)


def einstein_Q(gamma: float, thermal: ThermalParams) -> float:
    """Q = 2 gamma kB T"""
    if gamma < 0:
        raise ValidationError("gamma must be non-negative")
    return 2.0 * gamma * thermal.kB * thermal.T_abs
