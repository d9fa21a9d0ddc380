#!/usr/bin/env python3
"""
liectl - Linear State-Space Operators
Continuous and discrete Kalman forms, Gramian end-point control, frequency maps,
output feedback, placement residuals, inverse systems and the linear rank condition.
"""

import json
import logging
from dataclasses import dataclass
from typing import Callable, Dict, Any, Sequence, Union

import numpy as np
from scipy import linalg as sp_linalg
from scipy import integrate as sp_integrate

from config import Config
from models import (StateSpaceModel, FrequencyResponse, Trajectory, IntegratorConfig,
                    ValidationError, DimensionError, SingularMatrixError, UncontrollableError)
from ode_engine import integrate, time_grid

logger = logging.getLogger('liectl.linear_ss')

Signal = Union[Callable[[float], Any], Sequence[float], float, None]


@dataclass(frozen=True)
class SampledSignal:
    """Piecewise-linear signal through sampled values (rows = samples, columns = channels)"""

    times: np.ndarray
    values: np.ndarray

    def __call__(self, t: float) -> np.ndarray:
        return np.array([np.interp(t, self.times, self.values[:, j])
                         for j in range(self.values.shape[1])])


def as_signal(u: Signal, m: int) -> Callable[[float], np.ndarray]:
    """Normalize an input description to a callable t -> R^m"""
    if u is None:
        zero = np.zeros(m)
        return lambda t: zero
    if callable(u):
        def sampled(t: float) -> np.ndarray:
            value = np.asarray(u(t), dtype=float).reshape(-1)
            if value.shape[0] != m:
                raise DimensionError(f"input signal returned length {value.shape[0]}, expected {m}")
            return value
        return sampled
    constant = np.asarray(u, dtype=float).reshape(-1)
    if constant.shape[0] != m:
        raise DimensionError(f"constant input has length {constant.shape[0]}, expected {m}")
    return lambda t: constant


def _state(x, n: int, name: str = 'x0') -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != n:
        raise DimensionError(f"{name} has length {x.shape[0]}, expected {n}")
    return x


def numeric_rank(M, rtol: float = Config.RANK_RTOL) -> int:
    """Count singular values above rows * sigma_max * rtol"""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > M.shape[0] * s[0] * rtol))


def is_stable(model: StateSpaceModel) -> bool:
    return bool(np.all(np.linalg.eigvals(model.A).real < 0))


# =============================================================================
# Simulation
# =============================================================================

def simulate_continuous(model: StateSpaceModel, x0, u: Signal, T: float, dt: float,
                        scheme: str = 'rk4') -> Trajectory:
    """x' = Ax + Bu, y = Cx + Du under the fixed-step integrator"""
    x0 = _state(x0, model.n)
    signal = as_signal(u, model.m)
    A, B = model.A, model.B
    traj = integrate(lambda t, x: A @ x + B @ signal(t), x0, 0.0, T,
                     IntegratorConfig(dt=dt, scheme=scheme))
    inputs = np.array([signal(t) for t in traj.times]).reshape(traj.n_samples, model.m)
    outputs = traj.states @ model.C.T + inputs @ model.D.T
    return traj.with_outputs(outputs, inputs)


def simulate_discrete(model: StateSpaceModel, x0, u_sequence, N: int) -> Trajectory:
    """x(n+1) = Ax(n) + Bu(n), y(n) = Cx(n) + Du(n); dt counts samples.

    An input sequence of length N is padded with a zero row for the final sample.
    """
    if N < 0 or int(N) != N:
        raise ValidationError(f"Step count must be a non-negative integer, got {N}")
    x = _state(x0, model.n)
    if u_sequence is None:
        inputs = np.zeros((N + 1, model.m))
    else:
        u_arr = np.asarray(u_sequence, dtype=float)
        if u_arr.ndim == 1 and model.m == 1:
            u_arr = u_arr.reshape(-1, 1)
        u_arr = np.atleast_2d(u_arr)
        if u_arr.shape[1] != model.m or u_arr.shape[0] < N:
            raise DimensionError(f"input sequence must be at least {N}x{model.m}, got {u_arr.shape}")
        inputs = np.zeros((N + 1, model.m))
        rows = min(u_arr.shape[0], N + 1)
        inputs[:rows] = u_arr[:rows]

    states = np.empty((N + 1, model.n))
    states[0] = x
    for n in range(N):
        x = model.A @ x + model.B @ inputs[n]
        states[n + 1] = x
    outputs = states @ model.C.T + inputs @ model.D.T
    return Trajectory(t0=0.0, dt=1.0, states=states, outputs=outputs, inputs=inputs)


def steady_state_output(model: StateSpaceModel, u_inf) -> Dict[str, Any]:
    """y_inf = -C A^-1 B u_inf, with the achievability checks"""
    u_inf = as_signal(u_inf, model.m)(0.0)
    if np.linalg.cond(model.A) > Config.RESONANCE_COND_MAX:
        raise SingularMatrixError("A is singular; the steady-state operator is undefined")
    A_inv_B = np.linalg.solve(model.A, model.B)
    gain = -model.C @ A_inv_B
    return {
        'output': gain @ u_inf,
        'stable': is_stable(model),
        'full_rank': numeric_rank(gain) == model.k if model.k else True,
    }


# =============================================================================
# End-point control
# =============================================================================

def controllability_gramian(model: StateSpaceModel, T: float,
                            steps: int = Config.GRAMIAN_STEPS) -> np.ndarray:
    """W[0,T] by composite Simpson over `steps` panels, symmetrized"""
    if not T > 0:
        raise ValidationError("Gramian horizon must be positive")
    steps = int(steps)
    if steps < 2:
        raise ValidationError("Gramian needs at least two panels")
    if steps % 2:
        steps += 1

    sigma = np.linspace(0.0, T, steps + 1)
    BBt = model.B @ model.B.T
    integrand = np.empty((steps + 1, model.n, model.n))
    for j, s in enumerate(sigma):
        E = sp_linalg.expm(model.A * (T - s))
        integrand[j] = E @ BBt @ E.T
    W = sp_integrate.simpson(integrand, x=sigma, axis=0)
    return 0.5 * (W + W.T)


def min_energy_control(model: StateSpaceModel, x0, xT, T: float, dt: float,
                       steps: int = Config.GRAMIAN_STEPS) -> SampledSignal:
    """u(s) = B' exp(A'(T - s)) W^-1 (xT - exp(AT) x0) sampled on the simulation grid"""
    x0 = _state(x0, model.n)
    xT = _state(xT, model.n, 'xT')
    W = controllability_gramian(model, T, steps)
    if not np.any(W) or np.linalg.cond(W) > Config.GRAMIAN_COND_MAX:
        raise UncontrollableError(f"Gramian over [0, {T}] is singular or ill-conditioned")

    eta = np.linalg.solve(W, xT - sp_linalg.expm(model.A * T) @ x0)
    n_steps, h = time_grid(0.0, T, dt)
    times = h * np.arange(n_steps + 1)
    values = np.array([model.B.T @ sp_linalg.expm(model.A.T * (T - s)) @ eta for s in times])
    return SampledSignal(times, values.reshape(n_steps + 1, model.m))


def rank_condition(model: StateSpaceModel) -> Dict[str, Any]:
    """Rank of W_n = (B AB ... A^{n-1}B)"""
    blocks = [model.B]
    for _ in range(model.n - 1):
        blocks.append(model.A @ blocks[-1])
    rank = numeric_rank(np.hstack(blocks)) if model.m else 0
    return {'rank': rank, 'controllable': rank == model.n}


# =============================================================================
# Frequency-domain maps
# =============================================================================

def transfer_matrix(model: StateSpaceModel, s: complex) -> np.ndarray:
    """C (sI - A)^-1 B + D, raising on a singular resolvent"""
    if not np.any(model.B) or not np.any(model.C):
        return model.D.astype(complex)
    M = s * np.eye(model.n) - model.A
    if np.linalg.cond(M) > Config.RESONANCE_COND_MAX:
        raise SingularMatrixError(f"sI - A is singular at s={s}")
    return model.C @ np.linalg.solve(M, model.B.astype(complex)) + model.D


def frequency_response(model: StateSpaceModel, omegas: Sequence[float]) -> FrequencyResponse:
    """G(iw) per frequency; resonant frequencies get NaN entries and are listed"""
    values = []
    resonances = []
    for omega in omegas:
        try:
            values.append(transfer_matrix(model, 1j * float(omega)))
        except SingularMatrixError:
            values.append(np.full((model.k, model.m), np.nan + 1j * np.nan))
            resonances.append(float(omega))
            logger.warning(f"Resonance at omega={omega}")
    return FrequencyResponse(frequencies=list(omegas), values=values, resonances=resonances)


def repetitive_response(model: StateSpaceModel, omega0: float, harmonics: int) -> FrequencyResponse:
    """G(i k w0) for k = 0..harmonics, the repetitive-mode operator"""
    if omega0 <= 0 or harmonics < 0:
        raise ValidationError("Fundamental frequency must be positive and harmonics non-negative")
    return frequency_response(model, [k * omega0 for k in range(int(harmonics) + 1)])


def impulse_response(model: StateSpaceModel, times: Sequence[float]) -> np.ndarray:
    """C exp(At) B at each time, shape (len(times), k, m)"""
    return np.array([model.C @ sp_linalg.expm(model.A * t) @ model.B for t in times])


def convolve_output(model: StateSpaceModel, x0, u: Signal, times: Sequence[float],
                    steps: int = Config.GRAMIAN_STEPS) -> np.ndarray:
    """y(t) = C exp(At) x0 + int_0^t C exp(A(t-s)) B u(s) ds + D u(t) by Simpson quadrature"""
    x0 = _state(x0, model.n)
    signal = as_signal(u, model.m)
    panels = steps + (steps % 2)
    outputs = []
    for t in times:
        free = model.C @ sp_linalg.expm(model.A * t) @ x0
        if t > 0:
            sigma = np.linspace(0.0, t, panels + 1)
            integrand = np.array([model.C @ sp_linalg.expm(model.A * (t - s)) @ model.B @ signal(s)
                                  for s in sigma])
            forced = sp_integrate.simpson(integrand, x=sigma, axis=0)
        else:
            forced = np.zeros(model.k)
        outputs.append(free + forced + model.D @ signal(t))
    return np.array(outputs)


# =============================================================================
# Feedback and inversion
# =============================================================================

def _check_gain(model: StateSpaceModel, K) -> np.ndarray:
    K = np.atleast_2d(np.asarray(K, dtype=float))
    if K.shape != (model.m, model.k):
        raise DimensionError(f"gain must be {model.m}x{model.k}, got {K.shape}")
    if np.any(model.D):
        raise ValidationError("Output feedback is defined for models without feedthrough (D = 0)")
    return K


def output_feedback(model: StateSpaceModel, K) -> StateSpaceModel:
    """Replace u by u - Ky: state matrix A - BKC"""
    K = _check_gain(model, K)
    return StateSpaceModel(model.A - model.B @ K @ model.C, model.B, model.C, model.D)


def eigenvalue_placement_residual(model: StateSpaceModel, K, lam: complex,
                                  clear_poles: bool = False) -> complex:
    """det [[C(lam I - A)^-1 B, -I], [I, K]], zero iff lam is an eigenvalue of A - BKC.

    With clear_poles the value is multiplied by det(lam I - A), which equals
    (-1)^(km+k) det(lam I - A + BKC) and stays defined at open-loop eigenvalues.
    """
    K = _check_gain(model, K)
    k, m = model.k, model.m
    if clear_poles:
        sign = (-1) ** (k * m + k)
        closed = lam * np.eye(model.n) - model.A + model.B @ K @ model.C
        return complex(sign * np.linalg.det(closed))

    G = transfer_matrix(StateSpaceModel(model.A, model.B, model.C), lam)
    block = np.block([
        [G, -np.eye(k)],
        [np.eye(m), K.astype(complex)],
    ])
    return complex(np.linalg.det(block))


def inverse_system(model: StateSpaceModel) -> StateSpaceModel:
    """Model driven by y' whose output is u:
    x' = (A - B(CB)^-1 CA)x + B(CB)^-1 y',  u = -(CB)^-1 CA x + (CB)^-1 y'
    """
    CB = model.C @ model.B
    if CB.shape[0] != CB.shape[1]:
        raise DimensionError(f"CB must be square for inversion, got {CB.shape}")
    if CB.size == 0 or numeric_rank(CB) < CB.shape[0]:
        raise SingularMatrixError("CB is singular; the system cannot be inverted this way")
    M = np.linalg.inv(CB)
    CA = model.C @ model.A
    return StateSpaceModel(model.A - model.B @ M @ CA, model.B @ M, -M @ CA, M)


def recover_input(model: StateSpaceModel, traj: Trajectory) -> Trajectory:
    """Rebuild u from a trajectory's outputs by central-differencing y and running the inverse"""
    inverse = inverse_system(model)
    y_dot = np.gradient(traj.outputs, traj.dt, axis=0, edge_order=2)
    signal = SampledSignal(traj.times - traj.t0, y_dot)
    return simulate_continuous(inverse, traj.states[0], signal, traj.duration, traj.dt)


# =============================================================================
# Model documents
# =============================================================================

def load_model(path: str) -> StateSpaceModel:
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except FileNotFoundError:
        raise ValidationError(f"Model file not found: {path}")
    except json.JSONDecodeError as e:
        raise ValidationError(f"Malformed model JSON in {path}: {e}")
    return StateSpaceModel.from_dict(data)


def save_model(model: StateSpaceModel, path: str) -> str:
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(json.dumps(model.to_dict(), indent=2) + '\n')
    return path
