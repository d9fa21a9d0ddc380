#!/usr/bin/env python3
"""
liectl - Vector Calculus
Scalar and vector fields on R^n with Lie derivatives, Lie brackets and their iterates.

Derivatives come from user-supplied Jacobians/gradients when present and from finite
differences otherwise. Directional derivatives are taken along the field itself
(one stencil per direction instead of one per coordinate), so nested operators stay
affordable inside closed-loop simulations.
"""

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from config import Config
from models import DiffConfig, DiffScheme, DimensionError, DepthError, ValidationError


def as_state(x, dim: int, name: str = 'x') -> np.ndarray:
    """Validate and flatten a state vector"""
    arr = np.asarray(x, dtype=float).reshape(-1)
    if arr.shape[0] != dim:
        raise DimensionError(f"{name} has length {arr.shape[0]}, expected {dim}")
    return arr


@dataclass(frozen=True)
class ScalarField:
    """Real-valued map h: R^dim -> R with optional exact gradient"""

    dim: int
    eval: Callable[[np.ndarray], float]
    grad: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = 'h'

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValidationError(f"ScalarField dimension must be a positive integer, got {self.dim}")

    def __call__(self, x) -> float:
        return float(self.eval(as_state(x, self.dim)))

    def gradient_at(self, x) -> Optional[np.ndarray]:
        if self.grad is None:
            return None
        g = np.asarray(self.grad(as_state(x, self.dim)), dtype=float).reshape(-1)
        if g.shape[0] != self.dim:
            raise DimensionError(f"gradient of {self.name} has length {g.shape[0]}, expected {self.dim}")
        return g


@dataclass(frozen=True)
class VectorField:
    """Tangent-vector map f: R^dim -> R^dim with optional exact Jacobian"""

    dim: int
    eval: Callable[[np.ndarray], np.ndarray]
    jac: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = 'f'

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValidationError(f"VectorField dimension must be a positive integer, got {self.dim}")

    def __call__(self, x) -> np.ndarray:
        value = np.asarray(self.eval(as_state(x, self.dim)), dtype=float).reshape(-1)
        if value.shape[0] != self.dim:
            raise DimensionError(f"{self.name} returned length {value.shape[0]}, expected {self.dim}")
        return value

    def jacobian_at(self, x) -> Optional[np.ndarray]:
        if self.jac is None:
            return None
        J = np.atleast_2d(np.asarray(self.jac(as_state(x, self.dim)), dtype=float))
        if J.shape != (self.dim, self.dim):
            raise DimensionError(f"Jacobian of {self.name} has shape {J.shape}, expected {(self.dim, self.dim)}")
        return J

    # Linear combinations keep exact Jacobians when both operands carry one

    def __add__(self, other: 'VectorField') -> 'VectorField':
        _check_same_dim(self, other)
        jac = None
        if self.jac is not None and other.jac is not None:
            jac = lambda x: self.jacobian_at(x) + other.jacobian_at(x)
        return VectorField(self.dim, lambda x: self(x) + other(x), jac, f"({self.name}+{other.name})")

    def __mul__(self, scale: float) -> 'VectorField':
        a = float(scale)
        jac = None if self.jac is None else (lambda x: a * self.jacobian_at(x))
        return VectorField(self.dim, lambda x: a * self(x), jac, f"{a:g}*{self.name}")

    __rmul__ = __mul__

    def __neg__(self) -> 'VectorField':
        return self * -1.0

    def __sub__(self, other: 'VectorField') -> 'VectorField':
        return self + (-other)


def _check_same_dim(*fields) -> None:
    dims = {fld.dim for fld in fields}
    if len(dims) != 1:
        names = ', '.join(f"{fld.name}:{fld.dim}" for fld in fields)
        raise DimensionError(f"Field dimensions disagree ({names})")


# =============================================================================
# Field constructors
# =============================================================================

def linear_field(A, name: str = 'Ax') -> VectorField:
    """f(x) = Ax with exact Jacobian A"""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.shape[0] != A.shape[1]:
        raise DimensionError(f"linear field needs a square matrix, got {A.shape}")
    return VectorField(A.shape[0], lambda x: A @ x, lambda x: A, name)


def constant_field(c, name: str = 'c') -> VectorField:
    c = np.asarray(c, dtype=float).reshape(-1)
    zero = np.zeros((c.shape[0], c.shape[0]))
    return VectorField(c.shape[0], lambda x: c, lambda x: zero, name)


def zero_field(dim: int) -> VectorField:
    return constant_field(np.zeros(dim), name='0')


def linear_scalar(c, name: str = 'cx') -> ScalarField:
    """h(x) = c.x with exact gradient c"""
    c = np.asarray(c, dtype=float).reshape(-1)
    return ScalarField(c.shape[0], lambda x: float(c @ x), lambda x: c, name)


def coordinate(index: int, dim: int) -> ScalarField:
    """h(x) = x_index (zero-based)"""
    e = np.zeros(dim)
    e[index] = 1.0
    return linear_scalar(e, name=f"x{index + 1}")


# =============================================================================
# Finite differences
# =============================================================================

def _directional(func: Callable[[np.ndarray], Union[float, np.ndarray]], x: np.ndarray,
                 v: np.ndarray, cfg: DiffConfig):
    """Derivative of func at x along v, with the spatial stencil width equal to cfg.step"""
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        return np.zeros_like(np.asarray(func(x), dtype=float))
    eps = cfg.step / norm
    if cfg.scheme == DiffScheme.FORWARD:
        return (np.asarray(func(x + eps * v)) - np.asarray(func(x))) / eps
    return (np.asarray(func(x + eps * v)) - np.asarray(func(x - eps * v))) / (2.0 * eps)


def jacobian(f: VectorField, x, cfg: Optional[DiffConfig] = None) -> np.ndarray:
    """Exact Jacobian when provided, else the finite-difference one"""
    cfg = cfg or DiffConfig()
    x = as_state(x, f.dim)
    exact = f.jacobian_at(x)
    if exact is not None:
        return exact

    J = np.empty((f.dim, f.dim))
    h = cfg.step
    for j in range(f.dim):
        e = np.zeros(f.dim)
        e[j] = h
        if cfg.scheme == DiffScheme.FORWARD:
            J[:, j] = (f(x + e) - f(x)) / h
        else:
            J[:, j] = (f(x + e) - f(x - e)) / (2.0 * h)
    return J


def gradient(h: ScalarField, x, cfg: Optional[DiffConfig] = None) -> np.ndarray:
    cfg = cfg or DiffConfig()
    x = as_state(x, h.dim)
    exact = h.gradient_at(x)
    if exact is not None:
        return exact

    g = np.empty(h.dim)
    step = cfg.step
    for j in range(h.dim):
        e = np.zeros(h.dim)
        e[j] = step
        if cfg.scheme == DiffScheme.FORWARD:
            g[j] = (h(x + e) - h(x)) / step
        else:
            g[j] = (h(x + e) - h(x - e)) / (2.0 * step)
    return g


def jacobian_mismatch(f: VectorField, x, cfg: Optional[DiffConfig] = None) -> float:
    """Largest entrywise gap between the supplied Jacobian and finite differences"""
    if f.jac is None:
        raise ValidationError(f"{f.name} has no exact Jacobian to compare")
    bare = VectorField(f.dim, f.eval, None, f.name)
    return float(np.max(np.abs(jacobian(f, x, cfg) - jacobian(bare, x, cfg))))


# =============================================================================
# Lie derivatives
# =============================================================================

def _lie_step(h: ScalarField, f: VectorField, x: np.ndarray, cfg: DiffConfig) -> float:
    v = f(x)
    grad = h.gradient_at(x)
    if grad is not None:
        return float(grad @ v)
    return float(_directional(h, x, v, cfg))


def lie_derivative(h: ScalarField, f: VectorField, x, cfg: Optional[DiffConfig] = None) -> float:
    """L_f h(x) = grad h(x) . f(x)"""
    cfg = cfg or DiffConfig()
    _check_same_dim(h, f)
    return _lie_step(h, f, as_state(x, f.dim), cfg)


def lie_derivative_field(h: ScalarField, f: VectorField, cfg: Optional[DiffConfig] = None) -> ScalarField:
    """L_f h as a ScalarField for further differentiation"""
    cfg = cfg or DiffConfig()
    _check_same_dim(h, f)
    return ScalarField(h.dim, lambda x: _lie_step(h, f, x, cfg), None, f"L_{f.name}({h.name})")


def lie_chain_field(h: ScalarField, fields: Sequence[VectorField],
                    cfg: Optional[DiffConfig] = None) -> ScalarField:
    """L_{fields[-1]} ... L_{fields[0]} h; every layer uses the step for the total depth"""
    cfg = cfg or DiffConfig()
    depth = len(fields)
    if depth > Config.LIE_DEPTH_CAP:
        raise DepthError(f"Lie derivative depth {depth} exceeds cap {Config.LIE_DEPTH_CAP}")
    _check_same_dim(h, *fields)
    level_cfg = cfg.at_level(depth)
    current = h
    for f in fields:
        current = lie_derivative_field(current, f, level_cfg)
    return current


def lie_derivative_chain(h: ScalarField, fields: Sequence[VectorField], x,
                         cfg: Optional[DiffConfig] = None) -> float:
    return lie_chain_field(h, fields, cfg)(x)


def lie_derivative_iterated(h: ScalarField, f: VectorField, k: int, x,
                            cfg: Optional[DiffConfig] = None) -> float:
    """L_f^k h(x); k = 0 gives h(x)"""
    if k < 0 or int(k) != k:
        raise ValidationError(f"Iteration count must be a non-negative integer, got {k}")
    _check_same_dim(h, f)
    if k == 0:
        return h(x)
    return lie_derivative_chain(h, [f] * int(k), x, cfg)


def lie_derivative_mixed(h: ScalarField, f: VectorField, g: VectorField, x,
                         cfg: Optional[DiffConfig] = None) -> float:
    """L_g L_f h(x) = grad(L_f h)(x) . g(x)"""
    return lie_derivative_chain(h, [f, g], x, cfg)


# =============================================================================
# Lie brackets
# =============================================================================

def _bracket_value(f: VectorField, g: VectorField, x: np.ndarray, cfg: DiffConfig) -> np.ndarray:
    fx = f(x)
    gx = g(x)
    Jg = g.jacobian_at(x)
    Jf = f.jacobian_at(x)
    dg_along_f = Jg @ fx if Jg is not None else _directional(g, x, fx, cfg)
    df_along_g = Jf @ gx if Jf is not None else _directional(f, x, gx, cfg)
    return dg_along_f - df_along_g


def lie_bracket(f: VectorField, g: VectorField, x, cfg: Optional[DiffConfig] = None) -> np.ndarray:
    """[f, g](x) = grad g(x) f(x) - grad f(x) g(x)"""
    cfg = cfg or DiffConfig()
    _check_same_dim(f, g)
    return _bracket_value(f, g, as_state(x, f.dim), cfg)


def bracket_field(f: VectorField, g: VectorField, cfg: Optional[DiffConfig] = None) -> VectorField:
    """[f, g] as a VectorField (no exact Jacobian)"""
    cfg = cfg or DiffConfig()
    _check_same_dim(f, g)
    return VectorField(f.dim, lambda x: _bracket_value(f, g, x, cfg), None, f"[{f.name},{g.name}]")


def ad_field(f: VectorField, g: VectorField, i: int, cfg: Optional[DiffConfig] = None) -> VectorField:
    """ad_f^i g as a VectorField"""
    cfg = cfg or DiffConfig()
    if i < 0 or int(i) != i:
        raise ValidationError(f"ad order must be a non-negative integer, got {i}")
    if i > Config.LIE_DEPTH_CAP:
        raise DepthError(f"ad order {i} exceeds cap {Config.LIE_DEPTH_CAP}")
    _check_same_dim(f, g)
    level_cfg = cfg.at_level(int(i))
    current = g
    for _ in range(int(i)):
        current = bracket_field(f, current, level_cfg)
    return current


def ad_iterated(f: VectorField, g: VectorField, i: int, x, cfg: Optional[DiffConfig] = None) -> np.ndarray:
    """ad_f^0 g = g, ad_f^i g = [f, ad_f^{i-1} g]"""
    return ad_field(f, g, i, cfg)(x)
