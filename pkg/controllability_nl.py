#!/usr/bin/env python3
"""
liectl - Nonlinear Controllability
Lie-bracket trees and rank tests, the drift criterion, car and unicycle kinematics,
commutator and parking maneuvers and the bracket-flow limit.
"""

import math
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Any, Optional, Sequence, Tuple

import numpy as np

from config import Config
from models import (BaseModel, DiffConfig, IntegratorConfig, ValidationError,
                    DepthError, DimensionError, DomainError)
from vector_calculus import VectorField, as_state, bracket_field, ad_field, zero_field
from ode_engine import integrate
from linear_ss import numeric_rank

logger = logging.getLogger('liectl.controllability_nl')


@dataclass(frozen=True)
class ControlAffineSystem:
    """x' = f(x) + sum_k u_k g_k(x); driftless when f is None"""

    g_list: Tuple[VectorField, ...]
    f: Optional[VectorField] = None
    name: str = 'system'
    params: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, 'g_list', tuple(self.g_list))
        if not self.g_list:
            raise ValidationError(f"{self.name}: at least one input field is required")
        dims = {g.dim for g in self.g_list}
        if self.f is not None:
            dims.add(self.f.dim)
        if len(dims) != 1:
            raise DimensionError(f"{self.name}: fields disagree on dimension ({sorted(dims)})")

    @property
    def dim(self) -> int:
        return self.g_list[0].dim

    @property
    def m(self) -> int:
        return len(self.g_list)

    @property
    def driftless(self) -> bool:
        return self.f is None

    def generators(self) -> List[Tuple[str, VectorField]]:
        """Labelled generator set; the drift comes first when present"""
        gens = [] if self.f is None else [('f', self.f)]
        gens += [(f"g{k + 1}", g) for k, g in enumerate(self.g_list)]
        return gens

    def rhs(self, u: Sequence[float]) -> Callable[[float, np.ndarray], np.ndarray]:
        u = np.asarray(u, dtype=float).reshape(-1)
        if u.shape[0] != self.m:
            raise DimensionError(f"{self.name} takes {self.m} inputs, got {u.shape[0]}")

        def rhs(t: float, x: np.ndarray) -> np.ndarray:
            dx = np.zeros(self.dim) if self.f is None else self.f(x)
            for uk, g in zip(u, self.g_list):
                if uk != 0.0:
                    dx = dx + uk * g(x)
            return dx
        return rhs


@dataclass(frozen=True)
class BracketNode:
    label: str
    depth: int
    field: VectorField

    def value_at(self, x) -> np.ndarray:
        return self.field(x)


# =============================================================================
# Bracket trees and rank tests
# =============================================================================

def bracket_nodes(sys: ControlAffineSystem, depth_max: int,
                  cfg: Optional[DiffConfig] = None) -> List[BracketNode]:
    """Generators, then [a, b] for a before b, then [X, g] for X one level down"""
    if depth_max > Config.BRACKET_DEPTH_CAP:
        raise DepthError(f"Bracket depth {depth_max} exceeds cap {Config.BRACKET_DEPTH_CAP}")
    if depth_max < 0:
        raise ValidationError("Bracket depth must be non-negative")
    cfg = cfg or DiffConfig()

    gens = sys.generators()
    nodes = [BracketNode(label, 0, fld) for label, fld in gens]
    if depth_max >= 1:
        level = []
        for i in range(len(gens)):
            for j in range(i + 1, len(gens)):
                label = f"[{gens[i][0]},{gens[j][0]}]"
                level.append(BracketNode(label, 1, bracket_field(gens[i][1], gens[j][1], cfg)))
        nodes += level
        for depth in range(2, depth_max + 1):
            level_cfg = cfg.at_level(depth)
            level = [BracketNode(f"[{node.label},{label}]", depth,
                                 bracket_field(node.field, fld, level_cfg))
                     for node in level for label, fld in gens]
            nodes += level
    return nodes


def bracket_tree(sys: ControlAffineSystem, depth_max: int, x,
                 cfg: Optional[DiffConfig] = None) -> List[Dict[str, Any]]:
    """Bracket values at x, in enumeration order"""
    x = as_state(x, sys.dim)
    return [{'label': node.label, 'depth': node.depth, 'value': node.value_at(x)}
            for node in bracket_nodes(sys, depth_max, cfg)]


def stlc_rank(sys: ControlAffineSystem, x, depth_max: int = 2,
              cfg: Optional[DiffConfig] = None) -> Dict[str, Any]:
    """Rank of the bracket-tree columns at x"""
    tree = bracket_tree(sys, depth_max, x, cfg)
    M = np.column_stack([entry['value'] for entry in tree])
    rank = numeric_rank(M, Config.BRACKET_RANK_RTOL)
    return {'rank': rank, 'controllable': rank == sys.dim, 'columns': len(tree)}


def drift_controllability(sys: ControlAffineSystem, x, cfg: Optional[DiffConfig] = None) -> Dict[str, Any]:
    """Rank of {g, ad_f g, ..., ad_f^{n-1} g} at x for a single input field"""
    if sys.m != 1:
        raise ValidationError("The drift criterion needs exactly one input field")
    n = sys.dim
    if n - 1 > Config.LIE_DEPTH_CAP:
        raise DepthError(f"Dimension {n} needs ad order {n - 1}, above cap {Config.LIE_DEPTH_CAP}")
    x = as_state(x, n)
    f = sys.f if sys.f is not None else zero_field(n)
    g = sys.g_list[0]
    M = np.column_stack([ad_field(f, g, i, cfg)(x) for i in range(n)])
    rank = numeric_rank(M, Config.BRACKET_RANK_RTOL)
    return {'rank': rank, 'controllable': rank == n}


# =============================================================================
# Example systems
# =============================================================================

PHI_GUARD = math.pi / 2 - 1e-6


def _check_steering(phi: float) -> None:
    if abs(phi) >= PHI_GUARD:
        raise DomainError(f"Steering angle {phi:.6g} is at the tan singularity (|phi| >= pi/2)")


def car_system(L: float = 1.0) -> ControlAffineSystem:
    """Kinematic car in (x, y, theta, phi): drive = (cos th, sin th, tan phi / L, 0), steer = e4"""
    if not L > 0:
        raise ValidationError("Wheelbase L must be positive")

    def drive(x: np.ndarray) -> np.ndarray:
        _check_steering(x[3])
        return np.array([math.cos(x[2]), math.sin(x[2]), math.tan(x[3]) / L, 0.0])

    def drive_jac(x: np.ndarray) -> np.ndarray:
        _check_steering(x[3])
        J = np.zeros((4, 4))
        J[0, 2] = -math.sin(x[2])
        J[1, 2] = math.cos(x[2])
        J[2, 3] = 1.0 / (L * math.cos(x[3]) ** 2)
        return J

    steer = VectorField(4, lambda x: np.array([0.0, 0.0, 0.0, 1.0]), lambda x: np.zeros((4, 4)), 'steer')
    return ControlAffineSystem((VectorField(4, drive, drive_jac, 'drive'), steer), name=f"car(L={L:g})",
                               params={'L': float(L)})


def rotate(x, L: float = 1.0) -> np.ndarray:
    """[steer, drive] = (1 / (L cos^2 phi)) d/dtheta"""
    x = as_state(x, 4)
    _check_steering(x[3])
    return np.array([0.0, 0.0, 1.0 / (L * math.cos(x[3]) ** 2), 0.0])


def slide(x, L: float = 1.0) -> np.ndarray:
    """[drive, rotate] = (1 / (L cos^2 phi)) (sin th d/dx - cos th d/dy)"""
    x = as_state(x, 4)
    _check_steering(x[3])
    scale = 1.0 / (L * math.cos(x[3]) ** 2)
    return np.array([scale * math.sin(x[2]), -scale * math.cos(x[2]), 0.0, 0.0])


def unicycle_system() -> ControlAffineSystem:
    """g1 = (cos x3, sin x3, 0), g2 = (0, 0, 1)"""
    g1 = VectorField(3, lambda x: np.array([math.cos(x[2]), math.sin(x[2]), 0.0]),
                     lambda x: np.array([[0.0, 0.0, -math.sin(x[2])],
                                         [0.0, 0.0, math.cos(x[2])],
                                         [0.0, 0.0, 0.0]]), 'forward')
    g2 = VectorField(3, lambda x: np.array([0.0, 0.0, 1.0]), lambda x: np.zeros((3, 3)), 'turn')
    return ControlAffineSystem((g1, g2), name='unicycle')


def unicycle_bracket(x) -> np.ndarray:
    """[g1, g2] = (sin x3, -cos x3, 0)"""
    x = as_state(x, 3)
    return np.array([math.sin(x[2]), -math.cos(x[2]), 0.0])


# =============================================================================
# Maneuvers
# =============================================================================

@dataclass
class Maneuver(BaseModel):
    """Piecewise-constant input schedule"""

    segments: List[Tuple[List[float], float]] = field(default_factory=list)
    eps: float = 0.0
    labels: List[str] = field(default_factory=list)

    def validate(self) -> None:
        self.segments = [([float(v) for v in u], float(d)) for u, d in self.segments]
        errors = []
        if any(d < 0 or not np.isfinite(d) for _, d in self.segments):
            errors.append("segment durations must be non-negative")
        if len({len(u) for u, _ in self.segments}) > 1:
            errors.append("all segments must have the same input dimension")
        if errors:
            raise ValidationError(f"Maneuver validation errors: {'; '.join(errors)}")

    @property
    def duration(self) -> float:
        return sum(d for _, d in self.segments)

    def reversed_signs(self) -> 'Maneuver':
        return Maneuver(segments=[([-v for v in u], d) for u, d in self.segments], eps=self.eps,
                        labels=[label[:-3] if label.endswith('^-1') else label + '^-1'
                                for label in self.labels])

    def to_rows(self) -> List[List[Any]]:
        """segment, u1..um, duration"""
        return [[k + 1] + list(u) + [d] for k, (u, d) in enumerate(self.segments)]

    def columns(self) -> List[str]:
        m = len(self.segments[0][0]) if self.segments else 0
        return ['segment'] + [f"u{k + 1}" for k in range(m)] + ['duration']


@dataclass
class ManeuverExecution:
    """End state and the state after every segment"""

    final_state: np.ndarray
    waypoints: np.ndarray

    def displacement(self) -> np.ndarray:
        return self.final_state - self.waypoints[0]


def execute_maneuver(sys: ControlAffineSystem, maneuver: Maneuver, x0, dt: float = 1e-3) -> ManeuverExecution:
    """Integrate each segment in turn with RK4"""
    x = as_state(x0, sys.dim, 'x0').copy()
    waypoints = [x.copy()]
    for u, duration in maneuver.segments:
        if duration > 0:
            x = integrate(sys.rhs(u), x, 0.0, duration, IntegratorConfig(dt=dt)).final_state
        waypoints.append(x.copy())
    return ManeuverExecution(final_state=x, waypoints=np.array(waypoints))


def _unit(m: int, k: int, sign: float = 1.0) -> List[float]:
    u = [0.0] * m
    u[k] = sign
    return u


def commutator_maneuver(sys: ControlAffineSystem, i: int, j: int, eps: float) -> Maneuver:
    """e_i, e_j, -e_i, -e_j for eps each: net motion eps^2 [g_i, g_j] + O(eps^3)"""
    if not eps > 0:
        raise ValidationError("eps must be positive")
    if i == j:
        raise ValidationError("Commutator needs two different inputs")
    for k in (i, j):
        if not 0 <= k < sys.m:
            raise ValidationError(f"Input index {k} out of range for {sys.m} inputs")
    m = sys.m
    return Maneuver(segments=[(_unit(m, i), eps), (_unit(m, j), eps),
                              (_unit(m, i, -1.0), eps), (_unit(m, j, -1.0), eps)],
                    eps=eps, labels=[f"g{i + 1}", f"g{j + 1}", f"g{i + 1}^-1", f"g{j + 1}^-1"])


PARKING_ORDER = [('steer', 1.0), ('drive', 1.0), ('steer', -1.0), ('drive', 1.0),
                 ('steer', 1.0), ('drive', -1.0), ('steer', -1.0), ('drive', -1.0)]


def parking_maneuver(sys: ControlAffineSystem, eps: float, align_with_slide: bool = True,
                     x0=None) -> Maneuver:
    """Steer, drive, unsteer, drive, steer, back up, unsteer, back up; eps per segment.

    With align_with_slide the schedule is oriented so its net motion follows +slide(x0);
    the orientation is decided by executing the schedule once from x0 (origin by default).
    """
    if eps < 0:
        raise ValidationError("eps must be non-negative")
    if sys.m != 2 or sys.dim != 4:
        raise ValidationError("The parking maneuver needs the 4-state, 2-input car")
    index = {'drive': 0, 'steer': 1}
    segments = [(_unit(2, index[name], sign), eps) for name, sign in PARKING_ORDER]
    labels = [name if sign > 0 else f"{name}^-1" for name, sign in PARKING_ORDER]
    maneuver = Maneuver(segments=segments, eps=eps, labels=labels)

    if align_with_slide and eps > 0:
        x0 = np.zeros(4) if x0 is None else as_state(x0, 4, 'x0')
        moved = execute_maneuver(sys, maneuver, x0, dt=eps / 50.0).displacement()
        L = sys.params.get('L', 1.0)
        if float(moved @ slide(x0, L)) < 0:
            maneuver = maneuver.reversed_signs()
    return maneuver


def bracket_flow_limit(sys: ControlAffineSystem, i: int, j: int, t: float, n_compositions: int,
                       x0, dt: Optional[float] = None) -> np.ndarray:
    """n-fold composition of the flows of g_i, g_j, -g_i, -g_j for sqrt(t / n) each"""
    if n_compositions < 1:
        raise ValidationError("n_compositions must be at least 1")
    if t < 0:
        raise ValidationError("t must be non-negative")
    x = as_state(x0, sys.dim, 'x0').copy()
    if t == 0:
        return x
    h = math.sqrt(t / n_compositions)
    step = dt if dt is not None else h / 20.0
    block = commutator_maneuver(sys, i, j, h)
    for _ in range(n_compositions):
        x = execute_maneuver(sys, block, x, dt=step).final_state
    return x
