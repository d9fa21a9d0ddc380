#!/usr/bin/env python3
"""
liectl - Data Models and Validation
Shared data models, error hierarchy and validation for the numerical toolkit
"""

import json
from abc import ABC, abstractmethod
from dataclasses import dataclass, field, asdict, replace
from enum import Enum
from typing import Dict, List, Any, Optional, Tuple

import numpy as np

from config import Config


class ValidationError(Exception):
    """Custom exception for validation errors"""
    pass


class DimensionError(ValidationError):
    """Vector or matrix dimensions disagree"""
    pass


class DepthError(ValidationError):
    """Requested nesting depth exceeds the configured cap"""
    pass


class MultipleRootsError(ValidationError):
    """A phase function has more than one root in its window"""
    pass


class NumericalError(Exception):
    """Base class for failures of the computation itself"""
    pass


class DivergenceError(NumericalError):
    """State became non-finite or left the divergence bound"""

    def __init__(self, message: str, time: Optional[float] = None):
        super().__init__(message)
        self.time = time


class SingularMatrixError(NumericalError):
    """A matrix that must be inverted is singular"""
    pass


class UncontrollableError(NumericalError):
    """Gramian singular or too badly conditioned to invert"""
    pass


class ConvergenceError(NumericalError):
    """An iterative solver did not converge"""
    pass


class SingularityError(NumericalError):
    """Control law denominator vanished at a state"""

    def __init__(self, message: str, state: Optional[np.ndarray] = None):
        super().__init__(message)
        self.state = None if state is None else np.array(state, dtype=float)


class SlidingError(NumericalError):
    """Sliding direction undefined on a switching surface"""
    pass


class RelativeDegreeError(NumericalError):
    """Relative degree undefined at the operating point"""
    pass


class DomainError(NumericalError):
    """State left the domain where a field is defined"""
    pass


class NotEquilibriumError(NumericalError):
    """Point is not an equilibrium of the field"""
    pass


class UnboundedDecayError(NumericalError):
    """Trajectory hit exactly zero so the decay rate is unbounded"""
    pass


class DiffScheme(Enum):
    """Finite-difference schemes"""
    CENTRAL = "central"
    FORWARD = "forward"


class IntegrationScheme(Enum):
    """Fixed-step integration schemes"""
    RK4 = "rk4"
    EULER = "euler"


class Classification(Enum):
    """Equilibrium classification outcomes"""
    ASYMPTOTICALLY_STABLE = "asymptotically-stable"
    UNSTABLE = "unstable"
    INCONCLUSIVE = "inconclusive"


class TaskMode(Enum):
    """Manual tracking task modes"""
    COMPENSATORY = "compensatory"
    PURSUIT = "pursuit"


def _jsonable(value: Any) -> Any:
    """Convert numpy and complex values into JSON-friendly structures"""
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, complex):
        return {'re': value.real, 'im': value.imag}
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.complexfloating):
        return {'re': float(value.real), 'im': float(value.imag)}
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


# Base Model Class
@dataclass
class BaseModel(ABC):
    """Base model class with common functionality"""

    def __post_init__(self):
        """Post-initialization validation"""
        self.validate()

    @abstractmethod
    def validate(self) -> None:
        """Validate model data - must be implemented by subclasses"""
        pass

    def to_dict(self) -> Dict[str, Any]:
        """Convert model to dictionary"""
        return _jsonable(asdict(self))

    def to_json(self) -> str:
        """Convert model to JSON string"""
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'BaseModel':
        """Create model instance from dictionary"""
        return cls(**data)


# =============================================================================
# Numeric configuration records
# =============================================================================

@dataclass
class DiffConfig(BaseModel):
    """Finite-difference settings for Lie calculus"""

    step: float = Config.DIFF_STEP
    scheme: DiffScheme = DiffScheme.CENTRAL

    def validate(self) -> None:
        errors = []
        if isinstance(self.scheme, str):
            try:
                self.scheme = DiffScheme(self.scheme)
            except ValueError:
                errors.append(f"Unknown difference scheme: {self.scheme}")
        if not np.isfinite(self.step) or self.step <= 0:
            errors.append("Difference step must be positive")
        if errors:
            raise ValidationError(f"DiffConfig validation errors: {'; '.join(errors)}")

    def at_level(self, level: int) -> 'DiffConfig':
        """Step to use when `level` finite differences are nested"""
        if level <= 1:
            return self
        floor = Config.NESTED_STEP_LEVEL2 if level == 2 else Config.NESTED_STEP_DEEP
        return replace(self, step=max(self.step, floor))


@dataclass
class IntegratorConfig(BaseModel):
    """Fixed-step integrator settings"""

    dt: float = Config.DEFAULT_DT
    scheme: IntegrationScheme = IntegrationScheme.RK4

    def validate(self) -> None:
        errors = []
        if isinstance(self.scheme, str):
            try:
                self.scheme = IntegrationScheme(self.scheme)
            except ValueError:
                errors.append(f"Unknown integration scheme: {self.scheme}")
        if not np.isfinite(self.dt) or self.dt <= 0:
            errors.append("dt must be positive")
        if errors:
            raise ValidationError(f"IntegratorConfig validation errors: {'; '.join(errors)}")


# =============================================================================
# Trajectories
# =============================================================================

def _as_samples(values: Any, n_samples: Optional[int]) -> np.ndarray:
    if values is None:
        return np.zeros((n_samples or 0, 0))
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    return arr


@dataclass
class Trajectory(BaseModel):
    """Uniformly sampled time series of states, outputs and inputs"""

    t0: float = 0.0
    dt: float = 1.0
    states: Any = None
    outputs: Any = None
    inputs: Any = None
    events: List[Tuple[float, str]] = field(default_factory=list)
    seed: Optional[int] = None
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.states = _as_samples(self.states, 0)
        n_samples = self.states.shape[0]
        self.outputs = _as_samples(self.outputs, n_samples)
        self.inputs = _as_samples(self.inputs, n_samples)
        super().__post_init__()

    def validate(self) -> None:
        errors = []
        if not np.isfinite(self.dt) or self.dt <= 0:
            errors.append("dt must be positive")
        n_samples = self.states.shape[0]
        if self.outputs.shape[0] != n_samples:
            errors.append(f"outputs have {self.outputs.shape[0]} samples, states have {n_samples}")
        if self.inputs.shape[0] != n_samples:
            errors.append(f"inputs have {self.inputs.shape[0]} samples, states have {n_samples}")
        if errors:
            raise ValidationError(f"Trajectory validation errors: {'; '.join(errors)}")

    @property
    def n_samples(self) -> int:
        return self.states.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_samples)

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1].copy()

    @property
    def duration(self) -> float:
        return self.dt * max(self.n_samples - 1, 0)

    def columns(self) -> List[str]:
        """CSV header: t, x1..xn, y1..yk, u1..um"""
        cols = ['t']
        cols += [f"x{i + 1}" for i in range(self.states.shape[1])]
        cols += [f"y{i + 1}" for i in range(self.outputs.shape[1])]
        cols += [f"u{i + 1}" for i in range(self.inputs.shape[1])]
        return cols

    def to_rows(self) -> List[List[float]]:
        data = np.column_stack([self.times, self.states, self.outputs, self.inputs])
        return data.tolist()

    def event_rows(self) -> List[List[Any]]:
        return [[t, label] for t, label in self.events]

    def with_outputs(self, outputs: Any, inputs: Any = None) -> 'Trajectory':
        """Copy with replaced output (and optionally input) channels"""
        return Trajectory(t0=self.t0, dt=self.dt, states=self.states,
                          outputs=outputs,
                          inputs=self.inputs if inputs is None else inputs,
                          events=list(self.events), seed=self.seed, meta=dict(self.meta))


# =============================================================================
# Linear state-space models
# =============================================================================

@dataclass
class StateSpaceModel(BaseModel):
    """Constant-coefficient model x' = Ax + Bu, y = Cx + Du"""

    A: Any = None
    B: Any = None
    C: Any = None
    D: Any = None

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        n = self.A.shape[0]
        self.B = np.zeros((n, 0)) if self.B is None else np.atleast_2d(np.asarray(self.B, dtype=float))
        self.C = np.zeros((0, n)) if self.C is None else np.atleast_2d(np.asarray(self.C, dtype=float))
        if self.D is None:
            self.D = np.zeros((self.C.shape[0], self.B.shape[1]))
        else:
            self.D = np.atleast_2d(np.asarray(self.D, dtype=float))
        super().__post_init__()

    def validate(self) -> None:
        errors = []
        n = self.A.shape[0]
        if self.A.shape != (n, n):
            errors.append(f"A must be square, got {self.A.shape}")
        if self.B.shape[0] != n:
            errors.append(f"B must have {n} rows, got {self.B.shape}")
        if self.C.shape[1] != n:
            errors.append(f"C must have {n} columns, got {self.C.shape}")
        if self.D.shape != (self.C.shape[0], self.B.shape[1]):
            errors.append(f"D must be {self.C.shape[0]}x{self.B.shape[1]}, got {self.D.shape}")
        for name in ('A', 'B', 'C', 'D'):
            if not np.all(np.isfinite(getattr(self, name))):
                errors.append(f"{name} has non-finite entries")
        if errors:
            raise ValidationError(f"StateSpaceModel validation errors: {'; '.join(errors)}")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def k(self) -> int:
        return self.C.shape[0]

    def to_dict(self) -> Dict[str, Any]:
        return {name: getattr(self, name).tolist() for name in ('A', 'B', 'C', 'D')}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'StateSpaceModel':
        if not isinstance(data, dict) or 'A' not in data:
            raise ValidationError("Model document must be an object with at least an 'A' entry")
        unknown = set(data) - {'A', 'B', 'C', 'D'}
        if unknown:
            raise ValidationError(f"Unknown model keys: {sorted(unknown)}")
        try:
            return cls(**{key: data.get(key) for key in ('A', 'B', 'C', 'D')})
        except (TypeError, ValueError) as e:
            raise ValidationError(f"Malformed model document: {e}")


@dataclass
class FrequencyResponse(BaseModel):
    """Complex gain matrices G(iw) sampled on a frequency list"""

    frequencies: Any = None
    values: List[np.ndarray] = field(default_factory=list)
    resonances: List[float] = field(default_factory=list)

    def __post_init__(self):
        self.frequencies = np.asarray(self.frequencies if self.frequencies is not None else [], dtype=float)
        super().__post_init__()

    def validate(self) -> None:
        if len(self.frequencies) != len(self.values):
            raise ValidationError(
                f"FrequencyResponse validation errors: {len(self.frequencies)} frequencies "
                f"but {len(self.values)} values")

    def to_rows(self, out_index: int = 0, in_index: int = 0) -> List[List[float]]:
        """omega, re, im, mag, phase rows for one input/output pair"""
        rows = []
        for omega, G in zip(self.frequencies, self.values):
            g = complex(G[out_index, in_index])
            rows.append([float(omega), g.real, g.imag, abs(g), float(np.angle(g))])
        return rows
