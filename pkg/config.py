#!/usr/bin/env python3
"""
liectl - Configuration and Benchmarks
Numerical defaults, environment settings and the named benchmark presets used by the CLI
"""

import os
import json
from typing import Dict, List, Any, Optional


class Config:
    """System configuration settings"""

    # Finite differences
    DIFF_STEP = 1e-5
    NESTED_STEP_LEVEL2 = 1e-4
    NESTED_STEP_DEEP = 1e-3  # nesting level >= 3
    LIE_DEPTH_CAP = 4
    BRACKET_DEPTH_CAP = 3
    IDENTITY_TOL = 1e-4

    # Rank and conditioning
    RANK_RTOL = 1e-12
    BRACKET_RANK_RTOL = 1e-7  # columns carry finite-difference noise
    GRAMIAN_STEPS = 200
    GRAMIAN_COND_MAX = 1e12
    RESONANCE_COND_MAX = 1e14

    # Stability diagnostics
    EQUILIBRIUM_TOL = 1e-8
    EIGEN_ZERO_TOL = 1e-8
    DECAY_TAIL_FRACTION = 0.5

    # Integration
    DEFAULT_DT = 1e-3
    DIVERGENCE_BOUND = 1e6
    SLIDING_BAND = 1e-6

    # Feedback linearization and adaptation
    DECOUPLING_THRESHOLD = 1e-8
    STAR_RADIUS = 1e-3
    STAR_THRESHOLD = 1e-6
    DELTA_MIN = 1e-3

    # Harmonic balance
    BALANCE_TOL = 1e-10
    BALANCE_MAX_ITER = 200

    # Artifacts
    CSV_DIGITS = 17
    OUTPUT_DIR = os.getenv('LIECTL_OUTPUT_DIR', 'output')

    # Parallelism
    THREADS = max(1, int(os.getenv('LIECTL_THREADS', str(os.cpu_count() or 1))))

    # Logging Configuration
    LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO')
    LOG_FILE = os.getenv('LIECTL_LOG_FILE', 'liectl.log')
    MAX_LOG_SIZE = 10 * 1024 * 1024  # 10MB
    LOG_BACKUP_COUNT = 5

    VERSION = '1.0.0'


class Benchmarks:
    """Named run presets; CLI flags and run documents override these values"""

    LINEAR = {
        'name': 'Double integrator',
        'description': 'Rest-to-rest transfer and rank test on x1\' = x2, x2\' = u',
        'model': {'A': [[0.0, 1.0], [0.0, 0.0]], 'B': [[0.0], [1.0]],
                  'C': [[1.0, 0.0]], 'D': [[0.0]]},
        'x0': [0.0, 0.0],
        'xT': [1.0, 0.0],
        'T': 1.0,
        'dt': 1e-3,
        'u': [1.0],
        'omega': [0.1, 1.0, 10.0],
        'K': [[1.0]],
    }

    VDP = {
        'name': 'Van der Pol limit cycle',
        'description': 'Harmonic balance prediction against simulated amplitude and period',
        'alpha': 0.1,
        'x0': [0.5, 0.0],
        'T': 400.0,
        'dt': 0.01,
        'A0': 1.5,
        'omega0': 0.8,
    }

    CROSSOVER = {
        'name': 'Crossover operator',
        'description': 'Compensatory step tracking with a gain-K integrator and dead time',
        'K': 1.0,
        'tau': 0.2,
        'T_L': 0.0,
        'T_I': 0.0,
        'T_N': 0.0,
        'alpha_drop': 0.0,
        'task': {'mode': 'compensatory', 'forcing': 'step', 'T': 20.0, 'dt': 0.01},
        'omega': [0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0],
        'weights': {'q': [1.0], 'r': [0.0], 'g': [0.0]},
    }

    LANGEVIN = {
        'name': 'Langevin kick ensemble',
        'description': 'Poisson shot-noise kicks; checks <v^2> = Q/(2 gamma m)',
        'gamma': 1.0,
        'm': 1.0,
        'Q': 2.0,
        't0': 0.1,
        'T': 8.0,
        'dt': 0.01,
        'runs': 10000,
        't_start': 4.0,
        'max_lag': 100,
    }

    ADAPTIVE_SCALAR = {
        'name': 'Scalar adaptive tracking',
        'description': 'x\' = gamma x + d u, y = x, tracking sin t from wrong estimates',
        'gamma_true': -1.0,
        'd_true': 2.0,
        'gamma_hat0': 0.0,
        'd_hat0': 1.0,
        'alpha': 2.0,
        'update_gain': 4.0,
        'x0': 0.0,
        'T': 40.0,
        'dt': 2e-3,
    }

    FEEDBACKLIN_CUBIC = {
        'name': 'Cubic benchmark',
        'description': 'x1\' = x2, x2\' = -x1^3 + u, y = x1 linearized to y\'\' + 2y\' + y = v',
        'system': 'cubic',
        'beta': [2.0, 1.0],
        'x0': [1.0, 0.0],
        'v': 0.0,
        'T': 10.0,
        'dt': 1e-3,
    }

    BRACKET = {
        'name': 'Bracket tree rank',
        'description': 'Lie bracket tree of a catalogue system evaluated at a state',
        'system': 'car',
        'depth': 2,
        'at': [0.0, 0.0, 0.0, 0.0],
        'eps': 0.05,
        'dt': 1e-3,
    }

    SLIDING = {
        'name': 'Relay sliding',
        'description': 'x\' = -sign(x) reaching and holding the switching surface',
        'system': 'relay',
        'x0': [1.0],
        'T': 2.0,
        'dt': 1e-3,
        'band': Config.SLIDING_BAND,
    }

    TRACER = {
        'name': 'Tracer plots',
        'description': 'Phase-plane data with time for the damped spring and Van der Pol',
        'system': 'spring',
        'k': 0.2,
        'alpha': 1.0,
        'x0': [1.0, 0.0],
        'T': 30.0,
        'dt': 0.01,
    }


def get_benchmark(name: str) -> Dict[str, Any]:
    """Get a copy of the preset for a subcommand"""
    presets = {
        'linear': Benchmarks.LINEAR,
        'vdp': Benchmarks.VDP,
        'operator': Benchmarks.CROSSOVER,
        'langevin': Benchmarks.LANGEVIN,
        'adaptive': Benchmarks.ADAPTIVE_SCALAR,
        'feedbacklin': Benchmarks.FEEDBACKLIN_CUBIC,
        'bracket': Benchmarks.BRACKET,
        'sliding': Benchmarks.SLIDING,
        'tracer': Benchmarks.TRACER,
    }
    if name not in presets:
        from models import ValidationError
        raise ValidationError(f"Unknown benchmark: {name}")
    return json.loads(json.dumps(presets[name]))


def list_benchmarks() -> List[Dict[str, str]]:
    """Name and description of every preset"""
    names = ['linear', 'vdp', 'operator', 'langevin', 'adaptive',
             'feedbacklin', 'bracket', 'sliding', 'tracer']
    return [{'command': n, 'name': get_benchmark(n)['name'],
             'description': get_benchmark(n)['description']} for n in names]


def load_run_config(path: Optional[str]) -> Dict[str, Any]:
    """Read one JSON run document; an absent path gives an empty document"""
    from models import ValidationError

    if not path:
        return {}
    if not os.path.exists(path):
        raise ValidationError(f"Config file not found: {path}")
    try:
        with open(path, 'r', encoding='utf-8') as f:
            document = json.load(f)
    except json.JSONDecodeError as e:
        raise ValidationError(f"Malformed JSON in {path}: {e}")
    if not isinstance(document, dict):
        raise ValidationError(f"Run document in {path} must be a JSON object")
    return document


def merge_params(preset: Dict[str, Any], document: Dict[str, Any],
                 overrides: Dict[str, Any]) -> Dict[str, Any]:
    """Preset < run document < command-line flags; None flags are ignored"""
    params = dict(preset)
    params.update(document.get('params', document))
    params.update({k: v for k, v in overrides.items() if v is not None})
    return params


# Module test function
def main():
    """Show configuration and benchmark presets"""
    print("liectl Configuration")
    print(f"Difference step: {Config.DIFF_STEP}")
    print(f"Lie depth cap: {Config.LIE_DEPTH_CAP}")
    print(f"Worker threads: {Config.THREADS}")

    print("\nBenchmarks:")
    for entry in list_benchmarks():
        print(f"- {entry['command']}: {entry['name']} ({entry['description']})")


if __name__ == "__main__":
    main()
