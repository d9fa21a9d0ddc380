#!/usr/bin/env python3
"""
liectl - Example Catalogue
Named example systems addressable by string from the CLI and run documents
"""

import logging
from typing import Any, Dict, List, Tuple

import numpy as np

from models import ValidationError
from vector_calculus import VectorField, constant_field, coordinate, linear_field
from ode_engine import SwitchingSurface
from describing_function import vdp_rhs
from feedback_lin import cubic_system, sine_system
from controllability_nl import ControlAffineSystem, car_system, unicycle_system

logger = logging.getLogger('liectl.catalog')


def van_der_pol_field(alpha: float = 1.0) -> VectorField:
    rhs = vdp_rhs(alpha)
    jac = lambda x: np.array([[0.0, 1.0], [-2.0 * alpha * x[0] * x[1] - 1.0, -alpha * (x[0] ** 2 - 1.0)]])
    return VectorField(2, lambda x: rhs(0.0, x), jac, 'van-der-pol')


def rotation_field() -> VectorField:
    """x' = (x2, -x1)"""
    return linear_field([[0.0, 1.0], [-1.0, 0.0]], 'rotation')


def relay_surface() -> SwitchingSurface:
    """x' = -sign(x): f+ = -1 above s = x = 0, f- = +1 below"""
    return SwitchingSurface(coordinate(0, 1), constant_field([-1.0], 'down'), constant_field([1.0], 'up'))


def double_integrator_system() -> ControlAffineSystem:
    """x1' = x2, x2' = u with drift"""
    return ControlAffineSystem((constant_field([0.0, 1.0], 'b'),),
                               f=linear_field([[0.0, 1.0], [0.0, 0.0]], 'Ax'),
                               name='double-integrator')


CATALOG: Dict[str, Dict[str, Any]] = {
    'car': {
        'kind': 'control-affine',
        'description': 'Kinematic car (x, y, theta, phi) with drive and steer fields',
        'factory': car_system,
    },
    'unicycle': {
        'kind': 'control-affine',
        'description': 'Unicycle (x, y, heading) with forward and turn fields',
        'factory': unicycle_system,
    },
    'double-integrator': {
        'kind': 'control-affine',
        'description': "x1' = x2, x2' = u as a drift system",
        'factory': double_integrator_system,
    },
    'van-der-pol': {
        'kind': 'vector-field',
        'description': "x'' + alpha (x^2 - 1) x' + x = 0",
        'factory': van_der_pol_field,
    },
    'rotation': {
        'kind': 'vector-field',
        'description': 'Rigid rotation of the plane',
        'factory': rotation_field,
    },
    'cubic': {
        'kind': 'affine-siso',
        'description': "x1' = x2, x2' = -x1^3 + u, y = x1",
        'factory': cubic_system,
    },
    'sine': {
        'kind': 'affine-siso',
        'description': "x1' = x2, x2' = -sin x1 + u, y = x1",
        'factory': sine_system,
    },
    'relay': {
        'kind': 'switching',
        'description': "x' = -sign(x) across the surface x = 0",
        'factory': relay_surface,
    },
}


def get_system(name: str, **params) -> Any:
    """Build the named example; params go to its factory"""
    if name not in CATALOG:
        raise ValidationError(f"Unknown catalogue entry: {name} (known: {', '.join(sorted(CATALOG))})")
    try:
        return CATALOG[name]['factory'](**params)
    except TypeError as e:
        raise ValidationError(f"Bad parameters for {name}: {e}")


def get_vector_fields(name: str, **params) -> List[Tuple[str, VectorField]]:
    """Labelled vector fields of a catalogue entry"""
    system = get_system(name, **params)
    if isinstance(system, VectorField):
        return [(system.name, system)]
    if isinstance(system, ControlAffineSystem):
        return system.generators()
    if isinstance(system, SwitchingSurface):
        return [('f+', system.f_plus), ('f-', system.f_minus)]
    return [('f', system.f), ('g', system.g)]


def list_catalog() -> List[Dict[str, str]]:
    return [{'name': name, 'kind': entry['kind'], 'description': entry['description']}
            for name, entry in CATALOG.items()]
