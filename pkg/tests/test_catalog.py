import numpy as np
import pytest

from models import ValidationError
from vector_calculus import ScalarField, VectorField, jacobian_mismatch, lie_derivative
from ode_engine import SwitchingSurface
from feedback_lin import AffineSISO
from controllability_nl import ControlAffineSystem
from catalog import CATALOG, get_system, get_vector_fields, list_catalog, van_der_pol_field


KINDS = {
    'control-affine': ControlAffineSystem,
    'vector-field': VectorField,
    'affine-siso': AffineSISO,
    'switching': SwitchingSurface,
}


@pytest.mark.parametrize('name', sorted(CATALOG))
def test_entries_build_their_kind(name):
    assert isinstance(get_system(name), KINDS[CATALOG[name]['kind']])


def test_factory_parameters():
    assert get_system('car', L=2.0).params == {'L': 2.0}
    with pytest.raises(ValidationError, match="Bad parameters"):
        get_system('car', wheelbase=2.0)


def test_unknown_entry():
    with pytest.raises(ValidationError, match="Unknown catalogue entry"):
        get_system('bicycle')


def test_vector_field_labels():
    assert [label for label, _ in get_vector_fields('car')] == ['g1', 'g2']
    assert [label for label, _ in get_vector_fields('double-integrator')] == ['f', 'g1']
    assert [label for label, _ in get_vector_fields('relay')] == ['f+', 'f-']
    assert [label for label, _ in get_vector_fields('cubic')] == ['f', 'g']
    assert [label for label, _ in get_vector_fields('rotation')] == ['rotation']


@pytest.mark.parametrize('alpha', [0.1, 1.0, 5.0])
def test_van_der_pol_jacobian(alpha, rng):
    field = van_der_pol_field(alpha)
    for x in rng.normal(size=(10, 2)):
        assert jacobian_mismatch(field, x) < 1e-6 * max(1.0, alpha)


def test_listing():
    listing = list_catalog()
    assert [entry['name'] for entry in listing] == list(CATALOG)
    assert all(set(entry) == {'name', 'kind', 'description'} for entry in listing)


def test_rotation_orientation_conserves_radius(rng):
    rotation = get_system('rotation')
    assert np.allclose(rotation([1.0, 0.0]), [0.0, -1.0])
    assert np.allclose(rotation([0.0, 1.0]), [1.0, 0.0])
    radius = ScalarField(2, lambda x: x[0] ** 2 + x[1] ** 2)
    for x in rng.normal(size=(10, 2)):
        assert lie_derivative(radius, rotation, x) == pytest.approx(0.0, abs=1e-8)
