"""
Tests for the input schemas.
"""
from fractions import Fraction

import pytest
from pydantic import ValidationError

from src.testconfig import df_intersection
from src.validators import FanValidator, PolytopeValidator, PotentialValidator, ToricTestConfigurationValidator

P1_PAYLOAD = {"rays": [[1], [-1]], "max_cones": [[0], [1]]}


@pytest.mark.unit
def test_fan_schema():
    """Test building a fan and rejecting mixed dimensions and missing rays."""
    fan = FanValidator(**P1_PAYLOAD).build()

    # Verify
    assert fan.ambient_dim == 1
    assert fan.is_complete()
    with pytest.raises(ValidationError):
        FanValidator(rays=[[1, 0], [1]], max_cones=[[0]])
    with pytest.raises(ValidationError):
        FanValidator(rays=[[1], [-1]], max_cones=[[0], [2]])


@pytest.mark.unit
def test_polytope_schema():
    """Test rational vertices given as strings."""
    v = PolytopeValidator(vertices=[[0, 0], ["1/2", 0], [0, 1]])

    assert v.vertices[1] == [Fraction(1, 2), 0]
    with pytest.raises(ValidationError):
        PolytopeValidator(vertices=[[0, 0], ["x", 1]])


@pytest.mark.unit
def test_potential_schema():
    """Test a valid potential and the rejected variants."""
    # Test data
    terms = [{"exp": [1], "log_coeff": "-1/2"}, {"exp": [-1], "mantissa": "2"}]

    W = PotentialValidator(k=4, terms=terms).build()

    # Verify
    assert W.k == 4
    assert W.log_coefficient((1,)) == Fraction(-1, 2)
    with pytest.raises(ValidationError):
        PotentialValidator(k=0, terms=terms)
    with pytest.raises(ValidationError):
        PotentialValidator(terms=[{"exp": [1]}, {"exp": [1]}])
    with pytest.raises(ValidationError):
        PotentialValidator(terms=[{"exp": [1], "mantissa": 0}])


@pytest.mark.unit
def test_normal_cone_from_payload():
    """Test the normal-cone configuration read from its schema."""
    payload = {
        "kind": "normal_cone", "fan": P1_PAYLOAD,
        "polarisation": ["1/2", "1/2"], "center": [0], "r": "1/2",
    }

    tc = ToricTestConfigurationValidator(**payload).build()

    assert df_intersection(tc) == Fraction(1, 4)


@pytest.mark.unit
@pytest.mark.parametrize("changes", [
    {"kind": "flip"},
    {"kind": "product"},
    {"center": None},
    {"polarisation": [1]},
    {"r": -1},
])
def test_invalid_test_configuration(changes):
    """Test the rejected test configuration payloads."""
    payload = {"kind": "normal_cone", "fan": P1_PAYLOAD, "polarisation": [1, 1], "center": [0], "r": 1}
    payload.update(changes)

    with pytest.raises(ValidationError):
        ToricTestConfigurationValidator(**payload)
