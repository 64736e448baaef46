"""
Tests for mirror potentials and the leading-order classes theta and psi.
"""
import logging
from fractions import Fraction

import mpmath
import pytest

from src.exceptions import NotWeakFano
from src.fans import Fan
from src.lg_mirror import (
    LGPotential, ScaledCoefficient, build_potential, deformation_split, from_json, newton_polytope,
    psi_class, splitting_section, theta_class,
)
from src.testconfig import make_test_configuration
from src.toric_geom import anticanonical_divisor

# Third Hirzebruch surface: -K is not nef
F3_FAN = Fan(((1, 0), (0, 1), (-1, 3), (0, -1)), ((0, 1), (1, 2), (2, 3), (0, 3)), 2)


@pytest.mark.unit
def test_build_potential(normal_cone_tc, caplog):
    """Test one term per ray with log-coefficient minus the polarisation."""
    caplog.set_level(logging.DEBUG, logger="src.lg_mirror")

    W = build_potential(normal_cone_tc, 8)

    # Verify
    assert set(W.exponents) == {(0, 1), (0, -1), (1, 0), (-1, 0), (1, 1)}
    assert W.log_coefficient((0, 1)) == Fraction(-1, 2)
    assert W.log_coefficient((-1, 0)) == -1
    assert W.log_coefficient((1, 1)) == 0
    assert W.k == 8
    assert "Potential with 5 terms" in caplog.text


@pytest.mark.unit
def test_scaled_coefficient_ratio():
    """Test that equal exponents divide exactly."""
    a = ScaledCoefficient(Fraction(3), Fraction(1, 2), Fraction(8))
    b = ScaledCoefficient(Fraction(1), Fraction(1, 2), Fraction(8))
    c = ScaledCoefficient(Fraction(1), Fraction(0), Fraction(8))

    # Verify
    assert a / b == 3
    assert mpmath.almosteq(c / b, mpmath.exp(-8 * mpmath.pi), 1e-12)
    assert not ScaledCoefficient(Fraction(0), Fraction(1), Fraction(1))


@pytest.mark.unit
def test_theta_is_multiple_of_potential(normal_cone_tc):
    """Test theta = W/2 for a polarisation equivalent to -K/2."""
    W = build_potential(normal_cone_tc, 8)

    theta = theta_class(normal_cone_tc, W)

    # Verify
    assert set(theta.terms) == set(W.exponents)
    assert all(c.mantissa == Fraction(1, 2) for c in theta.terms.values())
    assert not theta.uncontrolled


@pytest.mark.unit
def test_psi_keeps_non_fibre_rays(normal_cone_tc, hirzebruch_tc):
    """Test that psi drops the fibre terms of W."""
    psi_nc = psi_class(normal_cone_tc, build_potential(normal_cone_tc, 8))
    psi_h = psi_class(hirzebruch_tc, build_potential(hirzebruch_tc, 8))

    # Verify
    assert set(psi_nc.terms) == {(1, 0), (-1, 0), (1, 1)}
    assert all(c.mantissa == 1 for c in psi_nc.terms.values())
    assert set(psi_h.terms) == {(1, 0), (0, 1)}


@pytest.mark.unit
def test_psi_not_weak_fano():
    """Test the warning for a total space whose anticanonical class is not nef."""
    tc = make_test_configuration(F3_FAN, (1, 0), anticanonical_divisor(F3_FAN))
    W = build_potential(tc, 1)

    with pytest.warns(NotWeakFano):
        psi = psi_class(tc, W)

    assert psi.uncontrolled
    assert psi.notes


@pytest.mark.unit
def test_deformation_split(normal_cone_tc):
    """Test the fibre part and the rest of the potential."""
    W = build_potential(normal_cone_tc, 8)

    fibre, rest = deformation_split(W, normal_cone_tc.functional)

    # Verify
    assert set(fibre.exponents) == {(0, 1), (0, -1)}
    assert set(rest.exponents) == {(1, 0), (-1, 0), (1, 1)}


@pytest.mark.unit
@pytest.mark.parametrize("functional,expected", [
    ((1, 0), (1, 0)),
    ((1, -1), (1, 0)),
    ((2, 3), (-1, 1)),
])
def test_splitting_section(functional, expected):
    """Test the base coordinate for several functionals."""
    assert splitting_section(functional) == expected


@pytest.mark.unit
def test_splitting_section_non_primitive():
    """Test that a non-primitive functional has no section."""
    with pytest.raises(ValueError):
        splitting_section((2, 4))


@pytest.mark.unit
def test_newton_polytope(normal_cone_tc):
    """Test that every exponent of the normal-cone potential is a vertex."""
    W = build_potential(normal_cone_tc, 8)

    assert len(newton_polytope(W).vertices) == 5
    with pytest.raises(ValueError):
        newton_polytope(LGPotential((), 1, 2))


@pytest.mark.unit
def test_potential_from_json():
    """Test reading a potential with mantissas from a payload."""
    # Test data
    payload = {"k": "4", "terms": [
        {"exp": [1, 0], "log_coeff": "0"},
        {"exp": [-1, 0], "log_coeff": "-1/2", "mantissa": "3"},
    ]}

    W = from_json(payload)

    # Verify
    assert W.k == 4
    assert W.dim == 2
    assert W.log_coefficient((-1, 0)) == Fraction(-1, 2)
    assert W.section()[(-1, 0)].mantissa == 3
    assert W.section()[(1, 0)].mantissa == 1
