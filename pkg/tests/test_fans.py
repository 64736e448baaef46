"""
Tests for fans, subdivisions and projections to P^1.
"""
import pytest

from src.catalogue import BLOWUP_P2_FAN, P_POLYGON
from src.exceptions import ConeNotInFan, InvalidParameter, NonCompactifiableGroup, NotAFibration
from src.fans import (
    P1_FAN, Fan, auto_grouping, classify_projection, face_fan, fibre_fan, normal_fan, product_with_p1,
    star_subdivide, subfan_split,
)
from src.polytopes import TRIANGLE, convex_hull

P2_FAN = Fan(((1, 0), (0, 1), (-1, -1)), ((0, 1), (1, 2), (0, 2)), 2)


def _cone_keys(fan):
    return {fan.cone_key(c) for c in fan.max_cones}


@pytest.mark.unit
def test_fan_validation():
    """Test that non-primitive rays are rejected."""
    with pytest.raises(ValueError):
        Fan(((2, 0), (0, 1)), ((0, 1),), 2)


@pytest.mark.unit
def test_normal_fan_of_triangle():
    """Test that the triangle gives the fan of P^2."""
    F = normal_fan(convex_hull(TRIANGLE))

    # Verify
    assert set(F.rays) == set(P2_FAN.rays)
    assert _cone_keys(F) == _cone_keys(P2_FAN)
    assert F.is_smooth() and F.is_complete()


@pytest.mark.unit
def test_face_fan_of_polygon():
    """Test that the face fan of the polygon is Bl_p P^2."""
    F = face_fan(convex_hull(P_POLYGON))

    # Verify
    assert F.rays == BLOWUP_P2_FAN.rays
    assert _cone_keys(F) == _cone_keys(BLOWUP_P2_FAN)
    assert F.is_smooth() and F.is_complete()


@pytest.mark.unit
def test_star_subdivide():
    """Test blowing up a fixed point of P^2."""
    F = star_subdivide(P2_FAN, (0, 1))

    # Verify
    assert F.rays[-1] == (1, 1)
    assert len(F.max_cones) == 4
    assert F.is_smooth() and F.is_complete()
    assert _cone_keys(F) == _cone_keys(BLOWUP_P2_FAN)


@pytest.mark.unit
def test_star_subdivide_ray_and_missing_cone():
    """Test the trivial and the invalid subdivision."""
    assert star_subdivide(P2_FAN, (1,)) is P2_FAN
    with pytest.raises(ConeNotInFan):
        star_subdivide(P2_FAN, (0, 1, 2))


@pytest.mark.unit
def test_incomplete_fan():
    """Test completeness with a missing cone."""
    F = Fan(P2_FAN.rays, P2_FAN.max_cones[:2], 2)

    assert not F.is_complete()


@pytest.mark.unit
def test_classify_projection():
    """Test the ray classification of the Hirzebruch projection."""
    proj = classify_projection(BLOWUP_P2_FAN, (1, -1))

    # Verify
    assert proj.fiber_rays() == [1, 3]
    assert proj.rays_over_zero() == [0]
    assert proj.rays_over_infinity() == [2]
    assert proj.multiplicity(0) == 1


@pytest.mark.unit
def test_projection_failures():
    """Test a cone mapping onto the whole line and the zero functional."""
    with pytest.raises(NotAFibration):
        classify_projection(BLOWUP_P2_FAN, (1, 0))
    with pytest.raises(InvalidParameter):
        classify_projection(BLOWUP_P2_FAN, (0, 0))


@pytest.mark.unit
def test_fibre_fan():
    """Test that the fibre of the Hirzebruch projection is P^1."""
    fibre, basis = fibre_fan(BLOWUP_P2_FAN, (1, -1))

    # Verify
    assert fibre.ambient_dim == 1
    assert set(fibre.rays) == {(1,), (-1,)}
    assert len(basis) == 1
    assert basis[0][0] == basis[0][1]


@pytest.mark.unit
def test_product_with_p1():
    """Test the product P^1 x P^1."""
    F = product_with_p1(P1_FAN)

    # Verify
    assert F.ambient_dim == 2
    assert len(F.rays) == 4 and len(F.max_cones) == 4
    assert F.is_smooth() and F.is_complete()
    assert classify_projection(F, (1, 0)).fiber_rays() == [0, 1]


@pytest.mark.unit
def test_auto_grouping_rejects_straddling_cone():
    """Test a section whose hyperplane cuts a cone."""
    with pytest.raises(NonCompactifiableGroup):
        auto_grouping(BLOWUP_P2_FAN, (1, -2))


@pytest.mark.unit
def test_subfan_split_of_whole_fan():
    """Test that a single group holding every cone is the fan itself."""
    groups = subfan_split(BLOWUP_P2_FAN, [[0, 1, 2, 3]], (1, -1))

    assert groups == [BLOWUP_P2_FAN]


@pytest.mark.unit
def test_subfan_split_halves():
    """Test completing the two halves of P^1 x P^1."""
    F = product_with_p1(P1_FAN)
    section = (0, 1)

    groups = auto_grouping(F, section)
    completed = subfan_split(F, groups, section)

    # Verify
    assert len(completed) == 2
    assert all(G.is_smooth() and G.is_complete() for G in completed)
