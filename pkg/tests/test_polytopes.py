"""
Tests for lattice polytopes.
"""
from fractions import Fraction

import pytest

from src.catalogue import P_POLYGON, P_POLYGON_DUAL, THREEFOLD_DUAL_VERTICES, THREEFOLD_VERTICES
from src.exceptions import NotAnEdge, OriginNotInterior
from src.polytopes import (
    HEXAGON, TRIANGLE, convex_hull, delzant_container, dilate, edge_lattice_restriction, euclidean_volume,
    interior_points, is_delzant, is_reflexive, lattice_points, normalized_volume, polar_dual,
    polytope_from_inequalities,
)


@pytest.mark.unit
def test_convex_hull_drops_interior_points():
    """Test that only vertices survive the hull."""
    P = convex_hull(list(P_POLYGON) + [(0, 0)])

    # Verify
    assert set(P.vertices) == set(P_POLYGON)
    assert len(P.facets) == 4
    assert P.is_lattice


@pytest.mark.unit
def test_polygon_duality():
    """Test the polar dual and the double dual of the polygon."""
    P = convex_hull(P_POLYGON)

    dual = polar_dual(P)

    # Verify
    assert set(dual.vertices) == set(P_POLYGON_DUAL)
    assert set(polar_dual(dual).vertices) == set(P_POLYGON)
    assert is_reflexive(P) and is_reflexive(dual)


@pytest.mark.unit
def test_volumes_of_reflexive_pair():
    """Test that the normalized volumes of a reflexive polygon and its dual add to 12."""
    P = convex_hull(P_POLYGON)
    dual = polar_dual(P)

    # Verify
    assert normalized_volume(P) == 4
    assert normalized_volume(dual) == 8
    assert euclidean_volume(P) == 2


@pytest.mark.unit
def test_lattice_points():
    """Test lattice points and interior points of the polygon."""
    P = convex_hull(P_POLYGON)

    # Verify
    assert lattice_points(P) == [(-1, -1), (0, 0), (0, 1), (1, 0), (1, 1)]
    assert interior_points(P) == [(0, 0)]


@pytest.mark.unit
def test_polar_dual_needs_interior_origin():
    """Test that a simplex at the origin has no polar dual."""
    with pytest.raises(OriginNotInterior):
        polar_dual(convex_hull([(0, 0), (1, 0), (0, 1)]))


@pytest.mark.unit
def test_rational_dual():
    """Test that the dual of a non-reflexive polygon has rational vertices."""
    P = convex_hull([(2, 0), (0, 2), (-2, 0), (0, -2)])

    dual = polar_dual(P)

    # Verify
    assert not is_reflexive(P)
    assert not dual.is_lattice
    assert (Fraction(1, 2), Fraction(1, 2)) in dual.vertices


@pytest.mark.unit
def test_lower_dimensional_hull():
    """Test a segment in the plane."""
    S = convex_hull([(0, 0), (1, 1), (2, 2)])

    # Verify
    assert S.dim == 1
    assert set(S.vertices) == {(0, 0), (2, 2)}
    assert S.contains((1, 1))
    assert not S.contains((1, 0))
    assert normalized_volume(S) == 0


@pytest.mark.unit
def test_polytope_from_inequalities():
    """Test vertex enumeration of the P^2 triangle."""
    P = polytope_from_inequalities([(1, 0), (0, 1), (-1, -1)], [1, 1, 1])

    # Verify
    assert set(P.vertices) == set(TRIANGLE)
    assert normalized_volume(dilate(P, 2)) == 4 * normalized_volume(P)


@pytest.mark.unit
def test_delzant():
    """Test the Delzant condition."""
    assert is_delzant(convex_hull(HEXAGON))
    assert not is_delzant(convex_hull(P_POLYGON))


@pytest.mark.unit
def test_delzant_container():
    """Test that the container is Delzant and holds every point."""
    # Test data
    points = [(0, 0), (1, 0), (0, 1), (-1, -1), (1, 1)]

    Q = delzant_container(points)

    # Verify
    assert is_delzant(Q)
    assert all(Q.contains(p) for p in points)


@pytest.mark.unit
def test_edge_restriction():
    """Test restriction of a section to an edge of a square."""
    # Test data
    P = convex_hull([(0, 0), (2, 0), (0, 2), (2, 2)])
    section = {(0, 0): 'a', (1, 0): 'b', (2, 0): 'c', (1, 1): 'd'}

    # Verify
    assert edge_lattice_restriction(P, section, ((0, 0), (2, 0))) == {0: 'a', 1: 'b', 2: 'c'}
    assert edge_lattice_restriction(P, section, ((0, 0), (2, 0)), start=(2, 0)) == {0: 'c', 1: 'b', 2: 'a'}


@pytest.mark.unit
def test_edge_restriction_rejects_diagonal():
    """Test that a diagonal is not an edge."""
    P = convex_hull([(0, 0), (2, 0), (0, 2), (2, 2)])

    with pytest.raises(NotAnEdge):
        edge_lattice_restriction(P, {}, ((0, 0), (2, 2)))


@pytest.mark.slow
def test_threefold_dual():
    """Test the polar dual of the threefold ray polytope."""
    dual = polar_dual(convex_hull(THREEFOLD_VERTICES))

    # Verify
    assert set(dual.vertices) == set(THREEFOLD_DUAL_VERTICES)
    assert (2, -1, 0) not in dual.vertices
    assert dual.contains((2, -1, 0))
