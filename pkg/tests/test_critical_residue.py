"""
Tests for critical points and Grothendieck residues.
"""
from fractions import Fraction

import mpmath
import pytest

from src import critical_residue
from src.critical_residue import (
    bkk_bound, check_stationary_phase, df_mirror_residue, euler_characteristic_rule, find_critical_points,
    grothendieck_residue, hessian_finite_difference, toric_hessian_det,
)
from src.exceptions import SolverIncomplete
from src.lg_mirror import LGPotential, build_potential

# x + 1/x
P1_POTENTIAL = LGPotential((((1,), Fraction(0)), ((-1,), Fraction(0))), 1, 1)


@pytest.mark.unit
def test_bkk_bounds(normal_cone_tc, hirzebruch_tc):
    """Test the normalized Newton volumes of the two surface potentials."""
    assert bkk_bound(build_potential(normal_cone_tc, 8)) == 5
    assert bkk_bound(build_potential(hirzebruch_tc, 8)) == 4
    assert bkk_bound(P1_POTENTIAL) == 2


@pytest.mark.unit
def test_euler_characteristic_rule(normal_cone_tc):
    """Test the sign of the Euler characteristic in dimensions one and two."""
    assert euler_characteristic_rule(P1_POTENTIAL) == -2
    assert euler_characteristic_rule(build_potential(normal_cone_tc, 8)) == 5


@pytest.mark.unit
def test_single_monomial_has_no_critical_points():
    """Test a potential whose Newton polytope is a point."""
    W = LGPotential((((1, 0), Fraction(0)),), 1, 2)

    assert bkk_bound(W) == 0
    assert find_critical_points(W) == []


@pytest.mark.numeric
def test_residues_on_p1(fast_settings):
    """Test residues of 1 and W for x + 1/x, whose toric Hessian is W itself."""
    points = find_critical_points(P1_POTENTIAL, fast_settings)

    one = grothendieck_residue(P1_POTENTIAL, [((0,), 1)], points, fast_settings)
    w = grothendieck_residue(P1_POTENTIAL, P1_POTENTIAL.numeric_terms(), points, fast_settings)

    # Verify
    assert len(points) == 2
    assert abs(one) < 1e-20
    assert abs(w - 2) < 1e-20


@pytest.mark.numeric
def test_solver_reports_missing_points(fast_settings):
    """Test that an unreachable expected count raises with the partial result."""
    with pytest.raises(SolverIncomplete) as exc_info:
        find_critical_points(P1_POTENTIAL, fast_settings, expected=3)

    assert len(exc_info.value.partial) == 2


@pytest.mark.numeric
def test_toric_hessian_matches_finite_differences(normal_cone_tc):
    """Test the analytic toric Hessian against central differences."""
    W = build_potential(normal_cone_tc, 1)

    with mpmath.workprec(160):
        terms = W.numeric_terms()
        u = [mpmath.mpc('0.1', '0.2'), mpmath.mpc('-0.3', '0.05')]
        exact = toric_hessian_det(terms, u)
        approx = hessian_finite_difference(terms, u)

        # Verify
        assert abs(exact - approx) < mpmath.mpf(10) ** -20 * abs(exact)


@pytest.mark.slow
@pytest.mark.numeric
def test_critical_points_of_normal_cone(normal_cone_tc, fast_settings):
    """Test the critical point count and condition (M) for the normal cone."""
    W = build_potential(normal_cone_tc, 8)

    points = find_critical_points(W, fast_settings)
    check = check_stationary_phase(W, points)

    # Verify
    assert len(points) == 5
    assert not any(p.degenerate for p in points)
    assert check["holds"]
    assert check["source"] == 'newton-polytope'


@pytest.mark.slow
@pytest.mark.numeric
def test_stationary_phase_with_supplied_euler_characteristic(hirzebruch_tc, fast_settings):
    """Test condition (M) against a caller-supplied Euler characteristic."""
    W = build_potential(hirzebruch_tc, 8)
    points = find_critical_points(W, fast_settings)

    assert check_stationary_phase(W, points, compactification_euler=4)["holds"]
    assert not check_stationary_phase(W, points, compactification_euler=6)["holds"]


@pytest.mark.slow
@pytest.mark.numeric
@pytest.mark.parametrize("build_name,expected", [
    ("normal_cone_tc", 0.25),
    ("hirzebruch_tc", 0.0),
])
def test_mirror_residue_matches_df(build_name, expected, fast_settings, request):
    """Test that the mirror residue reproduces DF at a large scale."""
    tc = request.getfixturevalue(build_name)

    value = df_mirror_residue(tc, 8, fast_settings)

    # Verify
    assert abs(value.real - expected) < 1e-3
    assert abs(value.imag) < 1e-3


@pytest.mark.slow
@pytest.mark.numeric
def test_residue_invariant_under_torus_rescaling(normal_cone_tc, fast_settings):
    """Test that rescaling x by (2, 3) leaves the residue of W unchanged."""
    W = build_potential(normal_cone_tc, 1)
    rescaled = W.with_mantissas([Fraction(2) ** m[0] * Fraction(3) ** m[1] for m in W.exponents])

    values = []
    for potential in (W, rescaled):
        points = find_critical_points(potential, fast_settings)
        values.append(grothendieck_residue(potential, potential.numeric_terms(), points, fast_settings))

    assert abs(values[0] - values[1]) < 1e-20


@pytest.mark.numeric
def test_every_start_is_run(mocker, fast_settings):
    """Test that the search runs all starts after the BKK count is reached and stays within it."""
    settings = fast_settings.model_copy(update={"max_starts": 40})
    newton = mocker.spy(critical_residue, '_newton')

    points = find_critical_points(P1_POTENTIAL, settings)

    # Verify
    assert newton.call_count == len(critical_residue._starts(P1_POTENTIAL, settings)) == 40
    assert len(points) == bkk_bound(P1_POTENTIAL) == 2
    assert len({(round(float(p.log_coords[0].imag), 6)) for p in points}) == 2
