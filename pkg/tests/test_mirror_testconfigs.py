"""
Tests for dual test configurations and the Hamiltonian prescription.
"""
from dataclasses import replace
from fractions import Fraction

import mpmath
import pytest

from src.boundary_residue import build_compactification, default_grouping, residue_decomposition
from src.exceptions import InvalidParameter, ZeroWeight
from src.lattice_core import pairing, unimodular_equivalent
from src.lg_mirror import build_potential, splitting_section
from src.mirror_testconfigs import (
    HamiltonianPrescription, assemble_theorem1, build_duals, distinguished_divisor, lift_vector_field,
    orbifold_dual_report, orbifold_polytopes, partition_check, prescribed_targets, prescription_for_dual,
    prescription_terms, rank_inequality_check, solve_hamiltonians,
)
from src.testconfig import df_twisted, slope_constant
from src.toric_geom import hamiltonian_value
from src.utils import to_mpc, to_mpf

TEST_K = 8


def _near(x, y, tol=1e-9):
    return abs(to_mpc(x) - to_mpc(y)) < tol


def _value(formatted):
    """Scalar back from its report form."""
    if isinstance(formatted, dict):
        return mpmath.mpc(formatted["re"], formatted["im"])
    return Fraction(formatted)


def _duals(tc, comp):
    grouping = default_grouping(tc, comp)
    report = residue_decomposition(tc, TEST_K, comp, grouping)
    return build_duals(comp, grouping, splitting_section(tc.functional)), report


@pytest.fixture(scope="module")
def normal_cone_duals(normal_cone_tc, normal_cone_comp):
    """Duals of the normal-cone example with the residue report they are read against."""
    return _duals(normal_cone_tc, normal_cone_comp)


@pytest.fixture(scope="module")
def hirzebruch_duals(hirzebruch_tc, hirzebruch_comp):
    return _duals(hirzebruch_tc, hirzebruch_comp)


@pytest.mark.unit
def test_partition(normal_cone_comp, normal_cone_duals, normal_cone_example):
    """Test that the distinguished sets split the fixed points into the two groups."""
    duals, _ = normal_cone_duals

    check = partition_check(normal_cone_comp, duals)

    # Verify
    assert check["holds"]
    assert [len(d.distinguished) for d in duals] == [4, 3]
    for dual, group in zip(duals, normal_cone_example.groups):
        assert {normal_cone_example.label_of(k) for k in dual.distinguished_keys} == set(group)


@pytest.mark.unit
def test_duals_are_fibred_over_p1(normal_cone_duals):
    """Test the completed fans and their orientation."""
    duals, _ = normal_cone_duals

    # Verify
    assert all(d.total_fan.is_smooth() and d.total_fan.is_complete() for d in duals)
    assert duals[0].functional == (1, 0)
    assert duals[1].functional == (-1, 0)


@pytest.mark.unit
def test_distinguished_divisors_and_ranks(normal_cone_duals):
    """Test the divisor with psi~ = 1 and the rank inequality on each dual."""
    duals, report = normal_cone_duals

    divisors = [distinguished_divisor(d, report) for d in duals]
    ranks = [rank_inequality_check(d, D) for d, D in zip(duals, divisors)]

    # Verify
    assert divisors == [(1, 0), (-1, 0)]
    assert [r["comparison"] for r in ranks] == ["9 > 6", "7 > 4"]
    assert [r["bound_comparison"] for r in ranks] == ["7 > 6", "6 > 4"]
    assert all(r["holds"] for r in ranks)


@pytest.mark.unit
def test_hirzebruch_divisors_and_ranks(hirzebruch_duals, hirzebruch_example):
    """Test the rank inequality on both duals of the Hirzebruch example."""
    duals, report = hirzebruch_duals

    divisors = [distinguished_divisor(d, report) for d in duals]
    ranks = [rank_inequality_check(d, D) for d, D in zip(duals, divisors)]

    # Verify
    for dual, D in zip(duals, divisors):
        on_d = {hirzebruch_example.label_of(k) for k in dual.distinguished_keys if D in k}
        assert len(on_d) == 2
        assert on_d <= set(hirzebruch_example.psi_one)
    assert [(r["h11"], r["d_perp"], r["z"], r["f_d"]) for r in ranks] == [(4, 3, 4, 2)] * 2
    assert [r["comparison"] for r in ranks] == ["9 > 6", "9 > 6"]
    assert [r["bound_comparison"] for r in ranks] == ["7 > 6", "7 > 6"]


@pytest.mark.unit
def test_lift_vector_field(normal_cone_duals):
    """Test that the base weight pairs to one with the functional and the rest lies in the fibre."""
    duals, _ = normal_cone_duals
    dual = duals[0]
    a, b = Fraction(1, 5), Fraction(2, 7)

    v = lift_vector_field(dual, (a,), b)

    # Verify
    assert pairing(dual.functional, v) == b
    s = splitting_section(dual.functional)
    assert tuple(x - b * y for x, y in zip(v, s)) == tuple(a * y for y in dual.fiber_basis[0])
    with pytest.raises(InvalidParameter):
        lift_vector_field(dual, (a, a), b)


@pytest.mark.unit
def test_computed_prescription(normal_cone_tc, normal_cone_comp, normal_cone_example):
    """Test d and t from the weights of v against their closed forms, and H, K built from them."""
    dual, _, targets = prescription_for_dual(normal_cone_tc, TEST_K, normal_cone_example.table_v,
                                             comp=normal_cone_comp)

    # Verify
    assert dual.index == 0
    assert not targets.notes
    for label, row in normal_cone_example.table.items():
        key = normal_cone_example.key(label)
        d, t = targets.d[key], targets.t[key]
        assert t == row["t"]
        assert _near(to_mpc(d) ** 2, row["e"])
        assert _near(targets.H[key], to_mpc(d) / 2)
        shift = 0 if label in normal_cone_example.psi_one else d
        assert _near(targets.K[key], -to_mpc(t) - to_mpc(shift))
    # a square Euler class keeps d exact
    assert targets.d[normal_cone_example.key("p4'")] == Fraction(1, 6)
    assert _near(targets.H[normal_cone_example.key("p4'")], Fraction(1, 12))
    assert _near(targets.K[normal_cone_example.key("p4'")], Fraction(2, 3))


@pytest.mark.unit
def test_prescribed_summands_match_residue_terms(normal_cone_tc, normal_cone_comp, normal_cone_example):
    """Test that Hamiltonians equal to the targets give the residue term at every point."""
    dual, report, targets = prescription_for_dual(normal_cone_tc, TEST_K, normal_cone_example.table_v,
                                                  comp=normal_cone_comp)
    c = slope_constant(normal_cone_tc.fiber_fan, normal_cone_tc.fiber_polarisation)

    terms = prescription_terms(dual, targets, c)

    # Verify
    assert set(terms) == set(dual.distinguished_keys)
    for key, term in terms.items():
        assert _near(term, report.row_for(key).term)
    assert _near(sum(to_mpc(x) for x in terms.values()), report.group_totals[dual.index])


@pytest.mark.unit
def test_prescription_zero_weight(normal_cone_duals):
    """Test that equal fibre and base weights fix the exceptional curve pointwise."""
    duals, report = normal_cone_duals
    third = Fraction(1, 3)

    with pytest.raises(ZeroWeight):
        prescribed_targets(duals[0], report, lift_vector_field(duals[0], (third,), third))


@pytest.mark.unit
def test_prescription_outside_distinguished_set(normal_cone_duals):
    """Test zero targets at central points outside the distinguished set."""
    duals, report = normal_cone_duals
    dual = duals[1]

    targets = prescribed_targets(dual, report, (1, 2))

    # Verify
    others = [k for k in targets.H if k not in set(dual.distinguished_keys)]
    assert all(targets.H[k] == 0 and targets.K[k] == 0 for k in others)
    assert set(targets.d) == set(dual.distinguished_keys)


@pytest.mark.unit
def test_prescription_for_missing_dual(normal_cone_tc, normal_cone_comp):
    """Test that a dual index beyond the grouping is rejected."""
    with pytest.raises(InvalidParameter):
        prescription_for_dual(normal_cone_tc, TEST_K, (1, 2), 2, comp=normal_cone_comp)


@pytest.mark.unit
def test_solve_needs_targets(normal_cone_duals):
    """Test that the solver needs targets or a builder."""
    duals, _ = normal_cone_duals

    with pytest.raises(ValueError):
        solve_hamiltonians(duals[0])


@pytest.mark.numeric
def test_solve_at_tabulated_vector(normal_cone_tc, normal_cone_comp, normal_cone_example, fast_settings):
    """Test that the solved classes meet the targets and give the group total."""
    dual, report, targets = prescription_for_dual(normal_cone_tc, TEST_K, normal_cone_example.table_v,
                                                  comp=normal_cone_comp)
    distinguished_divisor(dual, report)
    c = slope_constant(normal_cone_tc.fiber_fan, normal_cone_tc.fiber_polarisation)

    solution = solve_hamiltonians(dual, targets, settings=fast_settings)

    # Verify
    assert solution.residual <= 1e-9
    assert solution.v == normal_cone_example.table_v
    assert "xi - D does not restrict trivially to D" in solution.notes
    with mpmath.workprec(fast_settings.precision_bits):
        v = tuple(to_mpf(x) for x in solution.v)
        for p in dual.central:
            key = frozenset(p.rays)
            assert _near(hamiltonian_value(solution.eta, p, v), -to_mpc(targets.H[key]))
            assert _near(hamiltonian_value(solution.xi, p, v), -to_mpc(targets.K[key]))
        value = df_twisted(dual, solution.eta, solution.xi, v, c_vee=to_mpf(c))
    assert _near(value, report.group_totals[dual.index])


@pytest.mark.numeric
def test_zero_targets_without_divisor(normal_cone_duals, fast_settings):
    """Test that zero targets are met by zero classes once xi carries no divisor."""
    duals, _ = normal_cone_duals
    dual = replace(duals[1], divisor_ray=None)
    keys = [frozenset(p.rays) for p in dual.central]
    targets = HamiltonianPrescription((1, 2), {k: 0 for k in keys}, {k: 0 for k in keys})

    solution = solve_hamiltonians(dual, targets, settings=fast_settings)

    # Verify
    assert solution.residual <= 1e-9
    assert all(abs(x) < 1e-20 for x in solution.eta.coeffs)
    assert all(abs(x) < 1e-20 for x in solution.xi.coeffs)
    assert not solution.notes


@pytest.mark.unit
def test_orbifold_report():
    """Test the combinatorial summary of the four orbifold duals."""
    report = orbifold_dual_report()

    # Verify
    assert set(report) == {"Q1", "Q2", "Q3", "Q4"}
    assert report["Q1"]["class_group_rank"] == report["Q2"]["class_group_rank"]
    assert report["Q3"]["facets"] == report["Q4"]["facets"]


@pytest.mark.slow
def test_orbifold_pairs_are_equivalent():
    """Test that swapping the first two coordinates identifies Q1 with Q2 and Q3 with Q4."""
    Q = orbifold_polytopes()

    # Verify
    assert unimodular_equivalent(Q["Q1"].vertices, Q["Q2"].vertices)
    assert unimodular_equivalent(Q["Q3"].vertices, Q["Q4"].vertices)


def _check_assembly(result, df, group_totals):
    rows = result["duals"]
    assert result["df"] == df
    assert result["partition"]["holds"]
    assert len(rows) == len(group_totals)
    for row, expected in zip(rows, group_totals):
        assert _value(row["residual"]) <= 1e-9
        assert _near(_value(row["df"]), _value(row["group_total"]), 1e-6)
        assert _near(_value(row["group_total"]), expected, 1e-3)
    total = _value(result["sum_duals"])
    defect = _value(result["base_locus"])
    assert _near(to_mpc(total) + to_mpc(defect), Fraction(df), 1e-9)
    assert _near(defect, Fraction(df) - sum(_value(row["group_total"]) for row in rows), 1e-6)


@pytest.mark.slow
@pytest.mark.numeric
@pytest.mark.parametrize("k", [8, 16])
def test_assemble_normal_cone(k, normal_cone_tc, fast_settings):
    """Test that the twisted dual invariants match the group totals and add up to DF with the base-locus term."""
    comp = build_compactification(build_potential(normal_cone_tc, k))

    result = assemble_theorem1(normal_cone_tc, k, comp=comp, settings=fast_settings)

    # Verify
    _check_assembly(result, "1/4", (Fraction(0), Fraction(1, 4)))
    assert [row["divisor"] for row in result["duals"]] == [[1, 0], [-1, 0]]
    assert [row["rank_inequality"]["bound_comparison"] for row in result["duals"]] == ["7 > 6", "6 > 4"]


@pytest.mark.slow
@pytest.mark.numeric
@pytest.mark.parametrize("k", [8, 16])
def test_assemble_hirzebruch(k, hirzebruch_tc, fast_settings):
    """Test that both twisted dual invariants of the product configuration vanish with the group totals."""
    comp = build_compactification(build_potential(hirzebruch_tc, k))

    result = assemble_theorem1(hirzebruch_tc, k, comp=comp, settings=fast_settings)

    # Verify
    _check_assembly(result, "0", (Fraction(0), Fraction(0)))
    assert [row["rank_inequality"]["comparison"] for row in result["duals"]] == ["9 > 6", "9 > 6"]
