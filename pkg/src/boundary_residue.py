"""
Boundary residues of the mirror potential on a toric compactification.

The compactification is the normal fan of a Delzant polytope containing
the exponents of W, star-subdivided at every fixed point where the vertex
monomial of W is missing. Fixed points created by a subdivision are
evaluated through edge limits of the container, starting at the vertex of
the removed base point.
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, FrozenSet, List, Optional, Sequence, Tuple

import mpmath

from src.exceptions import HypothesisFailed, IndeterminateRatio, NonSmoothCone, SubdivisionBudgetExceeded
from src.fans import Fan, auto_grouping, normal_fan, star_subdivide
from src.lattice_core import LatticeVector, int_determinant, pairing
from src.lg_mirror import LGPotential, build_potential, psi_class, splitting_section, theta_class
from src.polytopes import LatticePolytope, delzant_container, edge_lattice_restriction
from src.testconfig import df_intersection, slope_constant
from src.toric_geom import (
    FixedPoint, anticanonical_ratio, evaluate_section_at_fixed_point, fixed_points, ratio_at_fixed_point,
)
from src.utils import format_rational, format_scalar, is_exact, mixed_add, mixed_mul, mixed_sub, to_mpc

logger = logging.getLogger(__name__)

SUBDIVISION_BUDGET = 32
NOISE_FLOOR = mpmath.mpf('1e-20')


@dataclass(frozen=True)
class EdgeLimit:
    """Vertex of a resolved base point and the container edge leaving it."""
    origin_vertex: Tuple[Fraction, ...]
    edge: Tuple[Tuple[Fraction, ...], Tuple[Fraction, ...]]


@dataclass
class Compactification:
    container: LatticePolytope
    ambient_fan: Fan
    subdivided_at: List[Tuple[LatticeVector, ...]]
    base_points: List[Tuple[LatticeVector, ...]]
    limits: Dict[FrozenSet[LatticeVector], EdgeLimit] = field(default_factory=dict)

    def limit_for(self, p: FixedPoint) -> Optional[EdgeLimit]:
        return self.limits.get(frozenset(p.rays))

    def to_json(self) -> Dict[str, Any]:
        return {
            "container": self.container.to_json(),
            "fan": self.ambient_fan.to_json(),
            "base_points": [[list(r) for r in cone] for cone in self.base_points],
            "subdivided_at": [[list(r) for r in cone] for cone in self.subdivided_at],
            "edge_limits": [
                {"cone": sorted(list(r) for r in key),
                 "origin": [format_rational(x) for x in lim.origin_vertex],
                 "edge": [[format_rational(x) for x in v] for v in lim.edge]}
                for key, lim in sorted(self.limits.items(), key=lambda kv: sorted(kv[0]))
            ],
        }


@dataclass
class ResidueRow:
    cone_index: int
    rays: Tuple[LatticeVector, ...]
    theta: Any
    psi: Any
    omega0: int
    residues: Tuple[Fraction, ...]
    f_power: Any
    term: Any
    group: Optional[int]


@dataclass
class ResidueReport:
    k: Fraction
    rows: List[ResidueRow]
    group_totals: List[Any]
    total: Any
    df: Fraction
    notes: List[str] = field(default_factory=list)

    @property
    def boundary_remainder(self) -> Any:
        """DF minus the toric-stratum total, the measured base-locus term."""
        return mixed_sub(self.df, self.total)

    def row_for(self, rays: Sequence[Sequence[int]]) -> ResidueRow:
        key = frozenset(tuple(r) for r in rays)
        return next(row for row in self.rows if frozenset(row.rays) == key)

    def to_json(self) -> Dict[str, Any]:
        return {
            "k": format_rational(self.k),
            "rows": [{
                "cone": [list(r) for r in row.rays],
                "theta": format_scalar(row.theta),
                "psi": format_scalar(row.psi),
                "omega0": row.omega0,
                "residues": [format_rational(r) for r in row.residues],
                "f_power": format_scalar(row.f_power),
                "term": format_scalar(row.term),
                "group": row.group,
            } for row in self.rows],
            "group_totals": [format_scalar(t) for t in self.group_totals],
            "total": format_scalar(self.total),
            "df": format_rational(self.df),
            "boundary_remainder": format_scalar(self.boundary_remainder),
            "notes": list(self.notes),
        }


def _offset(P: LatticePolytope, ray: Sequence[int]) -> Fraction:
    return min(pairing(v, ray) for v in P.vertices)


def _vertex(P: LatticePolytope, rays: Sequence[Sequence[int]]) -> Tuple[Fraction, ...]:
    """Vertex of P minimising every given ray."""
    hits = [v for v in P.vertices if all(pairing(v, r) == _offset(P, r) for r in rays)]
    if len(hits) != 1:
        raise IndeterminateRatio(f"Rays {list(rays)} do not single out a vertex of the container")
    return hits[0]


def _edge(P: LatticePolytope, rays: Sequence[Sequence[int]], origin) -> Tuple:
    hits = [v for v in P.vertices if v != origin and all(pairing(v, r) == _offset(P, r) for r in rays)]
    if len(hits) != 1:
        raise IndeterminateRatio(f"Rays {list(rays)} do not cut out an edge at {origin}")
    return (origin, hits[0])


def _resolved(comp: Compactification, section: Dict, p: FixedPoint) -> bool:
    lim = comp.limit_for(p)
    if lim is None:
        return bool(evaluate_section_at_fixed_point(section, comp.container, p))
    restriction = edge_lattice_restriction(comp.container, section, lim.edge, start=lim.origin_vertex)
    return bool(restriction.get(1))


def build_compactification(W: LGPotential, budget: int = SUBDIVISION_BUDGET) -> Compactification:
    """
    Container polytope of W, its normal fan, and star subdivisions at the
    fixed points lying on V(W).

    Raises:
        SubdivisionBudgetExceeded: if more than budget subdivisions are needed
            or a subdivided point is still a base point
    """
    section = W.section()
    P = delzant_container(W.exponents)
    F = normal_fan(P)
    base = [p for p in fixed_points(F) if not evaluate_section_at_fixed_point(section, P, p)]
    base_keys = [p.rays for p in base]
    if len(base) > budget:
        raise SubdivisionBudgetExceeded(f"{len(base)} base points exceed the budget of {budget}")
    limits: Dict[FrozenSet[LatticeVector], EdgeLimit] = {}
    for p in base:
        origin = _vertex(P, p.rays)
        F = star_subdivide(F, [F.ray_index(r) for r in p.rays])
        new_ray = F.rays[-1]
        for r in p.rays:
            kept = [q for q in p.rays if q != r]
            limits[frozenset(kept + [new_ray])] = EdgeLimit(origin, _edge(P, kept, origin))
    comp = Compactification(P, F, list(base_keys), list(base_keys), limits)
    remaining = [p.rays for p in fixed_points(F) if not _resolved(comp, section, p)]
    if remaining:
        raise SubdivisionBudgetExceeded(f"Fixed points {remaining} remain on the base locus")
    logger.info(f"Compactification with {len(F.rays)} rays after {len(base)} subdivisions")
    return comp


def connection_residue(W: LGPotential, ray: Sequence[int]) -> Fraction:
    """Order of W along the divisor of a ray: min over exponents of <m, b_rho>."""
    return Fraction(min(pairing(m, ray) for m in W.exponents))


def omega0_sign(p: FixedPoint, order: Optional[Sequence[Sequence[int]]] = None) -> int:
    """
    Sign of the holomorphic volume form in the boundary chart of p.

    With an explicit generator order this is the sign of its determinant.
    In dimension two the chart lists the ray met next counter-clockwise
    first, so every smooth cone gives -1.

    Raises:
        NonSmoothCone: if the generators are not a lattice basis
    """
    rays = [tuple(r) for r in (order if order is not None else p.rays)]
    det = int_determinant(rays)
    if abs(det) != 1:
        raise NonSmoothCone(f"Cone {rays} is not smooth")
    if order is None and len(rays) == 2:
        a, b = rays if det > 0 else rays[::-1]
        return int_determinant([b, a])
    return det


def is_anticanonical_multiple(tc) -> Optional[Fraction]:
    """r with L - r(-K) principal, or None."""
    found = anticanonical_ratio(tc.polarisation)
    return None if found is None else found[0]


def residue_spectrum_check(comp: Compactification, W: LGPotential) -> Dict[str, Any]:
    """Connection residues along every boundary ray, flagging nonpositive integers."""
    residues = {r: connection_residue(W, r) for r in comp.ambient_fan.rays}
    flagged = [r for r, value in residues.items() if value.denominator == 1 and value <= 0]
    if flagged:
        logger.warning(f"{len(flagged)} boundary residues lie in the nonpositive integers")
    return {
        "residues": [{"ray": list(r), "residue": format_rational(v)} for r, v in residues.items()],
        "nonpositive_integer": [list(r) for r in flagged],
        "generic": not flagged,
    }


def default_grouping(tc, comp: Compactification) -> List[List[int]]:
    """Split the cones of the compactification by the side of the splitting section."""
    return auto_grouping(comp.ambient_fan, splitting_section(tc.functional))


def principal_root(value, degree: int):
    """Principal root, exact when value is a perfect power of a rational."""
    if is_exact(value) and value >= 0:
        value = Fraction(value)
        num = round(value.numerator ** (1.0 / degree))
        den = round(value.denominator ** (1.0 / degree))
        for a in (num - 1, num, num + 1):
            for b in (den - 1, den, den + 1):
                if a >= 0 and b > 0 and Fraction(a, b) ** degree == value:
                    return Fraction(a, b)
    return mpmath.root(to_mpc(value), degree)


def f_factor(W: LGPotential, p: FixedPoint) -> Tuple[Any, Tuple[Fraction, ...], int]:
    """(f^{n+1}, connection residues through p, Omega_0 sign)."""
    residues = tuple(connection_residue(W, r) for r in p.rays)
    sign = omega0_sign(p)
    power = Fraction(1)
    for r in residues:
        power *= r
    return power * sign * sign, residues, sign


def residue_decomposition(tc, k, comp: Optional[Compactification] = None,
                          grouping: Optional[Sequence[Sequence[int]]] = None) -> ResidueReport:
    """
    Per fixed point term (-1)^{n+1} f^{n+1} theta~^n (c' theta~ - 1 + psi~)
    with theta~, psi~ the ratios theta/W and psi/W at p, and totals per group.

    Raises:
        IndeterminateRatio: at a base point left unresolved
    """
    W = build_potential(tc, k)
    if comp is None:
        comp = build_compactification(W)
    if grouping is None:
        grouping = default_grouping(tc, comp)
    group_of = {int(i): g for g, members in enumerate(grouping) for i in members}
    theta = theta_class(tc, W)
    psi = psi_class(tc, W)
    section = W.section()
    n = tc.fiber_dim
    c_prime = slope_constant(tc.fiber_fan, tc.fiber_polarisation) * n / (n + 1)
    rows: List[ResidueRow] = []
    totals: List[Any] = [Fraction(0)] * len(grouping)
    total: Any = Fraction(0)
    for p in fixed_points(comp.ambient_fan):
        lim = comp.limit_for(p)
        edge = lim.edge if lim is not None else None
        th = ratio_at_fixed_point(theta.terms, section, comp.container, p, edge=edge)
        ps = ratio_at_fixed_point(psi.terms, section, comp.container, p, edge=edge)
        f_power, residues, sign = f_factor(W, p)
        inner = mixed_add(mixed_add(mixed_mul(c_prime, th), -1), ps)
        term = mixed_mul((-1) ** (n + 1) * f_power, mixed_mul(th ** n, inner))
        group = group_of.get(p.cone_index)
        rows.append(ResidueRow(p.cone_index, p.rays, th, ps, sign, residues, f_power, term, group))
        total = mixed_add(total, term)
        if group is not None:
            totals[group] = mixed_add(totals[group], term)
    df = df_intersection(tc)
    report = ResidueReport(Fraction(k), rows, totals, total, df, list(theta.notes) + list(psi.notes))
    logger.info(f"Residue decomposition at k = {k}: total {format_scalar(total)}, DF {format_rational(df)}")
    return report


def vanishing_check(tc, k_list: Sequence, tolerance: float = 1e-3) -> Dict[str, Any]:
    """
    |DF - toric residue total| over the given k; holds when the sequence is
    non-increasing up to the noise floor and ends below the tolerance.

    Raises:
        HypothesisFailed: if the polarisation is not a multiple of -K
    """
    r = is_anticanonical_multiple(tc)
    if r is None:
        raise HypothesisFailed("Polarisation is not linearly equivalent to a multiple of -K")
    ks = sorted(Fraction(k) for k in k_list)
    comp = build_compactification(build_potential(tc, ks[0]))
    errors = []
    for k in ks:
        report = residue_decomposition(tc, k, comp)
        errors.append(abs(to_mpc(report.boundary_remainder)))
    decreasing = all(b <= a + NOISE_FLOOR for a, b in zip(errors, errors[1:]))
    holds = decreasing and errors[-1] <= tolerance
    logger.info(f"Vanishing check with r = {format_rational(r)}: {'holds' if holds else 'fails'}")
    return {
        "r": format_rational(r),
        "k": [format_rational(k) for k in ks],
        "errors": [format_scalar(e) for e in errors],
        "non_increasing": decreasing,
        "tolerance": tolerance,
        "holds": holds,
    }
