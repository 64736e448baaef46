"""
Divisors, torus-fixed points and equivariant localisation on smooth
complete toric varieties.

Conventions: a divisor sum a_rho D_rho has polytope {<m, b_rho> >= -a_rho};
at the fixed point of a smooth cone sigma with dual basis u_i the
Hamiltonian is sum_i a_i <u_i, v> = -<m_sigma, v>, the weights are
<u_i, v>, and sum_p prod_j H_j(p) / e(p) is the intersection number
(so the integral of O(1) over P^1 is +1).
"""
import itertools
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import sympy

from src.exceptions import DegenerateVolume, IndeterminateRatio, NonSmoothCone, ZeroWeight
from src.fans import Fan
from src.lattice_core import (
    LatticeVector, int_determinant, inverse_rational, kernel_basis, pairing,
)
from src.polytopes import (
    LatticePolytope, edge_lattice_restriction, exact_point, polytope_from_inequalities,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ToricDivisor:
    """Torus-invariant Q-divisor sum a_rho D_rho on a fan."""
    fan: Fan
    coeffs: Tuple[Fraction, ...]

    def __post_init__(self):
        coeffs = tuple(Fraction(a) for a in self.coeffs)
        if len(coeffs) != len(self.fan.rays):
            raise ValueError(f"Expected {len(self.fan.rays)} coefficients, got {len(coeffs)}")
        object.__setattr__(self, 'coeffs', coeffs)

    def __add__(self, other: 'ToricDivisor') -> 'ToricDivisor':
        return ToricDivisor(self.fan, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other: 'ToricDivisor') -> 'ToricDivisor':
        return ToricDivisor(self.fan, tuple(a - b for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self) -> 'ToricDivisor':
        return ToricDivisor(self.fan, tuple(-a for a in self.coeffs))

    def scale(self, factor) -> 'ToricDivisor':
        return ToricDivisor(self.fan, tuple(Fraction(factor) * a for a in self.coeffs))

    def coefficient(self, ray: Sequence[int]) -> Fraction:
        return self.coeffs[self.fan.ray_index(ray)]

    def as_mapping(self) -> Dict[int, Fraction]:
        return {i: a for i, a in enumerate(self.coeffs) if a != 0}


@dataclass(frozen=True)
class ComplexDivisorClass:
    """Complex (1,1)-class written as sum c_rho D_rho with arbitrary scalar coefficients."""
    fan: Fan
    coeffs: Tuple[Any, ...]

    def __post_init__(self):
        if len(self.coeffs) != len(self.fan.rays):
            raise ValueError(f"Expected {len(self.fan.rays)} coefficients, got {len(self.coeffs)}")
        object.__setattr__(self, 'coeffs', tuple(self.coeffs))

    def __add__(self, other) -> 'ComplexDivisorClass':
        return ComplexDivisorClass(self.fan, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other) -> 'ComplexDivisorClass':
        return ComplexDivisorClass(self.fan, tuple(a - b for a, b in zip(self.coeffs, other.coeffs)))

    def scale(self, factor) -> 'ComplexDivisorClass':
        return ComplexDivisorClass(self.fan, tuple(factor * a for a in self.coeffs))

    def conjugate(self) -> 'ComplexDivisorClass':
        return ComplexDivisorClass(self.fan, tuple(a.conjugate() for a in self.coeffs))


DivisorLike = Union[ToricDivisor, ComplexDivisorClass]


def divisor(fan: Fan, coeffs: Mapping[int, Any]) -> ToricDivisor:
    """Divisor from a sparse ray-index -> coefficient map."""
    return ToricDivisor(fan, tuple(Fraction(coeffs.get(i, 0)) for i in range(len(fan.rays))))


def complex_class(fan: Fan, coeffs: Mapping[int, Any]) -> ComplexDivisorClass:
    return ComplexDivisorClass(fan, tuple(coeffs.get(i, 0) for i in range(len(fan.rays))))


@dataclass(frozen=True)
class FixedPoint:
    """Torus-fixed point of a smooth maximal cone with the dual basis of its generators."""
    cone_index: int
    cone: Tuple[int, ...]
    rays: Tuple[LatticeVector, ...]
    dual_basis: Tuple[LatticeVector, ...]


def fixed_point(F: Fan, cone_index: int) -> FixedPoint:
    """
    Raises:
        NonSmoothCone: if the cone is not unimodular
    """
    cone = F.max_cones[cone_index]
    rays = tuple(F.rays[i] for i in cone)
    if len(rays) != F.ambient_dim or abs(int_determinant(rays)) != 1:
        raise NonSmoothCone(f"Cone {cone} is not smooth")
    inv = inverse_rational(rays)
    dual = tuple(tuple(int(inv[k][i]) for k in range(F.ambient_dim)) for i in range(F.ambient_dim))
    return FixedPoint(cone_index, cone, rays, dual)


def fixed_points(F: Fan) -> List[FixedPoint]:
    return [fixed_point(F, i) for i in range(len(F.max_cones))]


def canonical_divisor(F: Fan) -> ToricDivisor:
    """K = -sum D_rho."""
    return ToricDivisor(F, tuple(Fraction(-1) for _ in F.rays))


def anticanonical_divisor(F: Fan) -> ToricDivisor:
    return -canonical_divisor(F)


def principal_divisor(F: Fan, m: Sequence) -> ToricDivisor:
    return ToricDivisor(F, tuple(Fraction(pairing(m, r)) for r in F.rays))


def linear_shift(D: ToricDivisor, m: Sequence) -> ToricDivisor:
    """Linearly equivalent representative D + div(chi^m)."""
    return D + principal_divisor(D.fan, m)


def hamiltonian_value(D: DivisorLike, p: FixedPoint, v: Sequence):
    """
    sum_i a_{rho_i} <u_i, v> over the generators of the fixed point's cone.

    For a real divisor this is -<m_sigma, v> with m_sigma the vertex of the
    divisor polytope at sigma; complex classes extend linearly.
    """
    total = 0
    for i, u in zip(p.cone, p.dual_basis):
        a = D.coeffs[i]
        if a:
            total += a * pairing(u, v)
    return total


def vertex_at(D: ToricDivisor, p: FixedPoint) -> Tuple[Fraction, ...]:
    """m_sigma = -sum a_i u_i."""
    n = len(p.dual_basis)
    return tuple(-sum(D.coeffs[i] * u[k] for i, u in zip(p.cone, p.dual_basis)) for k in range(n))


def equivariant_weights(F: Fan, p: FixedPoint, v: Sequence) -> List:
    """
    Raises:
        ZeroWeight: if v is orthogonal to one of the dual basis vectors
    """
    weights = [pairing(u, v) for u in p.dual_basis]
    if any(w == 0 for w in weights):
        raise ZeroWeight(f"Vector {tuple(v)} has a zero weight at cone {p.cone}")
    return weights


def euler_class(F: Fan, p: FixedPoint, v: Sequence):
    e = 1
    for w in equivariant_weights(F, p, v):
        e *= w
    return e


def equivariant_integrate(F: Fan, classes: Sequence[DivisorLike], v: Sequence):
    """
    Localisation sum over fixed points of prod_j H_j(p) / e(p).

    Exact for rational classes and independent of the generic v.

    Raises:
        ZeroWeight: for a non-generic v (callers retry with generic_vectors)
    """
    if len(classes) != F.ambient_dim:
        raise ValueError(f"Need {F.ambient_dim} classes, got {len(classes)}")
    total = 0
    for p in fixed_points(F):
        e = euler_class(F, p, v)
        num = 1
        for D in classes:
            num *= hamiltonian_value(D, p, v)
        if isinstance(num, (int, Fraction)):
            total += Fraction(num) / e
        else:
            total += num / e
    return total


BASE_SEQUENCE = (1, 2, 5, 11, 23, 47, 97, 197, 397, 797)


def generic_vectors(dim: int) -> Iterator[Tuple[int, ...]]:
    """Deterministic sequence of small vectors used to retry non-generic choices."""
    for shift in itertools.count():
        base = [BASE_SEQUENCE[(i + shift) % len(BASE_SEQUENCE)] + shift // len(BASE_SEQUENCE)
                for i in range(dim)]
        for signs in itertools.product((1, -1), repeat=dim):
            yield tuple(s * b for s, b in zip(signs, base))


def generic_vectors_on_level(functional: Sequence[int], level: int = 1) -> Iterator[Tuple[int, ...]]:
    """Generic vectors v with <functional, v> = level."""
    lam = tuple(int(x) for x in functional)
    n = len(lam)
    start = next(v for v in itertools.chain(
        (tuple(1 if i == j else 0 for i in range(n)) for j in range(n)),
        (tuple(-1 if i == j else 0 for i in range(n)) for j in range(n)),
        itertools.product(range(-3, 4), repeat=n)) if pairing(lam, v) == 1)
    B = kernel_basis([lam])
    for w in generic_vectors(n - 1):
        yield tuple(level * start[i] + sum(w[j] * int(B[i, j]) for j in range(n - 1)) for i in range(n))


def intersection_number(F: Fan, classes: Sequence[DivisorLike], attempts: int = 64):
    """equivariant_integrate with automatic retry over generic_vectors."""
    for v in itertools.islice(generic_vectors(F.ambient_dim), attempts):
        try:
            return equivariant_integrate(F, classes, v)
        except ZeroWeight:
            logger.debug(f"Vector {v} is not generic, retrying")
    raise ZeroWeight("No generic vector found")


def divisor_polytope(D: ToricDivisor) -> LatticePolytope:
    return polytope_from_inequalities(D.fan.rays, D.coeffs)


def is_nef(D: ToricDivisor) -> bool:
    """Every vertex m_sigma lies in the divisor polytope."""
    for p in fixed_points(D.fan):
        m = vertex_at(D, p)
        if any(pairing(m, r) + a < 0 for r, a in zip(D.fan.rays, D.coeffs)):
            return False
    return True


def self_intersection(D: ToricDivisor) -> Fraction:
    value = intersection_number(D.fan, [D] * D.fan.ambient_dim)
    if value == 0:
        raise DegenerateVolume("Divisor has zero top self-intersection")
    return value


def support_divisor(F: Fan, P: LatticePolytope) -> ToricDivisor:
    """Divisor whose polytope is P on a fan refining its normal fan: a_rho = -min_P <m, b_rho>."""
    return ToricDivisor(F, tuple(-min(pairing(v, r) for v in P.vertices) for r in F.rays))


def _vertex_exponent(P: LatticePolytope, p: FixedPoint) -> Tuple:
    offsets = [-min(pairing(v, r) for v in P.vertices) for r in p.rays]
    inv = inverse_rational(p.rays)
    n = len(p.rays)
    # m with <m, b_i> = -a_i
    return exact_point(sum(-offsets[i] * inv[k][i] for i in range(n)) for k in range(n))


def evaluate_section_at_fixed_point(section: Mapping, P: LatticePolytope, p: FixedPoint):
    """
    Coefficient of the vertex monomial of P at the fixed point (0 if absent).

    The fixed point lies on the zero locus of the section exactly when this
    is zero. The fan of p may refine the normal fan of P.
    """
    m = _vertex_exponent(P, p)
    coeff = section.get(tuple(m))
    return coeff if coeff is not None else Fraction(0)


def ratio_at_fixed_point(s1: Mapping, s2: Mapping, P: LatticePolytope, p: FixedPoint,
                         edge: Optional[Sequence[Sequence]] = None):
    """
    Value of s1 / s2 at a fixed point.

    When both vertex coefficients vanish (a blown-up point of the base
    locus) the ratio is the limit along the supplied edge of P, starting at
    the vertex: the ratio of the lowest-order coefficients of s2.

    Raises:
        IndeterminateRatio: if both vanish and no edge is supplied
    """
    a = evaluate_section_at_fixed_point(s1, P, p)
    b = evaluate_section_at_fixed_point(s2, P, p)
    if b:
        return Fraction(0) if not a else a / b
    if a:
        raise IndeterminateRatio(f"Denominator vanishes at cone {p.cone} but the numerator does not")
    if edge is None:
        raise IndeterminateRatio(f"Both sections vanish at cone {p.cone} and no edge was supplied")
    start = _vertex_exponent(P, p)
    r1 = edge_lattice_restriction(P, s1, edge, start=start)
    r2 = edge_lattice_restriction(P, s2, edge, start=start)
    lead = next((t for t in sorted(r2) if r2[t]), None)
    if lead is None:
        raise IndeterminateRatio(f"Denominator vanishes along the edge {edge}")
    num = r1.get(lead)
    logger.debug(f"Edge limit at cone {p.cone} taken at lattice distance {lead}")
    return Fraction(0) if not num else num / r2[lead]


def anticanonical_ratio(D: ToricDivisor) -> Optional[Tuple[Fraction, Tuple[Fraction, ...]]]:
    """
    Find r and m with D - r(-K) = div(chi^m).

    Returns:
        (r, m) or None when D is not linearly equivalent to a multiple of -K
    """
    F = D.fan
    rows = [list(r) + [1] for r in F.rays]
    A = sympy.Matrix(rows)
    b = sympy.Matrix([sympy.Rational(a.numerator, a.denominator) for a in D.coeffs])
    try:
        sol, params = A.gauss_jordan_solve(b)
    except ValueError:
        return None
    if params.shape[0]:
        sol = sol.subs({t: 0 for t in params})
    values = [Fraction(int(sympy.fraction(x)[0]), int(sympy.fraction(x)[1])) for x in sol]
    return values[-1], tuple(values[:-1])
