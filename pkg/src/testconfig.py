"""
Toric test configurations and their Donaldson-Futaki invariants.

Three independent routes are provided: intersection numbers on the total
space, equivariant localisation over its fixed points, and convex geometry
of the polarisation polytope. On every smooth compactified test
configuration they agree exactly.
"""
import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

from src.exceptions import DegenerateVolume, InvalidParameter, NotNef, ZeroWeight
from src.fans import (
    FIBER, OVER_ZERO, Fan, FanProjection, classify_projection, fibre_fan,
    product_with_p1, star_subdivide,
)
from src.lattice_core import LatticeVector, kernel_basis, lattice_coordinates, pairing
from src.polytopes import convex_hull, normalized_volume
from src.toric_geom import (
    ComplexDivisorClass, DivisorLike, FixedPoint, ToricDivisor, anticanonical_divisor,
    divisor_polytope, equivariant_weights, euler_class, fixed_points, generic_vectors_on_level,
    hamiltonian_value, intersection_number, is_nef,
)

logger = logging.getLogger(__name__)

MAX_RETRIES = 64


@dataclass(frozen=True)
class ToricTestConfiguration:
    """Smooth complete fan over the P^1 fan with a polarisation."""
    total_fan: Fan
    projection: FanProjection
    polarisation: ToricDivisor
    fiber_fan: Fan
    fiber_polarisation: ToricDivisor
    fiber_basis: Tuple[LatticeVector, ...]
    name: str = ''

    @property
    def functional(self) -> LatticeVector:
        return self.projection.functional

    @property
    def fiber_dim(self) -> int:
        return self.fiber_fan.ambient_dim


@dataclass
class DFReport:
    """Donaldson-Futaki invariant computed three ways."""
    value_intersection: Fraction
    value_localised: Fraction
    value_polytope: Optional[Fraction]
    slope: Fraction
    vector: Tuple[int, ...] = ()
    notes: List[str] = field(default_factory=list)

    @property
    def consistent(self) -> bool:
        values = [self.value_intersection, self.value_localised]
        if self.value_polytope is not None:
            values.append(self.value_polytope)
        return len(set(values)) == 1


def restrict_to_fibre(fan: Fan, functional: Sequence[int], D: DivisorLike,
                      fiber: Fan, basis: Sequence[LatticeVector]) -> DivisorLike:
    """Restriction of a class on the total space to the generic fibre."""
    coeffs = []
    for r in fiber.rays:
        lifted = tuple(sum(r[j] * basis[j][i] for j in range(len(basis))) for i in range(fan.ambient_dim))
        coeffs.append(D.coeffs[fan.ray_index(lifted)])
    if isinstance(D, ToricDivisor):
        return ToricDivisor(fiber, tuple(coeffs))
    return ComplexDivisorClass(fiber, tuple(coeffs))


def make_test_configuration(fan: Fan, functional: Sequence[int], polarisation: ToricDivisor,
                            name: str = '') -> ToricTestConfiguration:
    """
    Assemble and validate a test configuration.

    Raises:
        InvalidParameter: if the total fan is not smooth and complete
        NotAFibration: if the functional does not define a map to P^1
    """
    if not fan.is_smooth() or not fan.is_complete():
        raise InvalidParameter("Total space of a test configuration must be smooth and complete")
    projection = classify_projection(fan, functional)
    fiber, basis = fibre_fan(fan, functional)
    L = restrict_to_fibre(fan, functional, polarisation, fiber, basis)
    return ToricTestConfiguration(fan, projection, polarisation, fiber, L, tuple(basis), name)


def _base_functional(n: int, base_axis: int) -> Tuple[int, ...]:
    return tuple(1 if i == base_axis else 0 for i in range(n))


def trivial_test_configuration(X: Fan, L: ToricDivisor, base_axis: int = 0) -> ToricTestConfiguration:
    """X x P^1 polarised by pr_1*L + pr_2*O(1)."""
    fan = product_with_p1(X, base_axis)
    coeffs = tuple(L.coeffs) + (Fraction(0), Fraction(1))
    return make_test_configuration(fan, _base_functional(fan.ambient_dim, base_axis),
                                   ToricDivisor(fan, coeffs), name='trivial')


def product_test_configuration(fan: Fan, functional: Sequence[int], polarisation: ToricDivisor,
                               name: str = 'product') -> ToricTestConfiguration:
    """Test configuration induced by a product structure on an arbitrary smooth fan."""
    return make_test_configuration(fan, functional, polarisation, name=name)


def degeneration_to_normal_cone(X: Fan, L: ToricDivisor, center: Iterable[int], r,
                                base_axis: int = 0) -> ToricTestConfiguration:
    """
    Blow up (center x {0}) in X x P^1 and polarise by pi*L + D_inf - r E.

    Args:
        X: smooth complete fan of the fibre
        L: polarisation of X
        center: ray indices of X spanning the cone of the centre (one ray for a divisor)
        r: rational parameter, 0 gives the trivial test configuration
        base_axis: coordinate of the P^1 direction in N x Z

    Raises:
        InvalidParameter: for negative r, a centre that is not a cone of X, or
            a polarisation that stops being nef
    """
    r = Fraction(r)
    if r < 0:
        raise InvalidParameter(f"Parameter r must be non-negative, got {r}")
    center = tuple(sorted(set(int(i) for i in center)))
    if not center or not X.contains_cone(center):
        raise InvalidParameter(f"Centre {center} is not a cone of the fibre fan")
    if r == 0:
        return trivial_test_configuration(X, L, base_axis)
    product = product_with_p1(X, base_axis)
    up = len(X.rays)
    fan = star_subdivide(product, center + (up,))
    coeffs = list(L.coeffs) + [Fraction(0), Fraction(1)]
    coeffs.append(sum((L.coeffs[i] for i in center), Fraction(0)) - r)
    polarisation = ToricDivisor(fan, tuple(coeffs))
    if not is_nef(polarisation):
        raise InvalidParameter(f"Parameter r = {r} exceeds the admissible range for this centre")
    if normalized_volume(divisor_polytope(polarisation)) == 0:
        raise InvalidParameter(f"Parameter r = {r} collapses the polarisation polytope")
    logger.info(f"Degeneration to the normal cone of {center} with r = {r}")
    return make_test_configuration(fan, _base_functional(fan.ambient_dim, base_axis), polarisation,
                                   name='normal-cone')


def scale_polarisation(tc: ToricTestConfiguration, k) -> ToricTestConfiguration:
    return make_test_configuration(tc.total_fan, tc.functional, tc.polarisation.scale(k), name=tc.name)


def slope_constant(X: Fan, L: ToricDivisor) -> Fraction:
    """
    c = (c_1(X) . L^{n-1}) / L^n.

    Raises:
        DegenerateVolume: if L^n = 0
    """
    n = X.ambient_dim
    volume = intersection_number(X, [L] * n)
    if volume == 0:
        raise DegenerateVolume("Polarisation has zero volume")
    return Fraction(intersection_number(X, [anticanonical_divisor(X)] + [L] * (n - 1))) / volume


def relative_canonical(tc: ToricTestConfiguration) -> ToricDivisor:
    """K_{X/P^1} = -sum D_rho + sum |<lambda, b_rho>| D_rho."""
    return ToricDivisor(tc.total_fan, tuple(Fraction(-1 + mult) for _, mult in tc.projection.ray_classification))


def df_intersection(tc: ToricTestConfiguration) -> Fraction:
    """DF = L^n . (n c/(n+1) L + K_{X/P^1}) on the total space."""
    n = tc.fiber_dim
    c = slope_constant(tc.fiber_fan, tc.fiber_polarisation)
    F = tc.total_fan
    L = tc.polarisation
    top = intersection_number(F, [L] * (n + 1))
    mixed = intersection_number(F, [L] * n + [relative_canonical(tc)])
    return Fraction(n) * c / (n + 1) * top + mixed


def _base_weight(tc: ToricTestConfiguration, p: FixedPoint, v: Sequence) -> Any:
    kinds = {tc.projection.ray_classification[i][0] for i in p.cone}
    s = pairing(tc.functional, v)
    return s if OVER_ZERO in kinds else -s


def df_localised(tc: ToricTestConfiguration, v: Optional[Sequence[int]] = None) -> Fraction:
    """
    Localised DF over all fixed points of the compact total space:
    sum_p H(p)^n (c' H(p) - sum w(p) + s_p) / e(p), with c' = n c/(n+1) and
    s_p = +<lambda, v> over 0 and -<lambda, v> over infinity.

    Without v, vectors with <lambda, v> = 1 are drawn from a fixed sequence
    until every weight is nonzero.
    """
    if v is None:
        for candidate in itertools.islice(generic_vectors_on_level(tc.functional), MAX_RETRIES):
            try:
                return df_localised(tc, candidate)
            except ZeroWeight:
                logger.debug(f"Vector {candidate} is not generic for localisation")
        raise ZeroWeight("No generic vector found for localisation")
    n = tc.fiber_dim
    c = slope_constant(tc.fiber_fan, tc.fiber_polarisation)
    c_prime = Fraction(n) * c / (n + 1)
    total = Fraction(0)
    for p in fixed_points(tc.total_fan):
        weights = equivariant_weights(tc.total_fan, p, v)
        e = euler_class(tc.total_fan, p, v)
        H = hamiltonian_value(tc.polarisation, p, v)
        kappa = -sum(weights) + _base_weight(tc, p, v)
        total += Fraction(H) ** n * (c_prime * H + kappa) / e
    return total


def central_fixed_points(tc: Any) -> List[FixedPoint]:
    """Fixed points lying over 0 in P^1."""
    out = []
    for p in fixed_points(tc.total_fan):
        kinds = {tc.projection.ray_classification[i][0] for i in p.cone}
        if OVER_ZERO in kinds:
            out.append(p)
    return out


def twisted_slope(tc: Any, eta: DivisorLike, xi: DivisorLike):
    """
    c = ((c_1(X) - xi|) . eta|^{n-1}) / eta|^n on the generic fibre.

    Raises:
        DegenerateVolume: if eta|^n = 0
    """
    fiber, basis = fibre_fan(tc.total_fan, tc.projection.functional)
    eta_f = restrict_to_fibre(tc.total_fan, tc.projection.functional, eta, fiber, basis)
    xi_f = restrict_to_fibre(tc.total_fan, tc.projection.functional, xi, fiber, basis)
    n = fiber.ambient_dim
    volume = intersection_number(fiber, [eta_f] * n)
    if volume == 0:
        raise DegenerateVolume("Twisting class has zero volume on the fibre")
    anti = anticanonical_divisor(fiber)
    numerator_class = ComplexDivisorClass(fiber, tuple(a - b for a, b in zip(anti.coeffs, xi_f.coeffs)))
    return intersection_number(fiber, [numerator_class] + [eta_f] * (n - 1)) / volume


def df_twisted(tc: Any, eta: DivisorLike, xi: DivisorLike, v: Sequence,
               c_vee: Any = None, points: Optional[Sequence[FixedPoint]] = None):
    """
    Twisted formal DF invariant over the central fibre:
    sum_p H_eta^n (c' H_eta - sum w + 1 + H_xi) / e with c' = n c_vee/(n+1).

    Args:
        tc: anything exposing total_fan and projection
        eta, xi: complex classes on the total fan
        v: vector field with <lambda, v> = 1
        c_vee: frozen slope; computed from the fibre restriction when omitted
        points: fixed points to sum over (defaults to those over 0)
    """
    n = tc.total_fan.ambient_dim - 1
    if c_vee is None:
        c_vee = twisted_slope(tc, eta, xi)
    c_prime = c_vee * n / (n + 1)
    if points is None:
        points = central_fixed_points(tc)
    total = 0
    for p in points:
        weights = equivariant_weights(tc.total_fan, p, v)
        e = euler_class(tc.total_fan, p, v)
        H = hamiltonian_value(eta, p, v)
        K = hamiltonian_value(xi, p, v)
        total += H ** n * (c_prime * H - sum(weights) + 1 + K) / e
    return total


def _lattice_volume(points: List[Tuple], normal: Sequence[int]) -> Fraction:
    """Lattice-normalized volume of a facet lying in a hyperplane with the given normal."""
    if not points:
        return Fraction(0)
    B = kernel_basis([tuple(normal)])
    base = points[0]
    local = [lattice_coordinates(B, [Fraction(p[i]) - base[i] for i in range(len(base))]) for p in points]
    d = B.shape[1]
    if d == 0:
        return Fraction(1)
    hull = convex_hull(local)
    return Fraction(normalized_volume(hull)) / math.factorial(d)


def polytope_terms(tc: ToricTestConfiguration) -> Dict[str, Fraction]:
    """
    Convex-geometric ingredients of DF on the polarisation polytope Q:
    the roof integral (volume of Q), the boundary integral (facets over the
    fibre boundary) and the multiplicity correction of non-fibre facets.
    """
    Q = divisor_polytope(tc.polarisation)
    n = tc.fiber_dim
    roof = Fraction(normalized_volume(Q)) / math.factorial(n + 1)
    boundary = Fraction(0)
    correction = Fraction(0)
    for i, (kind, mult) in enumerate(tc.projection.ray_classification):
        b = tc.total_fan.rays[i]
        a = tc.polarisation.coeffs[i]
        face = [v for v in Q.vertices if pairing(v, b) + a == 0]
        if len(face) <= n:
            continue
        vol = _lattice_volume(face, b)
        if kind == FIBER:
            boundary += vol
        elif mult > 1:
            correction += (mult - 1) * vol
    return {"roof": roof, "boundary": boundary, "correction": correction}


def df_donaldson_polytope(tc: ToricTestConfiguration) -> Fraction:
    """
    DF = n! (a int_P f - int_{dP} f dsigma) + n! sum (mu - 1)/mu Vol(P_rho)
    with a = n c, f the roof function of Q over P and dsigma the lattice
    measure on facets.

    Raises:
        NotNef: if the polarisation is not nef
    """
    if not is_nef(tc.polarisation):
        raise NotNef("Polarisation of the test configuration is not nef")
    n = tc.fiber_dim
    c = slope_constant(tc.fiber_fan, tc.fiber_polarisation)
    terms = polytope_terms(tc)
    scale = math.factorial(n)
    return scale * (n * c * terms["roof"] - terms["boundary"]) + scale * terms["correction"]


def df_report(tc: ToricTestConfiguration, v: Optional[Sequence[int]] = None) -> DFReport:
    """All three routes; the polytope route is skipped when the polarisation is not nef."""
    notes: List[str] = []
    value_intersection = df_intersection(tc)
    value_localised = df_localised(tc, v)
    try:
        value_polytope = df_donaldson_polytope(tc)
    except NotNef as e:
        value_polytope = None
        notes.append(str(e))
    report = DFReport(value_intersection, value_localised, value_polytope,
                      slope_constant(tc.fiber_fan, tc.fiber_polarisation), tuple(v or ()), notes)
    if not report.consistent:
        logger.warning(f"DF routes disagree: {value_intersection}, {value_localised}, {value_polytope}")
    return report
