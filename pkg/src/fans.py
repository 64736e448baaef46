"""
Complete fans, their construction from polytopes, star subdivisions and
projections to the fan of P^1.

Rays are kept in a fixed order and all reports refer to them by index;
maximal cones are sorted tuples of ray indices.
"""
import functools
import itertools
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

from src.exceptions import (
    ConeNotInFan, InvalidParameter, NonCompactifiableGroup, NotAFibration, OriginNotInterior,
)
from src.lattice_core import (
    LatticeVector, int_determinant, kernel_basis, lattice_coordinates, pairing, primitive, rank,
    solve_rational,
)
from src.polytopes import LatticePolytope

logger = logging.getLogger(__name__)

FIBER = 'fiber'
OVER_ZERO = 'zero'
OVER_INFINITY = 'infinity'


def _angle_cmp(u: Sequence[int], v: Sequence[int]) -> int:
    def half(w):
        return 0 if (w[1] > 0 or (w[1] == 0 and w[0] > 0)) else 1
    hu, hv = half(u), half(v)
    if hu != hv:
        return hu - hv
    cross = u[0] * v[1] - u[1] * v[0]
    return -1 if cross > 0 else (1 if cross < 0 else 0)


angular_key = functools.cmp_to_key(_angle_cmp)


@dataclass(frozen=True)
class Fan:
    """Fan given by ordered primitive rays and maximal cones (index tuples)."""
    rays: Tuple[LatticeVector, ...]
    max_cones: Tuple[Tuple[int, ...], ...]
    ambient_dim: int

    def __post_init__(self):
        rays = tuple(tuple(int(x) for x in r) for r in self.rays)
        cones = tuple(tuple(sorted(int(i) for i in c)) for c in self.max_cones)
        object.__setattr__(self, 'rays', rays)
        object.__setattr__(self, 'max_cones', cones)
        if len(set(rays)) != len(rays):
            raise ValueError("Fan rays must be distinct")
        for r in rays:
            if len(r) != self.ambient_dim or primitive(r) != r or not any(r):
                raise ValueError(f"Ray {r} is not a primitive vector of Z^{self.ambient_dim}")
        for c in cones:
            if any(i < 0 or i >= len(rays) for i in c):
                raise ValueError(f"Cone {c} refers to a missing ray")
        if len(set(cones)) != len(cones):
            raise ValueError("Maximal cones must be distinct")

    @property
    def dim(self) -> int:
        return self.ambient_dim

    def cone_rays(self, cone: Iterable[int]) -> List[LatticeVector]:
        return [self.rays[i] for i in cone]

    def ray_index(self, ray: Sequence[int]) -> int:
        try:
            return self.rays.index(tuple(int(x) for x in ray))
        except ValueError:
            raise ConeNotInFan(f"Ray {tuple(ray)} is not a ray of the fan")

    def cone_key(self, cone: Iterable[int]) -> FrozenSet[LatticeVector]:
        """Cone as a set of ray vectors; stable across fans sharing rays."""
        return frozenset(self.rays[i] for i in cone)

    def find_cone(self, key: Iterable[Sequence[int]]) -> int:
        """Index of the maximal cone with the given generators."""
        target = frozenset(tuple(int(x) for x in r) for r in key)
        for idx, cone in enumerate(self.max_cones):
            if self.cone_key(cone) == target:
                return idx
        raise ConeNotInFan(f"No maximal cone spanned by {sorted(target)}")

    def is_simplicial(self) -> bool:
        return all(len(c) == self.ambient_dim and rank(self.cone_rays(c)) == self.ambient_dim
                   for c in self.max_cones)

    def is_smooth(self) -> bool:
        return self.is_simplicial() and all(abs(int_determinant(self.cone_rays(c))) == 1
                                            for c in self.max_cones)

    def walls(self) -> Dict[Tuple[int, ...], List[int]]:
        """Codimension-one faces of simplicial maximal cones -> indices of the cones containing them."""
        out: Dict[Tuple[int, ...], List[int]] = {}
        for idx, cone in enumerate(self.max_cones):
            for wall in itertools.combinations(cone, len(cone) - 1):
                out.setdefault(wall, []).append(idx)
        return out

    def _interior_coordinates(self, cone, w) -> Optional[List[Fraction]]:
        gens = self.cone_rays(cone)
        return solve_rational([[g[i] for g in gens] for i in range(self.ambient_dim)], w)

    def covering_count(self, w: Sequence[int]) -> Optional[int]:
        """Number of maximal cones containing w in their interior; None if w lies on a wall."""
        count = 0
        for cone in self.max_cones:
            coords = self._interior_coordinates(cone, w)
            if coords is None or any(x == 0 for x in coords):
                return None
            if all(x > 0 for x in coords):
                count += 1
        return count

    def is_complete(self) -> bool:
        """
        Every wall is shared by exactly two maximal cones and a generic
        vector lies in exactly one of them.
        """
        if not self.max_cones or not self.is_simplicial():
            return False
        if any(len(v) != 2 for v in self.walls().values()):
            return False
        for q in itertools.count(97, 2):
            for signs in itertools.product((1, -1), repeat=self.ambient_dim):
                w = [s * q ** i + i for i, s in enumerate(signs)]
                count = self.covering_count(w)
                if count is not None:
                    return count == 1
            if q > 500:
                return False

    def contains_cone(self, cone: Iterable[int]) -> bool:
        c = set(cone)
        return any(c <= set(m) for m in self.max_cones)

    def to_json(self) -> Dict[str, Any]:
        return {"rays": [list(r) for r in self.rays], "max_cones": [list(c) for c in self.max_cones]}


def from_json(payload: Mapping) -> Fan:
    rays = [tuple(r) for r in payload["rays"]]
    return Fan(tuple(rays), tuple(tuple(c) for c in payload["max_cones"]), len(rays[0]))


def _ordered(rays: List[LatticeVector], cones: List[Tuple[int, ...]], n: int) -> Fan:
    """Sort rays angularly in the plane, lexicographically otherwise, and reindex cones."""
    order = sorted(range(len(rays)), key=(lambda i: angular_key(rays[i])) if n == 2 else (lambda i: rays[i]))
    new_index = {old: new for new, old in enumerate(order)}
    new_rays = [rays[i] for i in order]
    new_cones = [tuple(sorted(new_index[i] for i in c)) for c in cones]
    if n == 2:
        new_cones.sort(key=lambda c: angular_key(new_rays[_cone_start(new_rays, c)]))
    else:
        new_cones.sort()
    return Fan(tuple(new_rays), tuple(new_cones), n)


def _cone_start(rays, cone) -> int:
    """First generator of a planar cone in counter-clockwise order."""
    a, b = cone
    u, v = rays[a], rays[b]
    return a if u[0] * v[1] - u[1] * v[0] > 0 else b


def face_fan(P: LatticePolytope) -> Fan:
    """
    Fan of cones over the proper faces of P.

    Raises:
        OriginNotInterior: unless 0 lies strictly inside P
    """
    if not P.is_full_dimensional or any(f.offset <= 0 for f in P.facets):
        raise OriginNotInterior("Face fan needs the origin in the interior")
    rays = [_ray_through(v) for v in P.vertices]
    cones = [tuple(sorted(rays.index(_ray_through(v)) for v in P.facet_vertices(f))) for f in P.facets]
    fan = _ordered(rays, cones, P.ambient_dim)
    logger.debug(f"Face fan with {len(fan.rays)} rays and {len(fan.max_cones)} cones")
    return fan


def _ray_through(v) -> LatticeVector:
    den = 1
    for x in v:
        den = den * Fraction(x).denominator
    return primitive(int(Fraction(x) * den) for x in v)


def normal_fan(P: LatticePolytope) -> Fan:
    """Rays are the inward facet normals, one maximal cone per vertex."""
    if not P.is_full_dimensional:
        raise InvalidParameter("Normal fan needs a full-dimensional polytope")
    rays = [f.normal for f in P.facets]
    cones = [tuple(sorted(P.facets.index(f) for f in P.vertex_facets(v))) for v in P.vertices]
    return _ordered(rays, cones, P.ambient_dim)


def star_subdivide(F: Fan, cone: Iterable[int]) -> Fan:
    """
    Stellar subdivision at a cone given by ray indices.

    The new ray (sum of the cone's generators, made primitive) is appended
    after the existing rays. Subdividing a ray leaves the fan unchanged.

    Raises:
        ConeNotInFan: if the cone is not a face of a maximal cone
    """
    sigma = tuple(sorted(set(int(i) for i in cone)))
    if not sigma or not F.contains_cone(sigma):
        raise ConeNotInFan(f"Cone {sigma} is not in the fan")
    if len(sigma) == 1:
        return F
    new_ray = primitive(sum(F.rays[i][k] for i in sigma) for k in range(F.ambient_dim))
    idx = len(F.rays)
    cones: List[Tuple[int, ...]] = []
    for tau in F.max_cones:
        if set(sigma) <= set(tau):
            for i in sigma:
                cones.append(tuple(sorted([j for j in tau if j != i] + [idx])))
        else:
            cones.append(tau)
    logger.info(f"Star subdivision at cone {sigma} adds ray {new_ray}")
    return Fan(F.rays + (new_ray,), tuple(cones), F.ambient_dim)


P1_FAN = Fan(((1,), (-1,)), ((0,), (1,)), 1)


@dataclass(frozen=True)
class FanProjection:
    """Projection N x Z -> Z of a fan onto the fan of P^1."""
    base: Fan
    functional: LatticeVector
    ray_classification: Tuple[Tuple[str, int], ...]

    def fiber_rays(self) -> List[int]:
        return [i for i, (kind, _) in enumerate(self.ray_classification) if kind == FIBER]

    def rays_over_zero(self) -> List[int]:
        return [i for i, (kind, _) in enumerate(self.ray_classification) if kind == OVER_ZERO]

    def rays_over_infinity(self) -> List[int]:
        return [i for i, (kind, _) in enumerate(self.ray_classification) if kind == OVER_INFINITY]

    def multiplicity(self, ray_index: int) -> int:
        return self.ray_classification[ray_index][1]


def classify_projection(F: Fan, functional: Sequence[int]) -> FanProjection:
    """
    Classify rays by the sign of <functional, b_rho>.

    Raises:
        InvalidParameter: for the zero functional
        NotAFibration: if a cone maps onto all of R or one side of P^1 is missed
    """
    lam = tuple(int(x) for x in functional)
    if not any(lam):
        raise InvalidParameter("Projection functional must be nonzero")
    classification = []
    for r in F.rays:
        p = pairing(lam, r)
        if p > 0:
            classification.append((OVER_ZERO, p))
        elif p < 0:
            classification.append((OVER_INFINITY, -p))
        else:
            classification.append((FIBER, 0))
    for cone in F.max_cones:
        signs = {classification[i][0] for i in cone}
        if OVER_ZERO in signs and OVER_INFINITY in signs:
            raise NotAFibration(f"Cone {cone} maps onto the whole line")
    kinds = {kind for kind, _ in classification}
    if OVER_ZERO not in kinds or OVER_INFINITY not in kinds:
        raise NotAFibration("The fan does not map onto both halves of the P^1 fan")
    fibre = [F.rays[i] for i, (kind, _) in enumerate(classification) if kind == FIBER]
    if rank(fibre or [[0] * F.ambient_dim]) != F.ambient_dim - 1:
        logger.warning("Fibre rays do not span a corank-one sublattice")
    for i, (kind, mult) in enumerate(classification):
        if mult > 1:
            logger.debug(f"Ray {F.rays[i]} lies over {kind} with multiplicity {mult}")
    return FanProjection(P1_FAN, lam, tuple(classification))


def fibre_fan(F: Fan, functional: Sequence[int]) -> Tuple[Fan, Tuple[LatticeVector, ...]]:
    """
    Generic fibre fan of F -> P^1, written in a lattice basis of ker(functional).

    Returns:
        (fibre fan, basis vectors of the kernel lattice in the ambient lattice)
    """
    lam = tuple(int(x) for x in functional)
    B = kernel_basis([lam])
    basis = tuple(tuple(int(B[i, j]) for i in range(B.shape[0])) for j in range(B.shape[1]))
    fibre_idx = [i for i, r in enumerate(F.rays) if pairing(lam, r) == 0]
    rays = [tuple(int(x) for x in lattice_coordinates(B, F.rays[i])) for i in fibre_idx]
    d = F.ambient_dim - 1
    cones = []
    for combo in itertools.combinations(range(len(fibre_idx)), d):
        members = {fibre_idx[i] for i in combo}
        if d and F.contains_cone(members) and rank([rays[i] for i in combo]) == d:
            cones.append(tuple(combo))
    return _ordered(rays, cones, d) if d else Fan((), (), 0), basis


def product_with_p1(F: Fan, base_axis: int = 0) -> Fan:
    """Fan of X x P^1 with the P^1 direction inserted at coordinate base_axis."""
    n = F.ambient_dim + 1

    def lift(r):
        r = list(r)
        return tuple(r[:base_axis] + [0] + r[base_axis:])

    e = tuple(1 if i == base_axis else 0 for i in range(n))
    rays = [lift(r) for r in F.rays] + [e, tuple(-x for x in e)]
    up, down = len(F.rays), len(F.rays) + 1
    cones = [tuple(c) + (up,) for c in F.max_cones] + [tuple(c) + (down,) for c in F.max_cones]
    return Fan(tuple(rays), tuple(cones), n)


def cone_side(F: Fan, cone: Sequence[int], section: Sequence[int]) -> int:
    values = [pairing(section, F.rays[i]) for i in cone]
    if all(v >= 0 for v in values):
        return 1
    if all(v <= 0 for v in values):
        return -1
    return 0


def auto_grouping(F: Fan, section: Sequence[int]) -> List[List[int]]:
    """
    Split the maximal cones by the sign of the section functional.

    Cones on the non-negative side form the first group and those on the
    non-positive side the second, each in angular order.

    Raises:
        NonCompactifiableGroup: if a cone straddles the fibre hyperplane
    """
    groups: Dict[int, List[int]] = {1: [], -1: []}
    for idx, cone in enumerate(F.max_cones):
        side = cone_side(F, cone, section)
        if side == 0:
            raise NonCompactifiableGroup(f"Cone {cone} meets both sides of the fibration", group_index=None)
        groups[side].append(idx)
    if F.ambient_dim == 2:
        for side in groups:
            groups[side].sort(key=lambda i: angular_key(F.rays[_cone_start(F.rays, F.max_cones[i])]))
    return [g for g in (groups[1], groups[-1]) if g]


def subfan_split(F: Fan, grouping: Sequence[Sequence[int]], section: Sequence[int]) -> List[Fan]:
    """
    Complete each group of maximal cones to a smooth complete fan over P^1.

    A group lying on one side of the fibre hyperplane is closed up with the
    cones joining its boundary walls to a single ray of F on the opposite
    side; rays of smallest norm are tried first. A group holding every cone
    returns F itself.

    Raises:
        NonCompactifiableGroup: with the index of the first group that fails
    """
    section = tuple(int(x) for x in section)
    all_cones = set(range(len(F.max_cones)))
    seen: set = set()
    out: List[Fan] = []
    for gi, group in enumerate(grouping):
        group = [int(i) for i in group]
        if any(i not in all_cones for i in group) or seen & set(group):
            raise NonCompactifiableGroup(f"Group {gi} is not part of a partition of the cones", group_index=gi)
        seen |= set(group)
        if set(group) == all_cones:
            out.append(F)
            continue
        sides = {cone_side(F, F.max_cones[i], section) for i in group}
        if len(sides) != 1 or 0 in sides:
            raise NonCompactifiableGroup(f"Group {gi} does not lie on one side of the fibration", group_index=gi)
        side = sides.pop()
        cones = [F.max_cones[i] for i in group]
        counts: Dict[Tuple[int, ...], int] = {}
        for cone in cones:
            for wall in itertools.combinations(cone, len(cone) - 1):
                counts[wall] = counts.get(wall, 0) + 1
        boundary = [w for w, c in counts.items()
                    if c == 1 and all(pairing(section, F.rays[i]) == 0 for i in w)]
        candidates = sorted((i for i, r in enumerate(F.rays) if pairing(section, r) == -side),
                            key=lambda i: (sum(x * x for x in F.rays[i]), F.rays[i]))
        completed = None
        for u in candidates:
            used = sorted({i for c in cones for i in c} | {u})
            index = {old: new for new, old in enumerate(used)}
            new_cones = [tuple(index[i] for i in c) for c in cones]
            new_cones += [tuple(sorted(index[i] for i in w + (u,))) for w in boundary]
            try:
                fan = Fan(tuple(F.rays[i] for i in used), tuple(new_cones), F.ambient_dim)
            except ValueError:
                continue
            if fan.is_smooth() and fan.is_complete():
                completed = fan
                break
        if completed is None:
            raise NonCompactifiableGroup(f"Group {gi} admits no smooth completion", group_index=gi)
        logger.info(f"Group {gi}: completed with ray {F.rays[u]} to {len(completed.max_cones)} cones")
        out.append(completed)
    if seen != all_cones:
        logger.warning("Grouping does not cover every maximal cone")
    return out
