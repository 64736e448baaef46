"""
Lattice polytopes: hulls, facets, polar duality, volumes and lattice points.

A polytope is stored by its vertices and its facet inequalities
<m, u_F> >= -a_F with u_F primitive and inward. All arithmetic is exact;
vertices may be rational (polar duals of non-reflexive polytopes).
"""
import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import sympy

from src.exceptions import NotAnEdge, OriginNotInterior
from src.lattice_core import (
    determinant, int_determinant, pairing, primitive, rank, solve_rational,
)

logger = logging.getLogger(__name__)

Point = Tuple[Any, ...]


def _exact(x):
    x = Fraction(x)
    return int(x) if x.denominator == 1 else x


def exact_point(p: Iterable) -> Point:
    return tuple(_exact(x) for x in p)


@dataclass(frozen=True)
class Facet:
    """Inequality <m, normal> >= -offset with a primitive inward normal."""
    normal: Tuple[int, ...]
    offset: Fraction

    def value(self, m: Sequence) -> Fraction:
        return pairing(m, self.normal) + self.offset

    def saturated_by(self, m: Sequence) -> bool:
        return self.value(m) == 0


@dataclass(frozen=True)
class AffineFrame:
    """Affine chart origin + B.y on the affine hull of a lower-dimensional polytope."""
    origin: Point
    basis: Tuple[Point, ...]
    pivots: Tuple[int, ...]
    equations: Tuple[Tuple[Tuple[int, ...], Fraction], ...]

    def contains(self, x: Sequence) -> bool:
        return all(pairing(x, c) == value for c, value in self.equations)

    def coordinates(self, x: Sequence) -> Point:
        d = len(self.basis)
        square = [[self.basis[j][i] for j in range(d)] for i in self.pivots]
        rhs = [Fraction(x[i]) - self.origin[i] for i in self.pivots]
        return tuple(solve_rational(square, rhs)) if d else ()

    def lift(self, y: Sequence) -> Point:
        n = len(self.origin)
        return exact_point(self.origin[i] + sum(y[j] * self.basis[j][i] for j in range(len(self.basis)))
                      for i in range(n))


@dataclass(frozen=True)
class LatticePolytope:
    """Convex polytope with exact vertices and facets."""
    vertices: Tuple[Point, ...]
    facets: Tuple[Facet, ...]
    dim: int
    ambient_dim: int
    frame: Optional[AffineFrame] = None
    relative_facets: Tuple[Facet, ...] = field(default=())

    @property
    def is_full_dimensional(self) -> bool:
        return self.dim == self.ambient_dim

    @property
    def is_lattice(self) -> bool:
        return all(isinstance(x, int) for v in self.vertices for x in v)

    def contains(self, m: Sequence) -> bool:
        if self.is_full_dimensional:
            return all(f.value(m) >= 0 for f in self.facets)
        if not self.frame.contains(m):
            return False
        y = self.frame.coordinates(m)
        return all(f.value(y) >= 0 for f in self.relative_facets)

    def facet_vertices(self, facet: Facet) -> List[Point]:
        return [v for v in self.vertices if facet.saturated_by(v)]

    def vertex_facets(self, vertex: Sequence) -> List[Facet]:
        return [f for f in self.facets if f.saturated_by(vertex)]

    def to_json(self) -> Dict[str, Any]:
        from src.utils import format_vector
        return {"vertices": [format_vector(v) for v in self.vertices]}


def _hyperplane_normal(rows: List[List[Fraction]], n: int) -> Optional[Tuple[int, ...]]:
    """Primitive integer normal of the span of n-1 independent rows (cofactor expansion)."""
    normal = []
    for k in range(n):
        minor = [[r[j] for j in range(n) if j != k] for r in rows]
        normal.append((-1) ** k * determinant(minor))
    if all(x == 0 for x in normal):
        return None
    lcm = 1
    for x in normal:
        lcm = lcm * x.denominator // math.gcd(lcm, x.denominator)
    return primitive(int(x * lcm) for x in normal)


def _full_dimensional_facets(points: List[Point], n: int) -> List[Facet]:
    facets: Dict[Tuple[int, ...], Facet] = {}
    for combo in itertools.combinations(points, n):
        base = combo[0]
        rows = [[Fraction(p[i]) - base[i] for i in range(n)] for p in combo[1:]]
        normal = _hyperplane_normal(rows, n)
        if normal is None:
            continue
        values = [pairing(p, normal) for p in points]
        c = pairing(base, normal)
        if all(v >= c for v in values):
            inward = normal
        elif all(v <= c for v in values):
            inward = tuple(-x for x in normal)
            c = -c
        else:
            continue
        if inward not in facets:
            facets[inward] = Facet(inward, Fraction(-c))
    return sorted(facets.values(), key=lambda f: f.normal)


def _affine_frame(points: List[Point], n: int) -> AffineFrame:
    origin = points[0]
    basis: List[Point] = []
    for p in points[1:]:
        diff = tuple(Fraction(p[i]) - origin[i] for i in range(n))
        if rank(basis + [diff]) > len(basis):
            basis.append(diff)
    d = len(basis)
    pivots = ()
    for rows in itertools.combinations(range(n), d):
        if determinant([[basis[j][i] for j in range(d)] for i in rows]) != 0:
            pivots = rows
            break
    equations = []
    if basis:
        null = sympy.Matrix([[sympy.Rational(x.numerator, x.denominator) for x in b] for b in basis]).nullspace()
    else:
        null = [sympy.eye(n).col(i) for i in range(n)]
    for vec in null:
        den = sympy.ilcm(*[sympy.fraction(x)[1] for x in vec]) if len(vec) else 1
        c = primitive(int(x * den) for x in vec)
        equations.append((c, Fraction(pairing(origin, c))))
    return AffineFrame(origin, tuple(basis), tuple(pivots), tuple(equations))


def convex_hull(points: Iterable[Sequence]) -> LatticePolytope:
    """
    Convex hull of a nonempty point set.

    Lower-dimensional hulls are allowed; they carry an affine frame and facets
    relative to their affine hull instead of ambient facets.
    """
    pts = sorted(set(exact_point(p) for p in points))
    if not pts:
        raise ValueError("convex_hull needs at least one point")
    n = len(pts[0])
    d = rank([[Fraction(p[i]) - pts[0][i] for i in range(n)] for p in pts[1:]]) if len(pts) > 1 else 0
    if d == n:
        facets = _full_dimensional_facets(pts, n)
        vertices = [p for p in pts
                    if rank([f.normal for f in facets if f.saturated_by(p)] or [[0] * n]) == n]
        return LatticePolytope(tuple(vertices), tuple(facets), n, n)
    frame = _affine_frame(pts, n)
    if d == 0:
        return LatticePolytope((pts[0],), (), 0, n, frame, ())
    local = [frame.coordinates(p) for p in pts]
    rel = _full_dimensional_facets(local, d)
    vertices = [p for p, y in zip(pts, local)
                if rank([f.normal for f in rel if f.saturated_by(y)] or [[0] * d]) == d]
    logger.debug(f"Lower-dimensional hull of dimension {d} in Z^{n}")
    return LatticePolytope(tuple(vertices), (), d, n, frame, tuple(rel))


def polytope_from_inequalities(normals: Sequence[Sequence[int]], offsets: Sequence) -> LatticePolytope:
    """
    Bounded polytope {m : <m, u_i> >= -a_i} by vertex enumeration.

    Raises:
        ValueError: if the inequalities have no common solution
    """
    normals = [tuple(int(x) for x in u) for u in normals]
    offsets = [Fraction(a) for a in offsets]
    n = len(normals[0])
    candidates = set()
    for idx in itertools.combinations(range(len(normals)), n):
        A = [normals[i] for i in idx]
        x = solve_rational(A, [-offsets[i] for i in idx])
        if x is None:
            continue
        if all(pairing(x, u) + a >= 0 for u, a in zip(normals, offsets)):
            candidates.add(exact_point(x))
    if not candidates:
        raise ValueError("Inequalities define an empty or unbounded polytope")
    return convex_hull(candidates)


def polar_dual(P: LatticePolytope) -> LatticePolytope:
    """
    Polar dual {u : <m, u> >= -1 for all m in P}.

    Raises:
        OriginNotInterior: unless 0 lies strictly inside P
    """
    if not P.is_full_dimensional or any(f.offset <= 0 for f in P.facets):
        raise OriginNotInterior("Polar dual needs the origin in the interior")
    return convex_hull(tuple(Fraction(x) / f.offset for x in f.normal) for f in P.facets)


def is_reflexive(P: LatticePolytope) -> bool:
    """True iff P is a lattice polytope with 0 interior and every facet at lattice distance 1."""
    if not P.is_full_dimensional or any(f.offset <= 0 for f in P.facets):
        raise OriginNotInterior("Reflexivity needs the origin in the interior")
    return P.is_lattice and all(f.offset == 1 for f in P.facets)


def _simplices(P: LatticePolytope) -> List[Tuple[Point, ...]]:
    """Fan triangulation from the smallest vertex, recursing into facets."""
    if P.dim == 0:
        return [P.vertices]
    if P.dim == 1:
        return [tuple(sorted(P.vertices))]
    v0 = min(P.vertices)
    out = []
    if P.is_full_dimensional:
        faces = [P.facet_vertices(f) for f in P.facets if not f.saturated_by(v0)]
    else:
        local = {v: P.frame.coordinates(v) for v in P.vertices}
        faces = [[v for v in P.vertices if f.saturated_by(local[v])]
                 for f in P.relative_facets if not f.saturated_by(local[v0])]
    for face in faces:
        for simplex in _simplices(convex_hull(face)):
            out.append((v0,) + tuple(simplex))
    return out


def normalized_volume(P: LatticePolytope):
    """
    n! times the Euclidean volume; 0 for lower-dimensional polytopes.

    Integral for lattice polytopes, an exact Fraction for rational ones.
    """
    if not P.is_full_dimensional:
        return 0
    total = Fraction(0)
    for s in _simplices(P):
        base = s[0]
        total += abs(determinant([[Fraction(v[i]) - base[i] for i in range(P.ambient_dim)] for v in s[1:]]))
    return _exact(total)


def euclidean_volume(P: LatticePolytope) -> Fraction:
    return Fraction(normalized_volume(P)) / math.factorial(P.ambient_dim)


def lattice_points(P: LatticePolytope) -> List[Tuple[int, ...]]:
    """All integer points of P in lexicographic order."""
    n = P.ambient_dim
    lo = [math.floor(min(Fraction(v[i]) for v in P.vertices)) for i in range(n)]
    hi = [math.ceil(max(Fraction(v[i]) for v in P.vertices)) for i in range(n)]
    return [m for m in itertools.product(*[range(lo[i], hi[i] + 1) for i in range(n)]) if P.contains(m)]


def interior_points(P: LatticePolytope) -> List[Tuple[int, ...]]:
    return [m for m in lattice_points(P) if all(f.value(m) > 0 for f in P.facets)]


def boundary_points(P: LatticePolytope) -> List[Tuple[int, ...]]:
    return [m for m in lattice_points(P) if any(f.value(m) == 0 for f in P.facets)]


def dilate(P: LatticePolytope, k) -> LatticePolytope:
    k = Fraction(k)
    return convex_hull(tuple(k * x for x in v) for v in P.vertices)


def translate(P: LatticePolytope, shift: Sequence) -> LatticePolytope:
    return convex_hull(tuple(x + s for x, s in zip(v, shift)) for v in P.vertices)


def is_delzant(P: LatticePolytope) -> bool:
    """Every vertex meets exactly n facets whose normals form a Z-basis."""
    if not P.is_full_dimensional:
        return False
    for v in P.vertices:
        normals = [f.normal for f in P.vertex_facets(v)]
        if len(normals) != P.ambient_dim or abs(int_determinant(normals)) != 1:
            return False
    return True


HEXAGON = ((1, 0), (1, 1), (0, 1), (-1, 0), (-1, -1), (0, -1))
SQUARE = ((1, 1), (-1, 1), (-1, -1), (1, -1))
TRIANGLE = ((-1, -1), (2, -1), (-1, 2))
PLANAR_TEMPLATES = (HEXAGON, SQUARE, TRIANGLE)


def _simplex_container(pts: List[Point], n: int) -> LatticePolytope:
    shift = [math.floor(min(Fraction(p[i]) for p in pts)) for i in range(n)]
    t = max(1, max(math.ceil(sum(Fraction(p[i]) - shift[i] for i in range(n))) for p in pts))
    corners = [tuple(shift)] + [tuple(shift[i] + (t if i == j else 0) for i in range(n)) for j in range(n)]
    return convex_hull(corners)


def delzant_container(points: Iterable[Sequence]) -> LatticePolytope:
    """
    A Delzant polytope containing every input point.

    Candidates are tried in a fixed order (the hull itself, the hull joined
    with reflexive planar templates, dilated templates, the bounding box, a
    dilated standard simplex); the one of least normalized volume wins and
    earlier candidates win ties.
    """
    pts = sorted(set(exact_point(p) for p in points))
    n = len(pts[0])
    candidates: List[LatticePolytope] = []
    hull = convex_hull(pts)
    candidates.append(hull)
    if n == 2:
        for template in PLANAR_TEMPLATES:
            candidates.append(convex_hull(list(pts) + list(template)))
        for t in (1, 2, 3, 4):
            for template in PLANAR_TEMPLATES:
                candidates.append(convex_hull(tuple(t * x for x in v) for v in template))
    lo = [math.floor(min(Fraction(p[i]) for p in pts)) for i in range(n)]
    hi = [math.ceil(max(Fraction(p[i]) for p in pts)) for i in range(n)]
    hi = [h if h > l else l + 1 for l, h in zip(lo, hi)]
    candidates.append(convex_hull(itertools.product(*[(lo[i], hi[i]) for i in range(n)])))
    candidates.append(_simplex_container(pts, n))
    best = None
    for cand in candidates:
        if not is_delzant(cand) or not cand.is_lattice:
            continue
        if not all(cand.contains(p) for p in pts):
            continue
        if best is None or normalized_volume(cand) < normalized_volume(best):
            best = cand
    logger.info(f"Delzant container with {len(best.vertices)} vertices, volume {normalized_volume(best)}")
    return best


def edge_lattice_restriction(P: LatticePolytope, section: Mapping, edge: Sequence[Sequence],
                             start: Optional[Sequence] = None) -> Dict[int, Any]:
    """
    Restrict a section to an edge of P.

    Args:
        P: full-dimensional polytope containing the section exponents
        section: exponent -> coefficient map
        edge: the two endpoint vertices of the edge
        start: endpoint from which lattice distance is measured (default edge[0])

    Returns:
        lattice distance from start -> coefficient, for monomials on the edge

    Raises:
        NotAnEdge: if the endpoints do not span an edge of P
    """
    a, b = exact_point(edge[0]), exact_point(edge[1])
    if a == b or a not in P.vertices or b not in P.vertices:
        raise NotAnEdge(f"{a} and {b} are not two vertices of the polytope")
    common = [f.normal for f in P.facets if f.saturated_by(a) and f.saturated_by(b)]
    if rank(common or [[0] * P.ambient_dim]) != P.ambient_dim - 1:
        raise NotAnEdge(f"Segment {a} - {b} is not an edge")
    if start is not None and exact_point(start) == b:
        a, b = b, a
    diff = [Fraction(y) - x for x, y in zip(a, b)]
    den = 1
    for x in diff:
        den = den * x.denominator // math.gcd(den, x.denominator)
    step = primitive(int(x * den) for x in diff)
    out = {}
    for m, coeff in section.items():
        delta = [Fraction(x) - y for x, y in zip(m, a)]
        if rank([step, delta]) > 1:
            continue
        k = next(delta[i] / step[i] for i in range(len(step)) if step[i] != 0)
        if k.denominator != 1 or not P.contains(m):
            continue
        if not all(f.value(m) == 0 for f in P.facets if f.normal in common):
            continue
        out[int(k)] = coeff
    return dict(sorted(out.items()))


def from_json(payload: Mapping) -> LatticePolytope:
    return convex_hull(payload["vertices"])
