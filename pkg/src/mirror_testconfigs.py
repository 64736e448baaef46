"""
Dual test configurations built from a grouping of the compactification's
fixed points, the rank inequality, the Hamiltonian prescription and the
assembled identity DF = sum of twisted dual DF invariants + base-locus term.
"""
import itertools
import logging
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Callable, Dict, FrozenSet, List, Optional, Sequence, Tuple

import mpmath

from src.boundary_residue import (
    Compactification, ResidueReport, build_compactification, default_grouping, principal_root,
    residue_decomposition,
)
from src.config import SolverSettings
from src.exceptions import InvalidParameter, NoSolutionFound, ZeroWeight
from src.fans import Fan, FanProjection, classify_projection, cone_side, fibre_fan, subfan_split
from src.lattice_core import LatticeVector, pairing
from src.lg_mirror import build_potential, splitting_section
from src.polytopes import LatticePolytope, convex_hull
from src.testconfig import df_intersection, df_twisted, slope_constant
from src.toric_geom import (
    ComplexDivisorClass, FixedPoint, divisor, equivariant_weights, fixed_points, hamiltonian_value,
    intersection_number,
)
from src.utils import (
    format_rational, format_scalar, format_vector, mixed_add, mixed_div, mixed_mul, mixed_sub, to_mpc, to_mpf,
)

logger = logging.getLogger(__name__)

Key = FrozenSet[LatticeVector]

GRID_DENOMINATOR = 6
MAX_CANDIDATES = 600
SOLVE_TOLERANCE = 1e-9

ELL_DUAL = ((2, -1), (-1, 2), (-1, 0), (0, -1))
ELL_DUAL_TWISTED = ((2, -1), (-1, 2), (1, -1), (-1, 1))


def _key(p: FixedPoint) -> Key:
    return frozenset(p.rays)


@dataclass
class DualTestConfiguration:
    """Completed subfan over P^1 with its central and distinguished fixed points."""
    index: int
    total_fan: Fan
    projection: FanProjection
    fiber_fan: Fan
    fiber_basis: Tuple[LatticeVector, ...]
    central: List[FixedPoint]
    distinguished: List[FixedPoint]
    divisor_ray: Optional[LatticeVector] = None

    @property
    def functional(self) -> LatticeVector:
        return self.projection.functional

    @property
    def distinguished_keys(self) -> List[Key]:
        return [_key(p) for p in self.distinguished]

    def to_json(self) -> Dict[str, Any]:
        return {
            "index": self.index,
            "fan": self.total_fan.to_json(),
            "functional": list(self.functional),
            "central": [[list(r) for r in p.rays] for p in self.central],
            "distinguished": [[list(r) for r in p.rays] for p in self.distinguished],
            "divisor": list(self.divisor_ray) if self.divisor_ray is not None else None,
        }


@dataclass
class HamiltonianPrescription:
    """Target values of the eta and xi Hamiltonians on Z(v), and a solution once solved."""
    v: Optional[Tuple[Any, ...]]
    H: Dict[Key, Any]
    K: Dict[Key, Any]
    d: Dict[Key, Any] = field(default_factory=dict)
    t: Dict[Key, Any] = field(default_factory=dict)
    eta: Optional[ComplexDivisorClass] = None
    xi: Optional[ComplexDivisorClass] = None
    residual: Any = None
    notes: List[str] = field(default_factory=list)

    def to_json(self) -> Dict[str, Any]:
        def table(values):
            return [{"cone": sorted(list(r) for r in key), "value": format_scalar(val)}
                    for key, val in sorted(values.items(), key=lambda kv: sorted(kv[0]))]
        return {
            "v": format_vector(self.v) if self.v is not None else None,
            "H": table(self.H),
            "K": table(self.K),
            "eta": [format_scalar(c) for c in self.eta.coeffs] if self.eta is not None else None,
            "xi": [format_scalar(c) for c in self.xi.coeffs] if self.xi is not None else None,
            "residual": format_scalar(self.residual) if self.residual is not None else None,
            "notes": list(self.notes),
        }


def make_dual(index: int, fan: Fan, functional: Sequence[int], distinguished: Optional[Sequence[Key]] = None,
              divisor_ray: Optional[Sequence[int]] = None) -> DualTestConfiguration:
    """
    Dual test configuration on a smooth complete fan; Z~(v) defaults to all central points.

    Raises:
        NotAFibration: if the functional does not define a map to P^1
    """
    projection = classify_projection(fan, functional)
    fiber, basis = fibre_fan(fan, functional)
    central = [p for p in fixed_points(fan) if any(pairing(projection.functional, r) > 0 for r in p.rays)]
    if distinguished is None:
        chosen = list(central)
    else:
        wanted = set(distinguished)
        chosen = [p for p in central if _key(p) in wanted]
    ray = tuple(divisor_ray) if divisor_ray is not None else None
    return DualTestConfiguration(index, fan, projection, fiber, tuple(basis), central, chosen, ray)


def build_duals(comp: Compactification, grouping: Sequence[Sequence[int]],
                section: Sequence[int]) -> List[DualTestConfiguration]:
    """
    One dual per group: the group's cones completed over P^1, fibred by
    section on the side the group lies.

    Raises:
        NonCompactifiableGroup: propagated from subfan_split
    """
    F = comp.ambient_fan
    section = tuple(int(x) for x in section)
    fans = subfan_split(F, grouping, section)
    duals = []
    for i, (group, fan) in enumerate(zip(grouping, fans)):
        sides = {cone_side(F, F.max_cones[c], section) for c in group}
        side = -1 if sides == {-1} else 1
        functional = tuple(side * x for x in section)
        keys = [F.cone_key(F.max_cones[c]) for c in group]
        dual = make_dual(i, fan, functional, keys)
        logger.info(f"Dual {i}: {len(fan.rays)} rays, {len(dual.central)} central fixed points")
        duals.append(dual)
    return duals


def partition_check(comp: Compactification, duals: Sequence[DualTestConfiguration]) -> Dict[str, Any]:
    """The distinguished sets are disjoint and cover every fixed point of the compactification."""
    everything = {_key(p) for p in fixed_points(comp.ambient_fan)}
    seen: set = set()
    disjoint = True
    for dual in duals:
        keys = set(dual.distinguished_keys)
        disjoint = disjoint and not (seen & keys)
        seen |= keys
    return {"disjoint": disjoint, "covers": seen == everything, "holds": disjoint and seen == everything}


def distinguished_divisor(dtc: DualTestConfiguration, report: ResidueReport) -> Optional[LatticeVector]:
    """Central-fibre ray whose distinguished fixed points all carry psi~ = 1."""
    psi = {frozenset(row.rays): row.psi for row in report.rows}
    candidates = sorted((r for r in dtc.total_fan.rays if pairing(dtc.functional, r) > 0),
                        key=lambda r: (sum(x * x for x in r), r))
    for r in candidates:
        on_d = [k for k in dtc.distinguished_keys if r in k]
        if on_d and all(psi.get(k) == 1 for k in on_d):
            dtc.divisor_ray = r
            return r
    logger.warning(f"Dual {dtc.index}: no central divisor with psi~ identically 1")
    return None


def _star(fan: Fan, ray: Sequence[int]) -> List[LatticeVector]:
    idx = fan.ray_index(ray)
    return sorted({fan.rays[i] for cone in fan.max_cones if idx in cone for i in cone})


def perp_conditions(fan: Fan, ray: Sequence[int]) -> List[List[Fraction]]:
    """
    Linear conditions on divisor coefficients b for sum b_rho D_rho to restrict
    trivially to D: (sum b D_rho) . D . D_tau1 ... D_tau(n-1) = 0 for all tau.
    """
    D = divisor(fan, {fan.ray_index(ray): 1})
    units = [divisor(fan, {i: 1}) for i in range(len(fan.rays))]
    rows = []
    for tau in itertools.combinations_with_replacement(range(len(fan.rays)), fan.ambient_dim - 2):
        extra = [units[i] for i in tau]
        row = [Fraction(intersection_number(fan, [units[j], D] + extra)) for j in range(len(fan.rays))]
        if any(row):
            rows.append(row)
    return rows


def _compare(lhs: int, rhs: int) -> str:
    return f"{lhs} {'>' if lhs > rhs else ('=' if lhs == rhs else '<')} {rhs}"


def rank_inequality_check(dtc: DualTestConfiguration, D: Sequence[int]) -> Dict[str, Any]:
    """
    h11 + dim D-perp + n + 1 >= 2|Z(v)| - f(D).

    "comparison" uses the exact dim D-perp; "bound_comparison" uses only
    dim D-perp >= 1, which is the form the inequality is usually quoted in.
    """
    fan = dtc.total_fan
    D = tuple(D)
    h11 = len(fan.rays) - fan.ambient_dim
    d_perp = len(fan.rays) - len(_star(fan, D))
    idx = fan.ray_index(D)
    f_d = sum(1 for cone in fan.max_cones if idx in cone)
    lhs = h11 + d_perp + fan.ambient_dim
    bound = h11 + min(d_perp, 1) + fan.ambient_dim
    rhs = 2 * len(dtc.central) - f_d
    return {
        "h11": h11, "d_perp": d_perp, "z": len(dtc.central), "f_d": f_d,
        "lhs": lhs, "lower_bound": bound, "rhs": rhs, "holds": lhs >= rhs,
        "comparison": _compare(lhs, rhs),
        "bound_comparison": _compare(bound, rhs),
    }


def lift_vector_field(dtc: DualTestConfiguration, fibre: Sequence, base: Any) -> Tuple[Any, ...]:
    """
    Lattice vector of v = sum_i fibre_i z_i d/dz_i + base w d/dw, with z_i
    the fibre coordinates of the dual's fibre basis and w the base coordinate.

    Raises:
        InvalidParameter: if fibre does not match the fibre dimension
    """
    if len(fibre) != len(dtc.fiber_basis):
        raise InvalidParameter(f"Expected {len(dtc.fiber_basis)} fibre weights, got {len(fibre)}")
    s = splitting_section(dtc.functional)
    v = [mixed_mul(base, x) for x in s]
    for a, b in zip(fibre, dtc.fiber_basis):
        v = [mixed_add(x, mixed_mul(a, y)) for x, y in zip(v, b)]
    return tuple(v)


def prescribed_targets(dtc: DualTestConfiguration, report: ResidueReport, v: Sequence) -> HamiltonianPrescription:
    """
    H = d f theta~ and K = -t - d f (1 - psi~) on Z~(v), zero on the rest of Z(v),
    with d = det(grad v)^(1/(n+1)) and t = tr(grad v) - 1 at each point.

    Raises:
        ZeroWeight: if v has a zero weight at a distinguished point
    """
    v = tuple(Fraction(x) if isinstance(x, (int, Fraction)) else x for x in v)
    rows = {frozenset(row.rays): row for row in report.rows}
    degree = dtc.total_fan.ambient_dim
    targets = HamiltonianPrescription(v, {}, {})
    distinguished = set(dtc.distinguished_keys)
    for p in dtc.central:
        key = _key(p)
        if key not in distinguished:
            targets.H[key] = Fraction(0)
            targets.K[key] = Fraction(0)
            continue
        weights = equivariant_weights(dtc.total_fan, p, v)
        e, tr = 1, 0
        for w in weights:
            e, tr = mixed_mul(e, w), mixed_add(tr, w)
        d = principal_root(e, degree)
        t = mixed_sub(tr, 1)
        row = rows[key]
        df = mixed_mul(d, principal_root(row.f_power, degree))
        targets.d[key], targets.t[key] = d, t
        targets.H[key] = mixed_mul(df, row.theta)
        targets.K[key] = mixed_sub(mixed_mul(-1, t), mixed_mul(df, mixed_sub(1, row.psi)))
    return targets


def prescription_terms(dtc: DualTestConfiguration, targets: HamiltonianPrescription, c: Any) -> Dict[Key, Any]:
    """
    Summands (-H)^n (-n c H/(n+1) - sum w + 1 - K) / e of the twisted DF
    invariant at each central point, for Hamiltonians equal to the targets.
    """
    n = dtc.total_fan.ambient_dim - 1
    c_prime = mixed_mul(c, Fraction(n, n + 1))
    terms = {}
    for p in dtc.central:
        key = _key(p)
        weights = equivariant_weights(dtc.total_fan, p, targets.v)
        e, tr = 1, 0
        for w in weights:
            e, tr = mixed_mul(e, w), mixed_add(tr, w)
        H, K = targets.H[key], targets.K[key]
        inner = mixed_sub(mixed_sub(mixed_mul(mixed_mul(-1, c_prime), H), tr), mixed_sub(K, 1))
        terms[key] = mixed_div(mixed_mul(mixed_mul(-1, H) ** n, inner), e)
    return terms


def prescription_for_dual(tc, k, v: Sequence, index: int = 0, comp: Optional[Compactification] = None,
                          grouping: Optional[Sequence[Sequence[int]]] = None
                          ) -> Tuple[DualTestConfiguration, ResidueReport, HamiltonianPrescription]:
    """
    Targets at the lattice vector v on one dual of tc.

    Raises:
        InvalidParameter: if there is no dual with that index
    """
    if comp is None:
        comp = build_compactification(build_potential(tc, k))
    if grouping is None:
        grouping = default_grouping(tc, comp)
    report = residue_decomposition(tc, k, comp, grouping)
    duals = build_duals(comp, grouping, splitting_section(tc.functional))
    if not 0 <= index < len(duals):
        raise InvalidParameter(f"No dual {index}: the grouping has {len(duals)} groups")
    dual = duals[index]
    return dual, report, prescribed_targets(dual, report, v)


def _v_grid(dim: int, denominator: int = GRID_DENOMINATOR) -> List[Tuple[Fraction, ...]]:
    values = sorted({Fraction(p, q) for q in range(1, denominator + 1) for p in range(-q, q + 1) if p},
                    key=lambda x: (x.denominator, abs(x), -x))
    grid = [v for v in itertools.product(values, repeat=dim)]
    grid.sort(key=lambda v: (max(x.denominator for x in v), sum(abs(x) for x in v), v))
    return grid


def _min_norm_solve(A, y):
    """Minimum-norm least-squares solution through the SVD."""
    U, S, V = mpmath.svd_c(A, full_matrices=False)
    k = S.rows
    top = max((S[i] for i in range(k)), default=mpmath.mpf(0))
    cutoff = top * mpmath.mpf(2) ** (-mpmath.mp.prec // 2)
    Uy = U.transpose_conj() * y
    z = mpmath.matrix(k, 1)
    for i in range(k):
        if S[i] > cutoff:
            z[i] = Uy[i] / S[i]
    return V.transpose_conj() * z


def _solve_at(dtc: DualTestConfiguration, targets: HamiltonianPrescription, v: Sequence,
              perp: Sequence[Sequence[Fraction]]):
    """Joint linear solve for the coefficients of eta and of xi~ = xi - D at fixed v."""
    fan = dtc.total_fan
    R = len(fan.rays)
    D = dtc.divisor_ray
    vm = [to_mpf(x) if isinstance(x, (int, Fraction)) else x for x in v]
    points = sorted(dtc.central, key=lambda p: sorted(p.rays))
    Z = len(points)
    A = mpmath.matrix(2 * Z + len(perp), 2 * R)
    y = mpmath.matrix(2 * Z + len(perp), 1)
    for row, p in enumerate(points):
        key = _key(p)
        for i, u in zip(p.cone, p.dual_basis):
            w = mpmath.fsum(a * b for a, b in zip(u, vm))
            A[row, i] = w
            A[Z + row, R + i] = w
        y[row] = -to_mpc(targets.H[key])
        base = hamiltonian_value(_divisor_class(fan, D), p, vm) if D is not None else 0
        y[Z + row] = -to_mpc(targets.K[key]) - to_mpc(base)
    for row, condition in enumerate(perp):
        for j, c in enumerate(condition):
            A[2 * Z + row, R + j] = to_mpf(c)
    x = _min_norm_solve(A, y)
    diff = A * x - y
    residual = max((abs(diff[i]) for i in range(diff.rows)), default=mpmath.mpf(0))
    eta = ComplexDivisorClass(fan, tuple(x[i] for i in range(R)))
    xi_coeffs = [x[R + i] + (1 if D is not None and r == D else 0) for i, r in enumerate(fan.rays)]
    return eta, ComplexDivisorClass(fan, tuple(xi_coeffs)), residual


def _divisor_class(fan: Fan, ray: Sequence[int]) -> ComplexDivisorClass:
    idx = fan.ray_index(ray)
    return ComplexDivisorClass(fan, tuple(mpmath.mpf(1) if i == idx else mpmath.mpf(0)
                                          for i in range(len(fan.rays))))


def solve_hamiltonians(dtc: DualTestConfiguration, targets: Optional[HamiltonianPrescription] = None,
                       builder: Optional[Callable[[Sequence], HamiltonianPrescription]] = None,
                       settings: Optional[SolverSettings] = None, tolerance: float = SOLVE_TOLERANCE,
                       max_candidates: int = MAX_CANDIDATES) -> HamiltonianPrescription:
    """
    Classes eta and xi = D + xi~ whose Hamiltonians meet the targets on Z(v).

    xi~ is first asked to restrict trivially to D. Along D the xi
    Hamiltonian then changes between fixed points as the one of O(D) does,
    by D.D times the tangent weight on a surface, while K = -t changes by
    (2 + D.D) times it. When the K targets on D cannot be met this way the
    condition is dropped at that v and the solution carries a note.

    A prescription carrying v is solved at that v only. Otherwise v runs
    over a grid of small rationals, with targets rebuilt by builder when
    given; the first v meeting the tolerance wins, and failures report the
    best residual found.

    Raises:
        NoSolutionFound: if no candidate meets the tolerance
    """
    settings = settings or SolverSettings()
    if targets is None and builder is None:
        raise ValueError("Either targets or a target builder is required")
    if targets is not None and targets.v is not None and builder is None:
        candidates = [targets.v]
    else:
        candidates = _v_grid(dtc.total_fan.ambient_dim)[:max_candidates]
    best = None
    perp = perp_conditions(dtc.total_fan, dtc.divisor_ray) if dtc.divisor_ray is not None else []
    with mpmath.workprec(settings.precision_bits):
        tol = mpmath.mpf(tolerance)
        for v in candidates:
            try:
                current = builder(v) if builder is not None else targets
                eta, xi, residual = _solve_at(dtc, current, v, perp)
                restricted = bool(perp)
                if perp and residual > tol:
                    free = _solve_at(dtc, current, v, [])
                    if free[2] < residual:
                        (eta, xi, residual), restricted = free, False
            except ZeroWeight:
                continue
            if best is None or residual < best[0]:
                best = (residual, v, current, eta, xi, restricted)
            if residual <= tol:
                break
    if best is None or best[0] > tol:
        residual = best[0] if best is not None else None
        logger.error(f"Dual {dtc.index}: no Hamiltonian solution, best residual {residual}")
        raise NoSolutionFound(f"No solution for dual {dtc.index}",
                              best_residual=format_scalar(residual) if residual is not None else None)
    residual, v, current, eta, xi, restricted = best
    notes = list(current.notes)
    if perp and not restricted:
        notes.append("xi - D does not restrict trivially to D")
    logger.info(f"Dual {dtc.index}: solved at v = {format_vector(v)} with residual {mpmath.nstr(residual, 5)}")
    return replace(current, v=tuple(v), eta=eta, xi=xi, residual=residual, notes=notes)


def assemble_theorem1(tc, k, comp: Optional[Compactification] = None,
                      grouping: Optional[Sequence[Sequence[int]]] = None,
                      settings: Optional[SolverSettings] = None) -> Dict[str, Any]:
    """
    DF(tc) against the sum of twisted DF invariants of the duals plus the
    base-locus defect, at one k.

    The duals share the slope c of the original fibre, which fixes the
    scaling of eta and xi.
    """
    settings = settings or SolverSettings()
    W = build_potential(tc, k)
    if comp is None:
        comp = build_compactification(W)
    if grouping is None:
        grouping = default_grouping(tc, comp)
    report = residue_decomposition(tc, k, comp, grouping)
    section = splitting_section(tc.functional)
    duals = build_duals(comp, grouping, section)
    c = slope_constant(tc.fiber_fan, tc.fiber_polarisation)
    rows = []
    total: Any = Fraction(0)
    with mpmath.workprec(settings.precision_bits):
        for dual in duals:
            D = distinguished_divisor(dual, report)
            rank = rank_inequality_check(dual, D) if D is not None else None
            solution = solve_hamiltonians(dual, builder=lambda v, d=dual: prescribed_targets(d, report, v),
                                          settings=settings)
            vm = tuple(to_mpf(x) for x in solution.v)
            value = df_twisted(dual, solution.eta, solution.xi, vm, c_vee=to_mpf(c))
            total = mixed_add(total, value)
            rows.append({
                "dual": dual.index,
                "v": format_vector(solution.v),
                "divisor": list(D) if D is not None else None,
                "rank_inequality": rank,
                "eta": [format_scalar(x) for x in solution.eta.coeffs],
                "xi": [format_scalar(x) for x in solution.xi.coeffs],
                "df": format_scalar(to_mpc(value)),
                "group_total": format_scalar(report.group_totals[dual.index]),
                "residual": format_scalar(solution.residual),
                "notes": solution.notes,
            })
    df = df_intersection(tc)
    defect = mixed_sub(df, total)
    logger.info(f"Assembled {len(duals)} duals at k = {k}")
    return {
        "k": format_rational(Fraction(k)),
        "df": format_rational(df),
        "duals": rows,
        "sum_duals": format_scalar(to_mpc(total)),
        "base_locus": format_scalar(to_mpc(defect)),
        "partition": partition_check(comp, duals),
        "slope": format_rational(c),
    }


def orbifold_polytopes() -> Dict[str, LatticePolytope]:
    """Polytopes of the four orbifold duals of the slope-unstable threefold example."""
    lower = [(0, 0, -1)]
    upper = [(0, 0, 1)]

    def level(points, z):
        return [p + (z,) for p in points]

    base = level(ELL_DUAL, 0)
    top = level(ELL_DUAL, 1)
    bottom = level(ELL_DUAL_TWISTED, -1)

    def hull(points, removed):
        return convex_hull([p for p in points if p not in removed])

    return {
        "Q1": hull(lower + base + top, {(2, -1, 1), (0, -1, 1)}),
        "Q2": hull(lower + base + top, {(-1, 2, 1), (-1, 0, 1)}),
        "Q3": hull(upper + bottom + base, {(2, -1, -1), (1, -1, -1)}),
        "Q4": hull(upper + bottom + base, {(-1, 2, -1), (-1, 1, -1)}),
    }


def orbifold_dual_report() -> Dict[str, Any]:
    """Combinatorial data only: vertices, facets, rank of the class group, central cone counts."""
    out = {}
    for name, Q in orbifold_polytopes().items():
        side = 1 if name in ("Q1", "Q2") else -1
        central = [f for f in Q.facets if any(v[2] * side > 0 for v in Q.facet_vertices(f))]
        out[name] = {
            "vertices": [format_vector(v) for v in Q.vertices],
            "facets": len(Q.facets),
            "class_group_rank": len(Q.vertices) - Q.ambient_dim,
            "central_cones": len(central),
        }
    return out
