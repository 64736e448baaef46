"""
Critical points of Laurent potentials and Grothendieck residues.

Critical points are solved in log coordinates u (x = exp(u)), where the
equations x_i dW/dx_i = 0 read sum_m c_m m_i exp(<m, u>) = 0 and the toric
Hessian det[(x_i d_i)(x_j d_j) W] is the Jacobian of that map. All numerics
run in mpmath at the configured precision.
"""
import itertools
import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import mpmath
import numpy as np

from src.config import SolverSettings
from src.exceptions import DegenerateCriticalPoint, SolverIncomplete
from src.lattice_core import rank
from src.lg_mirror import JacobiClassExpression, LGPotential, build_potential, newton_polytope, psi_class, theta_class
from src.polytopes import normalized_volume
from src.testconfig import slope_constant

logger = logging.getLogger(__name__)

NumericTerms = List[Tuple[Tuple[int, ...], Any]]


@dataclass
class CriticalPoint:
    """Critical point in log coordinates with its value and toric Hessian determinant."""
    log_coords: Tuple[Any, ...]
    value: Any
    hessian_det: Any
    multiplicity: int = 1
    residual: Any = 0
    degenerate: bool = False

    @property
    def coords(self) -> Tuple[Any, ...]:
        return tuple(mpmath.exp(u) for u in self.log_coords)


def _terms(f: Union[LGPotential, JacobiClassExpression, NumericTerms]) -> NumericTerms:
    if isinstance(f, (LGPotential, JacobiClassExpression)):
        return f.numeric_terms()
    return list(f)


def evaluate(terms: NumericTerms, u: Sequence) -> Any:
    """sum c_m exp(<m, u>)."""
    total = mpmath.mpc(0)
    for m, c in terms:
        total += c * mpmath.exp(mpmath.fsum(mi * ui for mi, ui in zip(m, u)))
    return total


def _gradient_hessian(terms: NumericTerms, u: Sequence):
    n = len(u)
    g = [mpmath.mpc(0)] * n
    H = mpmath.matrix(n, n)
    scale = mpmath.mpf(0)
    for m, c in terms:
        t = c * mpmath.exp(mpmath.fsum(mi * ui for mi, ui in zip(m, u)))
        scale = max(scale, abs(t))
        for i in range(n):
            if m[i]:
                g[i] += m[i] * t
                for j in range(n):
                    if m[j]:
                        H[i, j] += m[i] * m[j] * t
    return g, H, scale


def toric_hessian_det(terms: NumericTerms, u: Sequence) -> Any:
    """det[(x_i d_i)(x_j d_j) W] at x = exp(u)."""
    _, H, _ = _gradient_hessian(terms, u)
    return mpmath.det(H)


def hessian_finite_difference(terms: NumericTerms, u: Sequence, h=None) -> Any:
    """Determinant of the central-difference Jacobian of u -> x grad W(exp(u))."""
    n = len(u)
    h = h or mpmath.mpf(2) ** (-mpmath.mp.prec // 3)
    J = mpmath.matrix(n, n)
    for j in range(n):
        up = list(u)
        down = list(u)
        up[j] += h
        down[j] -= h
        g_up, _, _ = _gradient_hessian(terms, up)
        g_down, _, _ = _gradient_hessian(terms, down)
        for i in range(n):
            J[i, j] = (g_up[i] - g_down[i]) / (2 * h)
    return mpmath.det(J)


def bkk_bound(W: LGPotential) -> int:
    """Normalized volume of the Newton polytope (0 when it is not full-dimensional)."""
    if not W.terms:
        return 0
    return int(normalized_volume(newton_polytope(W)))


def euler_characteristic_rule(W: LGPotential) -> int:
    """chi(T minus V(W)) = (-1)^dim times the normalized Newton volume."""
    return (-1) ** W.dim * bkk_bound(W)


def tropical_seeds(W: LGPotential) -> List[List[Any]]:
    """
    Real parts where dim+1 affinely independent terms have equal magnitude,
    i.e. the balancing points of the tropicalised potential.
    """
    n = W.dim
    logs = dict(W.terms)
    mant = dict(zip(W.exponents, W.mantissas))
    seeds = []
    two_pi_k = 2 * mpmath.pi * mpmath.mpf(W.k.numerator) / W.k.denominator
    for subset in itertools.combinations(W.exponents, n + 1):
        diffs = [[subset[j][i] - subset[0][i] for i in range(n)] for j in range(1, n + 1)]
        if rank(diffs) < n:
            continue
        # <m_j - m_0, x> = h_0 - h_j with h_m = 2 pi k l_m + log|c_m|
        heights = [two_pi_k * mpmath.mpf(logs[m].numerator) / logs[m].denominator
                   + mpmath.log(abs(mpmath.mpf(mant[m].numerator) / mant[m].denominator)) for m in subset]
        A = mpmath.matrix(diffs)
        b = mpmath.matrix([heights[0] - heights[j] for j in range(1, n + 1)])
        seeds.append(list(mpmath.lu_solve(A, b)))
    seeds.sort(key=lambda s: [float(x) for x in s])
    return seeds


def _wrap(y):
    two_pi = 2 * mpmath.pi
    y = mpmath.fmod(y, two_pi)
    if y > mpmath.pi:
        y -= two_pi
    elif y <= -mpmath.pi:
        y += two_pi
    return y


def _normalise(u: Sequence) -> Tuple[Any, ...]:
    return tuple(mpmath.mpc(z.real, _wrap(z.imag)) for z in u)


def _distance(u: Sequence, w: Sequence) -> Any:
    d = mpmath.mpf(0)
    for a, b in zip(u, w):
        d = max(d, abs(a.real - b.real), abs(_wrap(a.imag - b.imag)))
    return d


def _newton(terms: NumericTerms, u0: Sequence, settings: SolverSettings):
    """Damped Newton from u0; returns (u, relative residual) or None."""
    u = [mpmath.mpc(z) for z in u0]
    tol = mpmath.mpf(settings.residual_tol)
    g, H, scale = _gradient_hessian(terms, u)
    res = mpmath.norm(mpmath.matrix(g)) / scale
    for _ in range(settings.newton_max_iter):
        if res < tol:
            return u, res
        try:
            step = mpmath.lu_solve(H, mpmath.matrix(g))
        except ZeroDivisionError:
            return None
        t = mpmath.mpf(1)
        for _ in range(12):
            trial = [u[i] - t * step[i] for i in range(len(u))]
            g_t, H_t, scale_t = _gradient_hessian(terms, trial)
            res_t = mpmath.norm(mpmath.matrix(g_t)) / scale_t
            if res_t < res:
                u, g, H, res = trial, g_t, H_t, res_t
                break
            t /= 2
        else:
            return None
    return (u, res) if res < tol else None


def _starts(W: LGPotential, settings: SolverSettings) -> List[List[Any]]:
    n = W.dim
    grid = [2 * mpmath.pi * j / settings.imag_grid for j in range(settings.imag_grid)]
    starts = []
    for seed in tropical_seeds(W):
        for phases in itertools.product(grid, repeat=n):
            starts.append([mpmath.mpc(seed[i], phases[i] + mpmath.mpf(1) / 7) for i in range(n)])
    rng = np.random.default_rng(settings.seed)
    spread = max([abs(float(x)) for s in starts for x in (z.real for z in s)] or [1.0]) + 1.0
    while len(starts) < settings.max_starts:
        re = rng.uniform(-spread, spread, n)
        im = rng.uniform(0, 2 * np.pi, n)
        starts.append([mpmath.mpc(float(a), float(b)) for a, b in zip(re, im)])
    return starts[:settings.max_starts]


def find_critical_points(W: LGPotential, settings: Optional[SolverSettings] = None,
                         expected: Optional[int] = None) -> List[CriticalPoint]:
    """
    Critical points of W in the torus by multistart damped Newton.

    Every start is run and the converged points are deduplicated before
    the count is compared with the expected one (default: the BKK bound);
    the result is sorted and depends only on W, the seed and the precision.

    Raises:
        SolverIncomplete: if fewer than the expected points are found
    """
    settings = settings or SolverSettings()
    bound = bkk_bound(W)
    if bound == 0:
        logger.info("Newton polytope is not full-dimensional; no isolated critical points")
        return []
    expected = bound if expected is None else expected
    with mpmath.workprec(settings.precision_bits):
        terms = _terms(W)
        radius = mpmath.mpf(settings.dedup_radius)
        found: List[CriticalPoint] = []
        for idx, u0 in enumerate(_starts(W, settings)):
            result = _newton(terms, u0, settings)
            if result is None:
                continue
            u, res = result
            u = _normalise(u)
            if any(_distance(u, p.log_coords) < radius for p in found):
                continue
            _, H, scale = _gradient_hessian(terms, u)
            det = mpmath.det(H)
            degenerate = abs(det) < mpmath.mpf(settings.degeneracy_tol) * scale ** W.dim
            found.append(CriticalPoint(u, evaluate(terms, u), det, 1, res, degenerate))
            logger.debug(f"Start {idx}: new critical point, residual {mpmath.nstr(res, 5)}")
        for p in found:
            if p.degenerate:
                cluster = sum(1 for q in found if _distance(q.log_coords, p.log_coords) < mpmath.sqrt(radius))
                p.multiplicity = max(2, cluster)
                logger.warning(f"Degenerate critical point flagged with cluster size {p.multiplicity}")
        found.sort(key=lambda p: tuple((float(z.real), float(z.imag)) for z in p.log_coords))
    total = sum(p.multiplicity for p in found)
    if total > bound:
        logger.warning(f"Found {total} critical points above the BKK bound {bound}")
    if len(found) < expected:
        logger.error(f"Found {len(found)} of {expected} critical points")
        raise SolverIncomplete(f"Found {len(found)} of {expected} critical points",
                               found=len(found), expected=expected, partial=found)
    logger.info(f"Found {len(found)} critical points (BKK bound {bound})")
    return found


def check_stationary_phase(W: LGPotential, points: Sequence[CriticalPoint],
                           compactification_euler: Optional[int] = None) -> Dict[str, Any]:
    """
    Condition (M): the sum of Milnor numbers equals (-1)^dim chi of the
    complement of the boundary, with chi from the caller or from the
    Newton-polytope rule.
    """
    source = 'caller'
    chi = compactification_euler
    if chi is None:
        chi = euler_characteristic_rule(W)
        source = 'newton-polytope'
    total = sum(p.multiplicity for p in points)
    target = (-1) ** W.dim * chi
    return {
        "sum_multiplicities": total,
        "euler_characteristic": chi,
        "expected": target,
        "holds": total == target and not any(p.degenerate for p in points),
        "source": source,
    }


def grothendieck_residue(W: LGPotential, g: Union[JacobiClassExpression, NumericTerms, Callable],
                         points: Optional[Sequence[CriticalPoint]] = None,
                         settings: Optional[SolverSettings] = None) -> Any:
    """
    sum_p g(p) / det[(x_i d_i)(x_j d_j) W](p).

    Args:
        g: Laurent polynomial or a callable of the log coordinates

    Raises:
        DegenerateCriticalPoint: if some critical point is degenerate
    """
    settings = settings or SolverSettings()
    if points is None:
        points = find_critical_points(W, settings)
    with mpmath.workprec(settings.precision_bits):
        if any(p.degenerate for p in points):
            raise DegenerateCriticalPoint("Residue needs nondegenerate critical points")
        evaluator = g if callable(g) else (lambda u, t=_terms(g): evaluate(t, u))
        total = mpmath.mpc(0)
        for p in points:
            total += evaluator(p.log_coords) / p.hessian_det
        return +total


def df_mirror_residue(tc, k, settings: Optional[SolverSettings] = None) -> Any:
    """
    Mirror-side DF: sum_p theta^n (c' theta - W + psi) / det Hess W over the
    critical points, with c' = n c/(n+1).

    Raises:
        SolverIncomplete, DegenerateCriticalPoint
    """
    settings = settings or SolverSettings()
    W = build_potential(tc, k)
    theta = theta_class(tc, W)
    psi = psi_class(tc, W)
    n = tc.fiber_dim
    c = slope_constant(tc.fiber_fan, tc.fiber_polarisation)
    points = find_critical_points(W, settings)
    with mpmath.workprec(settings.precision_bits):
        c_prime = mpmath.mpf(n * c.numerator) / (c.denominator * (n + 1))
        t_theta, t_psi = _terms(theta), _terms(psi)

        def integrand(u):
            th = evaluate(t_theta, u)
            return th ** n * (c_prime * th - evaluate(_terms(W), u) + evaluate(t_psi, u))

        value = grothendieck_residue(W, integrand, points, settings)
    logger.info(f"Mirror residue DF at k = {k}: {mpmath.nstr(value.real, 15)}")
    return value
