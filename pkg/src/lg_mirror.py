"""
Mirror Landau-Ginzburg potentials of toric test configurations.

A potential is a Laurent polynomial whose term at the ray generator b_rho
has coefficient c_rho * exp(2 pi k l_rho). The log-exponents l_rho are kept
exact so that ratios of terms with equal exponents stay rational; numeric
values are produced with mpmath at the requested precision.
"""
import logging
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Mapping, Sequence, Tuple

import mpmath

from src.exceptions import NotWeakFano
from src.lattice_core import LatticeVector, pairing
from src.polytopes import LatticePolytope, convex_hull
from src.testconfig import relative_canonical
from src.toric_geom import ToricDivisor, anticanonical_divisor, anticanonical_ratio, is_nef
from src.utils import format_rational

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ScaledCoefficient:
    """mantissa * exp(2 pi k log) with exact mantissa and log-exponent."""
    mantissa: Fraction
    log: Fraction
    k: Fraction

    def __bool__(self) -> bool:
        return self.mantissa != 0

    def scale(self, factor) -> 'ScaledCoefficient':
        return ScaledCoefficient(self.mantissa * Fraction(factor), self.log, self.k)

    def value(self) -> mpmath.mpf:
        return (mpmath.mpf(self.mantissa.numerator) / self.mantissa.denominator
                * mpmath.exp(2 * mpmath.pi * _mpf(self.k) * _mpf(self.log)))

    def __truediv__(self, other):
        if isinstance(other, ScaledCoefficient):
            if other.log == self.log and other.k == self.k:
                return self.mantissa / other.mantissa
            return self.value() / other.value()
        return self.value() / other

    def __rtruediv__(self, other):
        return other / self.value()


def _mpf(x: Fraction) -> mpmath.mpf:
    return mpmath.mpf(x.numerator) / x.denominator


@dataclass(frozen=True)
class LGPotential:
    """Laurent polynomial sum c_m exp(2 pi k l_m) x^m."""
    terms: Tuple[Tuple[LatticeVector, Fraction], ...]
    k: Fraction
    dim: int
    mantissas: Tuple[Fraction, ...] = ()

    def __post_init__(self):
        pairs = [(tuple(int(x) for x in m), Fraction(l)) for m, l in self.terms]
        mantissas = [Fraction(c) for c in self.mantissas] or [Fraction(1)] * len(pairs)
        order = sorted(range(len(pairs)), key=lambda i: pairs[i])
        object.__setattr__(self, "terms", tuple(pairs[i] for i in order))
        object.__setattr__(self, "mantissas", tuple(mantissas[i] for i in order))
        object.__setattr__(self, "k", Fraction(self.k))

    @property
    def exponents(self) -> List[LatticeVector]:
        return [m for m, _ in self.terms]

    def log_coefficient(self, m: Sequence[int]) -> Fraction:
        return dict(self.terms)[tuple(m)]

    def section(self) -> Dict[LatticeVector, ScaledCoefficient]:
        """Exponent -> exact coefficient, as consumed by section evaluation."""
        return {m: ScaledCoefficient(c, l, self.k) for (m, l), c in zip(self.terms, self.mantissas)}

    def numeric_terms(self) -> List[Tuple[LatticeVector, Any]]:
        """(exponent, mpmath coefficient) pairs at the current working precision."""
        return [(m, coeff.value()) for m, coeff in self.section().items()]

    def at_scale(self, k) -> 'LGPotential':
        return LGPotential(self.terms, Fraction(k), self.dim, self.mantissas)

    def with_mantissas(self, mantissas: Sequence) -> 'LGPotential':
        return LGPotential(self.terms, self.k, self.dim, tuple(mantissas))

    def to_json(self) -> Dict[str, Any]:
        return {
            "k": format_rational(self.k),
            "terms": [{"exp": list(m), "log_coeff": format_rational(l), "mantissa": format_rational(c)}
                      for (m, l), c in zip(self.terms, self.mantissas)],
        }


@dataclass
class JacobiClassExpression:
    """Laurent polynomial representing a class in the Jacobian ring at leading order."""
    terms: Dict[LatticeVector, ScaledCoefficient]
    uncontrolled: bool = False
    notes: List[str] = field(default_factory=list)

    def __add__(self, other: 'JacobiClassExpression') -> 'JacobiClassExpression':
        terms = dict(self.terms)
        for m, c in other.terms.items():
            if m in terms:
                prev = terms[m]
                if prev.log != c.log:
                    raise ValueError(f"Cannot add terms at {m} with different scales")
                c = ScaledCoefficient(prev.mantissa + c.mantissa, c.log, c.k)
            terms[m] = c
        terms = {m: c for m, c in terms.items() if c}
        return JacobiClassExpression(terms, self.uncontrolled or other.uncontrolled, self.notes + other.notes)

    def scale(self, factor) -> 'JacobiClassExpression':
        return JacobiClassExpression({m: c.scale(factor) for m, c in self.terms.items() if factor},
                                     self.uncontrolled, list(self.notes))

    def numeric_terms(self) -> List[Tuple[LatticeVector, Any]]:
        return [(m, c.value()) for m, c in sorted(self.terms.items())]

    def to_json(self) -> Dict[str, Any]:
        return {"terms": [{"exp": list(m), "log_coeff": format_rational(c.log),
                           "mantissa": format_rational(c.mantissa)} for m, c in sorted(self.terms.items())]}


def build_potential(tc, k) -> LGPotential:
    """One term per ray b_rho with log-coefficient -a_rho of the polarisation."""
    fan = tc.total_fan
    terms = tuple((r, -a) for r, a in zip(fan.rays, tc.polarisation.coeffs))
    W = LGPotential(terms, Fraction(k), fan.ambient_dim)
    logger.debug(f"Potential with {len(terms)} terms at k = {k}")
    return W


def splitting_section(functional: Sequence[int]) -> LatticeVector:
    """First unit (or small) vector s with <lambda, s> = 1, used as the base coordinate."""
    lam = tuple(int(x) for x in functional)
    n = len(lam)
    for sign in (1, -1):
        for j in range(n):
            s = tuple(sign if i == j else 0 for i in range(n))
            if pairing(lam, s) == 1:
                return s
    for bound in range(1, 6):
        for j in range(n):
            for a in range(-bound, bound + 1):
                s = tuple(a if i == j else (1 if i == (j + 1) % n else 0) for i in range(n))
                if pairing(lam, s) == 1:
                    return s
    raise ValueError(f"Functional {lam} is not primitive")


def deformation_split(W: LGPotential, functional: Sequence[int]) -> Tuple[LGPotential, LGPotential]:
    """(W_fiber, W_rest): terms with <lambda, m> = 0 and the remaining ones."""
    lam = tuple(functional)
    fib, rest, fib_c, rest_c = [], [], [], []
    for (m, l), c in zip(W.terms, W.mantissas):
        if pairing(lam, m) == 0:
            fib.append((m, l))
            fib_c.append(c)
        else:
            rest.append((m, l))
            rest_c.append(c)
    return (LGPotential(tuple(fib), W.k, W.dim, tuple(fib_c)),
            LGPotential(tuple(rest), W.k, W.dim, tuple(rest_c)))


def _check_weak_fano(D: ToricDivisor) -> List[str]:
    if is_nef(anticanonical_divisor(D.fan)):
        return []
    message = "Total space is not weak Fano; leading-order mirror map is uncontrolled"
    warnings.warn(message, NotWeakFano)
    logger.warning(message)
    return [message]


def divisor_to_jacobi_leading(D: ToricDivisor, W: LGPotential) -> JacobiClassExpression:
    """Leading-order mirror image sum c_rho m_rho of a divisor sum c_rho D_rho."""
    notes = _check_weak_fano(D)
    section = W.section()
    terms = {}
    for r, c in zip(D.fan.rays, D.coeffs):
        if c:
            terms[r] = section[r].scale(c)
    return JacobiClassExpression(terms, bool(notes), notes)


def theta_class(tc, W: LGPotential) -> JacobiClassExpression:
    """theta = r W when the polarisation is equivalent to r(-K), else the leading image of L."""
    found = anticanonical_ratio(tc.polarisation)
    if found is not None:
        r, _ = found
        notes = _check_weak_fano(tc.polarisation)
        return JacobiClassExpression({m: c.scale(r) for m, c in W.section().items()} if r else {},
                                     bool(notes), notes)
    return divisor_to_jacobi_leading(tc.polarisation, W)


def psi_class(tc, W: LGPotential) -> JacobiClassExpression:
    """psi = image of K_{X/P^1} + W = sum over non-fibre rays of |<lambda, b>| m_rho."""
    psi = divisor_to_jacobi_leading(relative_canonical(tc), W) + JacobiClassExpression(W.section())
    for i, (_, mult) in enumerate(tc.projection.ray_classification):
        if mult > 1:
            message = f"Ray {tc.total_fan.rays[i]} enters psi with multiplicity {mult}"
            logger.warning(message)
            psi.notes.append(message)
    return psi


def newton_polytope(W: LGPotential) -> LatticePolytope:
    if not W.terms:
        raise ValueError("Newton polytope of the zero potential")
    return convex_hull(W.exponents)


def from_json(payload: Mapping) -> LGPotential:
    terms = tuple((tuple(t["exp"]), Fraction(t["log_coeff"])) for t in payload["terms"])
    mantissas = tuple(Fraction(t.get("mantissa", "1")) for t in payload["terms"])
    return LGPotential(terms, Fraction(payload["k"]), len(terms[0][0]), mantissas)
