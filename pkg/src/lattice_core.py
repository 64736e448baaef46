"""
Exact integer linear algebra over Z^n.

Matrices are numpy arrays of dtype=object holding Python ints, so nothing
ever overflows. Rational work uses fractions.Fraction; sympy is used where
an exact rank or nullspace is needed.
"""
import itertools
import logging
from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import sympy

from src.exceptions import DimensionMismatch, NonSimplicial

logger = logging.getLogger(__name__)

LatticeVector = Tuple[int, ...]
LatticeMatrix = np.ndarray


def as_matrix(M) -> np.ndarray:
    """Copy of M as a 2-d object array of Python ints."""
    A = np.array(M, dtype=object)
    if A.ndim == 1:
        A = A.reshape(1, -1)
    if A.size == 0:
        return A
    return np.vectorize(int, otypes=[object])(A)


def identity(n: int) -> np.ndarray:
    I = np.zeros((n, n), dtype=object)
    for i in range(n):
        I[i, i] = 1
    return I


def primitive(v: Iterable[int]) -> LatticeVector:
    """Divide out the gcd of the coordinates; the zero vector is returned unchanged."""
    v = tuple(int(x) for x in v)
    g = 0
    for x in v:
        g = gcd(g, x)
    if g == 0:
        return v
    return tuple(x // g for x in v)


def is_primitive(v: Sequence[int]) -> bool:
    g = 0
    for x in v:
        g = gcd(g, int(x))
    return g == 1


def pairing(m: Sequence, u: Sequence):
    """<m, u> for vectors of ints, Fractions or mpmath numbers."""
    total = 0
    for a, b in zip(m, u):
        total += a * b
    return total


def exgcd(a: int, b: int) -> np.ndarray:
    """
    Extended GCD as a unimodular row operation.

    Returns a 2x2 integer matrix E of determinant 1 with E @ [a, b] = [g, 0],
    g = gcd(a, b) >= 0.
    """
    # Euclid on the column [a, b], tracking row operations in the augmented part.
    M = np.array([[b, 0, 1], [a, 1, 0]], dtype=object)
    while M[1, 0] != 0:
        q = M[0, 0] // M[1, 0]
        M[0] -= q * M[1]
        M = M[::-1].copy()
    E = M[:, 1:].copy()
    if M[0, 0] < 0:
        E[0] = -E[0]
    g = E[0, 0] * a + E[0, 1] * b
    if g != 0:
        E[1] = [-(b // g), a // g]
    else:
        E = identity(2)
    return E


def hermite_normal_form(M) -> Tuple[np.ndarray, np.ndarray]:
    """
    Row-style Hermite normal form.

    Args:
        M: integer matrix (rows x cols)

    Returns:
        (H, U) with U unimodular and U @ M == H. Pivots of H are positive,
        rows below the last pivot are zero, and entries above a pivot p lie
        in [0, p).
    """
    H = as_matrix(M)
    rows, cols = H.shape
    U = identity(rows)
    r = 0
    for j in range(cols):
        if r >= rows:
            break
        for i in range(r + 1, rows):
            if H[i, j] == 0:
                continue
            E = exgcd(H[r, j], H[i, j])
            H[[r, i]] = E @ H[[r, i]]
            U[[r, i]] = E @ U[[r, i]]
        if H[r, j] == 0:
            continue
        if H[r, j] < 0:
            H[r] = -H[r]
            U[r] = -U[r]
        p = H[r, j]
        for i in range(r):
            q = H[i, j] // p
            if q:
                H[i] -= q * H[r]
                U[i] -= q * U[r]
        r += 1
    return H, U


def _swap_rows(A, i, j):
    if i != j:
        A[[i, j]] = A[[j, i]]


def _swap_cols(A, i, j):
    if i != j:
        A[:, [i, j]] = A[:, [j, i]]


def smith_normal_form(M) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Smith normal form.

    Args:
        M: integer matrix

    Returns:
        (S, U, V) with U, V unimodular, U @ M @ V == S diagonal, nonnegative
        diagonal entries and d_1 | d_2 | ...
    """
    S = as_matrix(M)
    rows, cols = S.shape
    U, V = identity(rows), identity(cols)

    def move_smallest(t, region):
        best = None
        for i, j in region:
            if S[i, j] != 0 and (best is None or abs(S[i, j]) < abs(S[best])):
                best = (i, j)
        if best is None:
            return False
        _swap_rows(S, t, best[0])
        _swap_rows(U, t, best[0])
        _swap_cols(S, t, best[1])
        _swap_cols(V, t, best[1])
        return True

    for t in range(min(rows, cols)):
        if not move_smallest(t, itertools.product(range(t, rows), range(t, cols))):
            break
        while True:
            clean = True
            for i in range(t + 1, rows):
                q = S[i, t] // S[t, t]
                if q:
                    S[i] -= q * S[t]
                    U[i] -= q * U[t]
                if S[i, t] != 0:
                    clean = False
            for j in range(t + 1, cols):
                q = S[t, j] // S[t, t]
                if q:
                    S[:, j] -= q * S[:, t]
                    V[:, j] -= q * V[:, t]
                if S[t, j] != 0:
                    clean = False
            if not clean:
                region = [(i, t) for i in range(t, rows)] + [(t, j) for j in range(t + 1, cols)]
                move_smallest(t, region)
                continue
            offender = None
            for i in range(t + 1, rows):
                for j in range(t + 1, cols):
                    if S[i, j] % S[t, t] != 0:
                        offender = i
                        break
                if offender is not None:
                    break
            if offender is None:
                break
            S[t] += S[offender]
            U[t] += U[offender]
        if S[t, t] < 0:
            S[t] = -S[t]
            U[t] = -U[t]
    return S, U, V


def determinant(M) -> Fraction:
    """Exact determinant of a square matrix of ints or Fractions."""
    A = [[Fraction(x) for x in row] for row in np.array(M, dtype=object).tolist()]
    n = len(A)
    if n == 0:
        return Fraction(1)
    det = Fraction(1)
    for c in range(n):
        pivot = next((r for r in range(c, n) if A[r][c] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != c:
            A[c], A[pivot] = A[pivot], A[c]
            det = -det
        det *= A[c][c]
        for r in range(c + 1, n):
            f = A[r][c] / A[c][c]
            if f:
                for k in range(c, n):
                    A[r][k] -= f * A[c][k]
    return det


def int_determinant(M) -> int:
    d = determinant(M)
    return int(d)


def solve_rational(A, b) -> Optional[List[Fraction]]:
    """
    Solve the square system A x = b exactly.

    Returns:
        Solution as Fractions, or None when A is singular
    """
    n = len(A)
    rows = [[Fraction(x) for x in A[i]] + [Fraction(b[i])] for i in range(n)]
    for c in range(n):
        pivot = next((r for r in range(c, n) if rows[r][c] != 0), None)
        if pivot is None:
            return None
        rows[c], rows[pivot] = rows[pivot], rows[c]
        for r in range(n):
            if r != c and rows[r][c] != 0:
                f = rows[r][c] / rows[c][c]
                for k in range(c, n + 1):
                    rows[r][k] -= f * rows[c][k]
    return [rows[i][n] / rows[i][i] for i in range(n)]


def inverse_rational(M) -> Optional[List[List[Fraction]]]:
    """Exact inverse of a square matrix, or None if singular."""
    n = len(M)
    cols = []
    for j in range(n):
        e = [1 if i == j else 0 for i in range(n)]
        x = solve_rational(M, e)
        if x is None:
            return None
        cols.append(x)
    return [[cols[j][i] for j in range(n)] for i in range(n)]


def rank(vectors) -> int:
    """Rank of a list of exact vectors."""
    vectors = [list(v) for v in vectors]
    if not vectors:
        return 0
    return sympy.Matrix([[sympy.Rational(x.numerator, x.denominator) if isinstance(x, Fraction) else x
                          for x in v] for v in vectors]).rank()


def kernel_basis(A) -> np.ndarray:
    """
    Lattice basis of {x in Z^n : A x = 0}.

    Returns:
        Integer matrix whose columns form a Z-basis of the kernel lattice
    """
    A = as_matrix(A)
    S, U, V = smith_normal_form(A)
    r = sum(1 for i in range(min(S.shape)) if S[i, i] != 0)
    return V[:, r:]


def lattice_coordinates(basis: np.ndarray, v: Sequence[int]) -> Tuple[Fraction, ...]:
    """Coordinates of v in the column basis (exact, v must lie in the span)."""
    B = np.array(basis, dtype=object)
    n, k = B.shape
    # pick k independent rows of B to get a square system
    for rows in itertools.combinations(range(n), k):
        sub = [[B[i, j] for j in range(k)] for i in rows]
        sol = solve_rational(sub, [v[i] for i in rows])
        if sol is not None:
            check = [sum(B[i, j] * sol[j] for j in range(k)) for i in range(n)]
            if all(check[i] == v[i] for i in range(n)):
                return tuple(sol)
            raise ValueError(f"Vector {tuple(v)} is not in the span of the basis")
    raise ValueError("Basis does not have full column rank")


@dataclass(frozen=True)
class Cone:
    """Cone spanned by primitive, pairwise non-parallel generators."""
    generators: Tuple[LatticeVector, ...]
    ambient_dim: int

    def __post_init__(self):
        gens = tuple(tuple(int(x) for x in g) for g in self.generators)
        object.__setattr__(self, 'generators', gens)
        for g in gens:
            if len(g) != self.ambient_dim:
                raise DimensionMismatch(f"Generator {g} does not live in Z^{self.ambient_dim}")
            if not is_primitive(g):
                raise ValueError(f"Generator {g} is not primitive")
        for g, h in itertools.combinations(gens, 2):
            if rank([g, h]) < 2 and pairing(g, h) > 0:
                raise ValueError(f"Generators {g} and {h} are parallel")

    @property
    def dim(self) -> int:
        return rank(self.generators)


def is_smooth_cone(cone: Cone) -> bool:
    """
    True iff the generators of a simplicial cone extend to a Z-basis.

    Raises:
        NonSimplicial: if the generator count differs from the cone dimension
    """
    gens = cone.generators
    if len(gens) != cone.dim:
        raise NonSimplicial(f"Cone with {len(gens)} generators has dimension {cone.dim}")
    if not gens:
        return True
    if len(gens) == cone.ambient_dim:
        return abs(int_determinant(gens)) == 1
    S, _, _ = smith_normal_form(gens)
    return all(S[i, i] == 1 for i in range(len(gens)))


def _frames(points: List[LatticeVector], n: int):
    """Ordered affine frames (v0, w1..wn) of minimal nonzero |det|."""
    best, frames = None, []
    for v0 in points:
        others = [p for p in points if p != v0]
        for tup in itertools.permutations(others, n):
            M = [[tup[j][i] - v0[i] for j in range(n)] for i in range(n)]
            d = abs(int_determinant(M))
            if d == 0:
                continue
            if best is None or d < best:
                best, frames = d, []
            if d == best:
                frames.append((v0, tup, M))
    return best, frames


def _frame_key(points: List[LatticeVector], v0, M, delta: int):
    Minv = inverse_rational(M)
    n = len(M)
    coords = []
    for p in points:
        diff = [p[i] - v0[i] for i in range(n)]
        coords.append(tuple(sum(Minv[i][j] * diff[j] for j in range(n)) for i in range(n)))
    # lattice M^{-1} Z^n, scaled by delta to integers; rows of L^T generate it
    L_T = [[int(delta * Minv[i][j]) for i in range(n)] for j in range(n)]
    H, _ = hermite_normal_form(L_T)
    return (delta, tuple(sorted(coords)), tuple(tuple(int(x) for x in row) for row in H.tolist()))


def normal_form(points: Iterable[Sequence[int]]):
    """
    Canonical key of a full-dimensional lattice point set under affine GL(n,Z).

    The key is the lexicographically smallest image over all affine frames of
    minimal determinant: the sorted frame coordinates of the points together
    with the Hermite form of the lattice expressed in the frame.
    """
    pts = sorted(set(tuple(int(x) for x in p) for p in points))
    if not pts:
        raise DimensionMismatch("Empty point set")
    n = len(pts[0])
    if rank([[p[i] - pts[0][i] for i in range(n)] for p in pts[1:]] or [[0] * n]) != n:
        raise DimensionMismatch("Point set is not full-dimensional")
    delta, frames = _frames(pts, n)
    return min(_frame_key(pts, v0, M, delta) for v0, _, M in frames)


def find_unimodular_map(P: Iterable[Sequence[int]], Q: Iterable[Sequence[int]]):
    """
    Find A in GL(n,Z) and t in Z^n with A.P + t = Q.

    Returns:
        (A, t) as tuples of ints, or None if the sets are not equivalent
    """
    P = sorted(set(tuple(int(x) for x in p) for p in P))
    Q = sorted(set(tuple(int(x) for x in q) for q in Q))
    if not P or not Q or len(P[0]) != len(Q[0]):
        raise DimensionMismatch("Point sets live in different dimensions")
    n = len(P[0])
    for S in (P, Q):
        if rank([[p[i] - S[0][i] for i in range(n)] for p in S[1:]] or [[0] * n]) != n:
            raise DimensionMismatch("Point set is not full-dimensional")
    if len(P) != len(Q):
        return None
    dP, framesP = _frames(P, n)
    dQ, framesQ = _frames(Q, n)
    if dP != dQ:
        return None
    keyP = min((_frame_key(P, v0, M, dP), v0, M) for v0, _, M in framesP)
    for q0, _, MQ in framesQ:
        if _frame_key(Q, q0, MQ, dQ) != keyP[0]:
            continue
        MPinv = inverse_rational(keyP[2])
        A = [[sum(Fraction(MQ[i][k]) * MPinv[k][j] for k in range(n)) for j in range(n)] for i in range(n)]
        if any(x.denominator != 1 for row in A for x in row):
            continue
        A = tuple(tuple(int(x) for x in row) for row in A)
        v0 = keyP[1]
        t = tuple(q0[i] - sum(A[i][j] * v0[j] for j in range(n)) for i in range(n))
        image = sorted(tuple(sum(A[i][j] * p[j] for j in range(n)) + t[i] for i in range(n)) for p in P)
        if image == Q:
            return A, t
    return None


def unimodular_equivalent(P: Iterable[Sequence[int]], Q: Iterable[Sequence[int]]) -> bool:
    """
    True iff some A in GL(n,Z) and translation t satisfy A.P + t = Q as sets.

    Raises:
        DimensionMismatch: for point sets of different or non-full dimension
    """
    P, Q = list(P), list(Q)
    if not P or not Q or len(P[0]) != len(Q[0]):
        raise DimensionMismatch("Point sets live in different dimensions")
    if len(set(map(tuple, P))) != len(set(map(tuple, Q))):
        normal_form(P)
        normal_form(Q)
        return False
    return normal_form(P) == normal_form(Q)
