"""Koch iteration matrices and their eigen-derived constants.

A frequency vector ``omega`` is an eigenvector of a unimodular integer matrix
``T`` with dominant eigenvalue ``lam > 1``.  The matrix ``U = (T^-1)^T`` then
contracts small divisors: ``<U k, omega> = <k, omega> / lam``.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Sequence

import mpmath

from .field import (
    ContinuedFraction,
    FieldElement,
    NumberField,
    cubic_golden,
    inner_product,
    quadratic_from_cf,
)

__all__ = [
    "IterationData",
    "QuadraticIteration",
    "CubicIteration",
    "build_quadratic",
    "build_cubic_golden",
    "from_spec",
    "apply_U_pow",
    "matmul_vec",
    "transpose",
    "EIGEN_BITS",
]

Matrix = tuple[tuple[int, ...], ...]

EIGEN_BITS = 256
RESIDUAL_TOL = mpmath.mpf(10) ** -20


def transpose(m: Sequence[Sequence[int]]) -> Matrix:
    return tuple(tuple(row[i] for row in m) for i in range(len(m[0])))


def matmul(a: Sequence[Sequence[int]], b: Sequence[Sequence[int]]) -> Matrix:
    n, p = len(a), len(b[0])
    return tuple(tuple(sum(a[i][k] * b[k][j] for k in range(len(b))) for j in range(p)) for i in range(n))


def matmul_vec(m: Sequence[Sequence], v: Sequence) -> tuple:
    return tuple(sum((m[i][j] * v[j] for j in range(len(v))), 0 * v[0]) for i in range(len(m)))


def det(m: Sequence[Sequence[int]]) -> int:
    if len(m) == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    return (
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    )


def inverse_unimodular(m: Sequence[Sequence[int]]) -> Matrix:
    d = det(m)
    if abs(d) != 1:
        raise ValueError(f"matrix is not unimodular (det={d})")
    n = len(m)
    if n == 2:
        adj = ((m[1][1], -m[0][1]), (-m[1][0], m[0][0]))
    else:
        def minor(i, j):
            rows = [r for k, r in enumerate(m) if k != i]
            sub = [[x for l, x in enumerate(r) if l != j] for r in rows]
            return sub[0][0] * sub[1][1] - sub[0][1] * sub[1][0]
        adj = tuple(tuple((-1) ** (i + j) * minor(j, i) for j in range(3)) for i in range(3))
    return tuple(tuple(d * x for x in row) for row in adj)


def _field_nullvector(rows: list[list[FieldElement]]) -> tuple[FieldElement, ...]:
    """A nonzero vector annihilated by a singular square matrix over Q(Omega).

    The result is scaled so that its first nonzero coordinate is 1.
    """
    n = len(rows)
    a = [r[:] for r in rows]
    pivots = []
    r = 0
    for c in range(n):
        p = next((i for i in range(r, n) if not a[i][c].is_zero()), None)
        if p is None:
            continue
        a[r], a[p] = a[p], a[r]
        inv = a[r][c].inverse()
        a[r] = [x * inv for x in a[r]]
        for i in range(n):
            if i != r and not a[i][c].is_zero():
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
    free = [c for c in range(n) if c not in pivots]
    if not free:
        raise ArithmeticError("matrix is not singular over the field")
    fc = free[0]
    fld = rows[0][0].field
    vec = [fld.zero() for _ in range(n)]
    vec[fc] = fld.one()
    for i, pc in enumerate(pivots):
        vec[pc] = -a[i][fc]
    lead = next(x for x in vec if not x.is_zero())
    inv = lead.inverse()
    return tuple(x * inv for x in vec)


def _eigvec_exact(m: Matrix, mu: FieldElement) -> tuple[FieldElement, ...]:
    n = len(m)
    fld = mu.field
    rows = [[fld(m[i][j]) - (mu if i == j else 0) for j in range(n)] for i in range(n)]
    return _field_nullvector(rows)


def dot(a: Sequence, b: Sequence):
    return sum((x * y for x, y in zip(a, b)), 0 * a[0])


@dataclass(frozen=True)
class IterationData:
    """Frequency vector with its Koch matrices and common eigen constants."""

    name: str
    ell: int
    omega: tuple[FieldElement, ...]
    T: Matrix
    U: Matrix
    lam: FieldElement
    u1: tuple[FieldElement, ...]

    @property
    def field(self) -> NumberField:
        return self.lam.field

    @property
    def Omega(self) -> FieldElement:
        return self.omega[1]

    @property
    def lam_float(self) -> float:
        return float(self.lam)

    @property
    def u1_omega(self) -> FieldElement:
        return dot(self.u1, self.omega)

    def inner(self, k: Sequence[int]) -> FieldElement:
        return inner_product(k, self.omega)

    def norm(self, k: Sequence[int]) -> float:
        """|k|_1 in the quadratic case, Euclidean norm in the cubic case."""
        if self.ell == 2:
            return float(sum(abs(x) for x in k))
        return float(sum(x * x for x in k)) ** 0.5

    def norm_power(self, k: Sequence[int]) -> int:
        """|k|**(ell-1) exactly: |k|_1 for ell=2, |k|_2**2 for ell=3."""
        if self.ell == 2:
            return sum(abs(x) for x in k)
        return sum(x * x for x in k)


@dataclass(frozen=True)
class QuadraticIteration(IterationData):
    cf: ContinuedFraction = None
    sigma: int = 1
    u2: tuple[FieldElement, ...] = ()
    v2: tuple[FieldElement, ...] = ()
    conjugate: FieldElement = None

    def describe(self) -> dict:
        return {
            "name": self.name,
            "ell": 2,
            "cf": list(self.cf.period),
            "Omega": float(self.Omega),
            "lambda": float(self.lam),
            "sigma": self.sigma,
            "T": [list(r) for r in self.T],
            "U": [list(r) for r in self.U],
        }


@dataclass(frozen=True)
class CubicIteration(IterationData):
    lam2: mpmath.mpc = None
    v2: tuple = ()
    v3: tuple = ()
    u2: tuple = ()
    u3: tuple = ()
    phi: mpmath.mpf = None
    Z1: mpmath.mpf = None
    Z2: mpmath.mpf = None
    theta: mpmath.mpf = None
    delta: mpmath.mpf = None
    # exact data of U restricted to the plane orthogonal to omega:
    # trace 2t and determinant lam, so U^2 - 2t U + lam = 0 there
    t_exact: FieldElement = None
    delta_sq: FieldElement = None
    residual: mpmath.mpf = None

    def describe(self) -> dict:
        return {
            "name": self.name,
            "ell": 3,
            "Omega": float(self.Omega),
            "lambda": float(self.lam),
            "phi": float(self.phi),
            "delta": float(self.delta),
            "theta": float(self.theta),
            "Z1": float(self.Z1),
            "Z2": float(self.Z2),
            "T": [list(r) for r in self.T],
            "U": [list(r) for r in self.U],
        }


def period_matrix(cf: ContinuedFraction) -> Matrix:
    """Product of the elementary matrices [[a,1],[1,0]] over the period."""
    m: Matrix = ((1, 0), (0, 1))
    for a in cf.period:
        m = matmul(m, ((a, 1), (1, 0)))
    return m


def build_quadratic(cf: ContinuedFraction) -> QuadraticIteration:
    if not isinstance(cf, ContinuedFraction):
        raise TypeError("build_quadratic expects a ContinuedFraction")
    Omega = quadratic_from_cf(cf)
    fld = Omega.field
    T = period_matrix(cf)
    sigma = det(T)
    U = transpose(inverse_unimodular(T))
    omega = (fld.one(), Omega)
    lam = fld(T[0][0]) + Omega * T[0][1]
    Tw = matmul_vec(T, omega)
    if any(a != lam * b for a, b in zip(Tw, omega)):
        raise ArithmeticError("T omega != lam omega")
    # other root of the minimal polynomial x^2 + c1 x + c0
    conj = -fld.coeffs[1] - Omega
    v2 = (fld.one(), conj)
    u1 = _eigvec_exact(U, lam.inverse())
    u2 = (-Omega, fld.one())
    if not dot(u2, omega).is_zero() or not dot(u1, v2).is_zero():
        raise ArithmeticError("quadratic eigenvector orthogonality failed")
    return QuadraticIteration(
        name="Omega_" + ",".join(map(str, cf.period)),
        ell=2,
        omega=omega,
        T=T,
        U=U,
        lam=lam,
        u1=u1,
        cf=cf,
        sigma=sigma,
        u2=u2,
        v2=v2,
        conjugate=conj,
    )


def _mp_eigvec(m, mu):
    """Eigenvector of a 3x3 matrix via the cross product of two rows of m - mu I."""
    rows = [[m[i][j] - (mu if i == j else 0) for j in range(3)] for i in range(3)]
    best = None
    for a, b in ((0, 1), (0, 2), (1, 2)):
        r, s = rows[a], rows[b]
        v = [r[1] * s[2] - r[2] * s[1], r[2] * s[0] - r[0] * s[2], r[0] * s[1] - r[1] * s[0]]
        size = mpmath.sqrt(sum(abs(x) ** 2 for x in v))
        if best is None or size > best[0]:
            best = (size, v)
    size, v = best
    # unit length, largest component real and positive
    piv = max(v, key=abs)
    scale = abs(piv) / (piv * size)
    return [x * scale for x in v]


def _cubic_eigendata(T: Matrix, U: Matrix, lam: FieldElement, bits: int):
    with mpmath.workprec(bits):
        lam_mp = lam.to_mpf(bits)
        tr = sum(T[i][i] for i in range(3))
        d = det(T)
        # char poly x^3 - tr x^2 + s x - d; deflate the real root exactly known to lam_mp
        # quotient x^2 + b x + c with b = lam - tr, c = d / lam
        b = lam_mp - tr
        c = d / lam_mp
        disc = 4 * c - b * b
        if disc <= 0:
            raise ArithmeticError("complex pair expected for the cubic case")
        lam2 = mpmath.mpc(-b / 2, mpmath.sqrt(disc) / 2)
        Tm = [[mpmath.mpf(x) for x in row] for row in T]
        Um = [[mpmath.mpf(x) for x in row] for row in U]
        v = _mp_eigvec(Tm, lam2)
        u = _mp_eigvec(Um, 1 / lam2)
        res_v = max(abs(sum(Tm[i][j] * v[j] for j in range(3)) - lam2 * v[i]) for i in range(3))
        res_u = max(abs(sum(Um[i][j] * u[j] for j in range(3)) - u[i] / lam2) for i in range(3))
        residual = max(res_v, res_u)
        v2 = tuple(mpmath.re(x) for x in v)
        v3 = tuple(mpmath.im(x) for x in v)
        u2 = tuple(mpmath.re(x) for x in u)
        u3 = tuple(mpmath.im(x) for x in u)
        phi = mpmath.arg(lam2)
    return lam2, v2, v3, u2, u3, phi, residual


def z_constants(u2, u3):
    """Z1, Z2, theta and delta from the real and imaginary parts of the U eigenvector."""
    n2 = sum(x * x for x in u2)
    n3 = sum(x * x for x in u3)
    c23 = sum(x * y for x, y in zip(u2, u3))
    Z1 = (n2 + n3) / 2
    z2c = (n2 - n3) / 2
    Z2 = mpmath.sqrt(z2c * z2c + c23 * c23)
    theta = mpmath.atan2(c23, z2c)
    return Z1, Z2, theta, Z2 / Z1


def build_cubic(Omega: FieldElement, T: Matrix, name: str, bits: int = EIGEN_BITS) -> CubicIteration:
    fld = Omega.field
    omega = (fld.one(), Omega, Omega * Omega)
    if abs(det(T)) != 1:
        raise ValueError("T must be unimodular")
    U = transpose(inverse_unimodular(T))
    Tw = matmul_vec(T, omega)
    lam = Tw[0]
    if any(a != lam * b for a, b in zip(Tw, omega)):
        raise ArithmeticError("omega is not an eigenvector of T")
    if not lam > 1:
        raise ArithmeticError("dominant eigenvalue must exceed 1")
    u1 = _eigvec_exact(U, lam.inverse())
    lam2, v2, v3, u2, u3, phi, residual = _cubic_eigendata(T, U, lam, bits)
    if residual > RESIDUAL_TOL:
        raise ArithmeticError(f"eigen residual {residual} above tolerance")
    with mpmath.workprec(bits):
        Z1, Z2, theta, delta = z_constants(u2, u3)
    trU = sum(U[i][i] for i in range(3))
    t_exact = (lam.inverse() * -1 + trU) / 2
    delta_sq = _exact_delta_sq(U, lam, t_exact, omega, u1)
    return CubicIteration(
        name=name,
        ell=3,
        omega=omega,
        T=T,
        U=U,
        lam=lam,
        u1=u1,
        lam2=lam2,
        v2=v2,
        v3=v3,
        u2=u2,
        u3=u3,
        phi=phi,
        Z1=Z1,
        Z2=Z2,
        theta=theta,
        delta=delta,
        t_exact=t_exact,
        delta_sq=delta_sq,
        residual=residual,
    )


def plane_quadratic_forms(U: Matrix, lam: FieldElement, t: FieldElement, w):
    """Exact invariants of a vector ``w`` in the plane orthogonal to omega.

    Writing ``w = E (cos psi u2 + sin psi u3)`` the quantity ``E**2 Z1`` and
    ``(E**2 Z2)**2`` are quadratic and quartic forms in ``w``; this returns both.
    """
    Uw = matmul_vec(U, w)
    jw = tuple(a - t * b for a, b in zip(Uw, w))
    s = lam - t * t
    ww = dot(w, w)
    jj = dot(jw, jw) / s
    cross = dot(w, Uw) - t * ww
    K = (ww + jj) / 2
    half_diff = (ww - jj) / 2
    KZ2_sq = half_diff * half_diff + cross * cross / s
    return K, KZ2_sq


def _exact_delta_sq(U, lam, t, omega, u1) -> FieldElement:
    # any nonzero vector of the plane gives delta^2 = (E^2 Z2)^2 / (E^2 Z1)^2
    fld = lam.field
    e = (fld.zero(), fld.zero(), fld.one())
    c = dot(e, omega) / dot(u1, omega)
    w = tuple(a - c * b for a, b in zip(e, u1))
    K, KZ2_sq = plane_quadratic_forms(U, lam, t, w)
    return KZ2_sq / (K * K)


CUBIC_GOLDEN_T: Matrix = ((1, 0, 1), (1, 0, 0), (0, 1, 0))


def build_cubic_golden(bits: int = EIGEN_BITS) -> CubicIteration:
    return build_cubic(cubic_golden(), CUBIC_GOLDEN_T, "cubic-golden", bits)


NAMED = {"golden": (1,), "silver": (2,)}


def from_spec(text: str) -> IterationData:
    """Parse a frequency specification.

    Accepted forms: ``golden``, ``silver``, ``cubic-golden``, ``omega:a``,
    ``omega:1,a`` (any comma separated period) and a bracketed period
    such as ``[1,2]``.
    """
    s = text.strip().lower()
    if s in ("cubic-golden", "cubic_golden", "cubic"):
        return build_cubic_golden()
    if s in NAMED:
        return build_quadratic(ContinuedFraction(NAMED[s]))
    if s.startswith("omega:"):
        s = s[len("omega:"):]
    elif not (s.startswith("[") or s[:1].isdigit()):
        raise ValueError(f"unknown frequency spec {text!r}")
    return build_quadratic(ContinuedFraction.parse(s))


def apply_U_pow(data: IterationData, k: Sequence[int], n: int) -> tuple[int, ...]:
    """U**n k with exact integer entries."""
    if n < 0:
        raise ValueError("n must be non-negative")
    v = tuple(int(x) for x in k)
    for _ in range(n):
        v = tuple(sum(row[j] * v[j] for j in range(len(v))) for row in data.U)
    return v


def apply_T_transpose(data: IterationData, k: Sequence[int]) -> tuple[int, ...]:
    """U**-1 k = T^T k."""
    T = data.T
    n = len(k)
    return tuple(sum(T[j][i] * k[j] for j in range(n)) for i in range(n))
