"""Admissible and primitive vectors, resonant sequences and their limit numerators."""
from __future__ import annotations

import math
from contextlib import contextmanager
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from functools import cached_property
from typing import Iterator, Optional, Sequence, Union

import mpmath
import numpy as np

from .field import FieldElement
from .koch import (
    CubicIteration,
    IterationData,
    QuadraticIteration,
    apply_T_transpose,
    apply_U_pow,
    dot,
    plane_quadratic_forms,
)

__all__ = [
    "TieError",
    "NotPrimitiveError",
    "NotAdmissibleError",
    "Primitive",
    "ResonanceCatalog",
    "Sequence_",
    "k0_of",
    "is_admissible",
    "is_primitive",
    "gamma",
    "gamma_exact",
    "limit_data",
    "build_catalog",
    "classify",
    "canonical_sign",
    "tail_bound",
    "field_interval",
    "iv_prec",
    "slope_band_points",
]

J = Union[int, tuple[int, int]]

TIE_BITS = 512
SAFETY = 1.1


class TieError(ArithmeticError):
    """Two distinct primitives share the minimal limit numerator."""


class NotPrimitiveError(ValueError):
    pass


class NotAdmissibleError(ValueError):
    pass


@contextmanager
def iv_prec(bits: int):
    """Temporarily raise the working precision of mpmath interval arithmetic."""
    old = mpmath.iv.prec
    mpmath.iv.prec = bits
    try:
        yield mpmath.iv
    finally:
        mpmath.iv.prec = old


def field_interval(x: FieldElement, bits: int = 128) -> mpmath.mpi:
    """Certified mpmath interval enclosing ``x``."""
    a = x.approx(bits)
    with iv_prec(bits + 16) as iv:
        lo = iv.mpf(a.value) - iv.mpf(a.error)
        hi = iv.mpf(a.value) + iv.mpf(a.error)
        return iv.mpf([lo.a, hi.b])


def canonical_sign(k: Sequence[int]) -> tuple[int, ...]:
    """Representative of {k, -k} whose last nonzero component is positive."""
    k = tuple(int(x) for x in k)
    for x in reversed(k):
        if x:
            return k if x > 0 else tuple(-y for y in k)
    raise ValueError("zero vector has no canonical sign")


def _j_tuple(j: J) -> tuple[int, ...]:
    if isinstance(j, (int, np.integer)):
        return (int(j),)
    return tuple(int(x) for x in j)


def _j_label(data: IterationData, tail: Sequence[int]) -> J:
    return int(tail[0]) if data.ell == 2 else (int(tail[0]), int(tail[1]))


def _rint(x: FieldElement) -> int:
    """Closest integer, certified exactly."""
    n = math.floor(x.estimate() + 0.5)
    # fix up the float guess with exact comparisons
    while x - n > Fraction(1, 2):
        n += 1
    while x - n < Fraction(-1, 2):
        n -= 1
    d = x - n
    if d == Fraction(1, 2) or d == Fraction(-1, 2):
        raise ArithmeticError("half-integer value contradicts rational independence")
    return n


def k0_of(j: J, data: IterationData) -> tuple[int, ...]:
    """The admissible vector with tail ``j`` closest to the resonant plane."""
    tail = _j_tuple(j)
    if len(tail) != data.ell - 1:
        raise ValueError(f"j must have {data.ell - 1} components")
    if not any(tail):
        raise ValueError("j must be nonzero")
    x = sum((t * w for t, w in zip(tail, data.omega[1:])), data.field.zero())
    return (-_rint(x),) + tail


def is_admissible(k: Sequence[int], data: IterationData) -> bool:
    x = data.inner(k)
    return abs(x) < Fraction(1, 2)


def is_primitive(k: Sequence[int], data: IterationData) -> bool:
    x = abs(data.inner(k))
    return x < Fraction(1, 2) and x * data.lam * 2 > 1


def gamma_exact(k: Sequence[int], data: IterationData) -> FieldElement:
    """gamma_k = |<k,omega>| |k|**(ell-1); exact since the norm power is an integer."""
    return abs(data.inner(k)) * data.norm_power(k)


def gamma(k: Sequence[int], data: IterationData, bits: int = 128):
    """gamma_k with a certified enclosure."""
    return gamma_exact(k, data).approx(bits)


@dataclass
class Primitive:
    """A primitive vector together with its limit data."""

    j: J
    k0: tuple[int, ...]
    r: FieldElement
    p: object
    K: object
    gamma_star: FieldElement
    q: object = None
    E: Optional[mpmath.mpf] = None
    psi: Optional[mpmath.mpf] = None
    gamma_minus: object = None
    gamma_plus: object = None
    gcd: int = 1

    @property
    def gamma_star_f(self) -> float:
        return float(self.gamma_star)

    @property
    def gamma_minus_f(self) -> float:
        return float(self.gamma_minus)

    @property
    def gamma_plus_f(self) -> float:
        return float(self.gamma_plus)

    def describe(self, norm: float = 1.0) -> dict:
        out = {
            "j": list(_j_tuple(self.j)),
            "k0": list(self.k0),
            "r": float(self.r),
            "K": float(self.K),
            "gamma_minus": float(self.gamma_minus) / norm,
            "gamma_star": float(self.gamma_star) / norm,
            "gamma_plus": float(self.gamma_plus) / norm,
            "gcd": self.gcd,
        }
        if self.psi is not None:
            out["E"] = float(self.E)
            out["psi"] = float(self.psi)
        return out


def limit_data(j: J, data: IterationData) -> Primitive:
    """Limit numerators for the primitive with tail ``j``."""
    k0 = k0_of(j, data)
    if not is_primitive(k0, data):
        raise NotPrimitiveError(f"j={j} does not give a primitive vector (k0={k0})")
    r = data.inner(k0)
    c1 = r / data.u1_omega
    w = tuple(data.field(x) - c1 * u for x, u in zip(k0, data.u1))
    g = math.gcd(*k0)
    if data.ell == 2:
        K = sum((abs(x) for x in w), data.field.zero())
        gs = abs(r) * K
        p = dot([data.field(x) for x in k0], data.v2)
        return Primitive(j=_j_label(data, k0[1:]), k0=k0, r=r, p=p, K=K, gamma_star=gs,
                         gamma_minus=gs, gamma_plus=gs, gcd=g)
    assert isinstance(data, CubicIteration)
    K, _ = plane_quadratic_forms(data.U, data.lam, data.t_exact, w)
    gs = abs(r) * K
    with mpmath.workprec(256):
        p = sum(x * v for x, v in zip(k0, data.v2))
        q = sum(x * v for x, v in zip(k0, data.v3))
        a = sum(x * y for x, y in zip(data.v2, data.u2))
        b = sum(x * y for x, y in zip(data.v2, data.u3))
        den = a * a + b * b
        ec = (a * p + b * q) / den
        es = (b * p - a * q) / den
        E = mpmath.sqrt(ec * ec + es * es)
        psi = mpmath.atan2(es, ec)
        gsm = gs.to_mpf(256)
        gm = gsm * (1 - data.delta)
        gp = gsm * (1 + data.delta)
    return Primitive(j=_j_label(data, k0[1:]), k0=k0, r=r, p=p, K=K, gamma_star=gs, q=q,
                     E=E, psi=psi, gamma_minus=gm, gamma_plus=gp, gcd=g)


def tail_constant(data: IterationData) -> float:
    """The offset in the growth bound of the limit numerators."""
    u1 = [float(x) for x in data.u1]
    uw = abs(float(data.u1_omega))
    if data.ell == 2:
        return 0.5 * (1 + sum(abs(x) for x in u1) / uw)
    return math.sqrt(sum(x * x for x in u1)) / (2 * uw)


def tail_bound(data: IterationData, radius: float, bits: int = 128):
    """Certified lower bound (as mpmath interval) for gamma* (ell=2) or gamma^- (ell=3) when |j| >= radius."""
    with iv_prec(bits) as iv:
        lam = field_interval(data.lam, bits)
        uw = abs(field_interval(data.u1_omega, bits))
        R = iv.mpf(radius)
        if data.ell == 2:
            n1 = sum((abs(field_interval(x, bits)) for x in data.u1), iv.mpf(0))
            a = (1 + n1 / uw) / 2
            W = field_interval(data.Omega, bits)
            return ((1 + W) * R - a) / (2 * lam)
        n2 = iv.sqrt(sum((field_interval(x, bits) ** 2 for x in data.u1), iv.mpf(0)))
        c = n2 / (2 * uw)
        d = iv.sqrt(field_interval(data.delta_sq, bits))
        if radius < c.b:
            return iv.mpf(0)
        return (1 - d) / (2 * lam * (1 + d)) * (R - c) ** 2


def _tail_float(data: IterationData, radius: float) -> float:
    c = tail_constant(data)
    lam = data.lam_float
    if data.ell == 2:
        return ((1 + float(data.Omega)) * radius - c) / (2 * lam)
    d = float(data.delta)
    if radius < c:
        return 0.0
    return (1 - d) / (2 * lam * (1 + d)) * (radius - c) ** 2


def _screen_quadratic(data: QuadraticIteration, jmax: int):
    """Float screen of j = 1..jmax: (j, gamma* approx) for primitive j."""
    W = float(data.Omega)
    lam = data.lam_float
    x1 = float(data.u1[1])
    uw = float(data.u1_omega)
    j = np.arange(1, jmax + 1, dtype=np.float64)
    m = np.rint(j * W)
    r = j * W - m
    c = r / uw
    K = np.abs(-m - c) + np.abs(j - c * x1)
    g = np.abs(r) * K
    # keep ambiguous primitivity cases; they are decided exactly later
    keep = np.abs(r) > 1 / (2 * lam) - 1e-9
    return j[keep].astype(np.int64), g[keep], g[keep]


def _screen_cubic(data: CubicIteration, radius: int):
    W = float(data.Omega)
    W2 = W * W
    lam = data.lam_float
    u1 = np.array([float(x) for x in data.u1])
    uw = float(data.u1_omega)
    U = np.array(data.U, dtype=np.float64)
    t = float(data.t_exact)
    s = lam - t * t
    delta = float(data.delta)
    a1 = np.arange(-radius, radius + 1)
    J1, J2 = np.meshgrid(a1, np.arange(0, radius + 1), indexing="ij")
    J1 = J1.ravel()
    J2 = J2.ravel()
    mask = (J1 * J1 + J2 * J2 <= radius * radius) & ((J2 > 0) | ((J2 == 0) & (J1 > 0)))
    J1 = J1[mask].astype(np.float64)
    J2 = J2[mask].astype(np.float64)
    x = J1 * W + J2 * W2
    m = np.rint(x)
    r = x - m
    keep = np.abs(r) > 1 / (2 * lam) - 1e-9
    J1, J2, m, r = J1[keep], J2[keep], m[keep], r[keep]
    k = np.stack([-m, J1, J2], axis=1)
    c = (r / uw)[:, None]
    w = k - c * u1[None, :]
    Uw = w @ U.T
    jw = Uw - t * w
    K = 0.5 * ((w * w).sum(1) + (jw * jw).sum(1) / s)
    g = np.abs(r) * K
    js = np.stack([J1, J2], axis=1).astype(np.int64)
    return js, g, g * (1 - delta)


@dataclass
class ResonanceCatalog:
    """Primitives ordered by their lower limit numerator, with the primary one singled out."""

    data: IterationData
    primitives: list[Primitive]
    j0: Primitive
    gamma_star: FieldElement
    radius: float
    cutoff: float
    second: Optional[Primitive] = None
    B0_sq: Optional[FieldElement] = None
    B0m_cubed: Optional[mpmath.mpf] = None

    @property
    def ell(self) -> int:
        return self.data.ell

    @property
    def gamma_star_f(self) -> float:
        return float(self.gamma_star)

    @cached_property
    def B0(self) -> mpmath.mpf:
        """Separation constant B_0 (quadratic) or B_0^- (cubic)."""
        if self.ell == 2:
            return mpmath.sqrt(self.B0_sq.to_mpf(128))
        return mpmath.cbrt(self.B0m_cubed)

    def normalized(self, value) -> float:
        return float(value) / self.gamma_star_f

    def lookup(self, j: J) -> Optional[Primitive]:
        tail = canonical_sign(_j_tuple(j))
        for p in self.primitives:
            if _j_tuple(p.j) == tail:
                return p
        return None

    def sequence(self, prim: Optional[Primitive] = None) -> "Sequence_":
        return Sequence_(self.data, (prim or self.j0).k0)

    def describe(self) -> dict:
        norm = self.gamma_star_f
        out = {
            "frequency": self.data.describe(),
            "j0": list(_j_tuple(self.j0.j)),
            "k0_primary": list(self.j0.k0),
            "gamma_star": norm,
            "enumeration_radius": self.radius,
            "primitives": [p.describe() for p in self.primitives],
            "primitives_normalized": [p.describe(norm) for p in self.primitives],
        }
        if self.ell == 2:
            out["B0"] = float(self.B0)
        else:
            out["B0_minus"] = float(self.B0)
            out["tail_bound_j3"] = float(tail_bound(self.data, 3).a)
        return out


def build_catalog(data: IterationData, cutoff: float = 0.0, radius: Optional[float] = None) -> ResonanceCatalog:
    """Enumerate primitives until the growth bound certifies completeness.

    Every primitive whose normalized lower limit numerator (gamma* when ell=2,
    gamma^- when ell=3) lies below ``max(cutoff, second smallest)`` is included.
    If ``radius`` is given, enumeration covers ``|j| <= radius`` instead.
    """
    R = 16 if data.ell == 3 else max(16, int(4 * data.lam_float) + 8)
    while True:
        if data.ell == 2:
            js, g_star, g_low = _screen_quadratic(data, int(R))
        else:
            js, g_star, g_low = _screen_cubic(data, int(R))
        if len(js) < 2:
            R *= 2
            continue
        gmin = float(g_star.min())
        second_low = float(np.partition(g_low, 1)[1])
        need = max(second_low, gmin, cutoff * gmin)
        if radius is not None:
            if R >= radius:
                break
            R = radius
            continue
        if _tail_float(data, R) > SAFETY * need:
            break
        R = int(R * 1.6) + 1
    # exact stage for everything that may sit below the threshold
    thresh = need * (1 + 1e-6) + 1e-12
    if radius is not None:
        thresh = float("inf")
    sel = np.nonzero(g_low <= thresh)[0]
    prims = []
    for i in sel:
        j = int(js[i]) if data.ell == 2 else (int(js[i][0]), int(js[i][1]))
        try:
            prims.append(limit_data(j, data))
        except NotPrimitiveError:
            continue
    prims.sort(key=lambda p: (float(p.gamma_minus), _j_tuple(p.j)))
    j0 = min(prims, key=lambda p: float(p.gamma_star))
    rivals = [p for p in prims if p is not j0 and abs(float(p.gamma_star) - float(j0.gamma_star)) < 1e-9 * float(j0.gamma_star) + 1e-300]
    for p in rivals:
        if p.gamma_star == j0.gamma_star:
            raise TieError(f"primitives {j0.j} and {p.j} share gamma* = {float(p.gamma_star)}")
        # strictly ordered: pick the exact minimum
        if p.gamma_star < j0.gamma_star:
            j0 = p
    if radius is None:
        # the certified bound must exceed the threshold in exact interval arithmetic
        tb = tail_bound(data, R)
        if not tb.a > need * SAFETY / (1 + 1e-3):
            raise ArithmeticError("enumeration cutoff not certified")
    others = [p for p in prims if p is not j0]
    cat = ResonanceCatalog(data=data, primitives=prims, j0=j0, gamma_star=j0.gamma_star,
                           radius=float(R), cutoff=cutoff)
    if data.ell == 2:
        second = min(others, key=lambda p: float(p.gamma_star))
        for p in others:
            if p is not second and abs(float(p.gamma_star) - float(second.gamma_star)) < 1e-9 * float(second.gamma_star):
                if p.gamma_star < second.gamma_star:
                    second = p
        cat.second = second
        cat.B0_sq = second.gamma_star / j0.gamma_star
    else:
        second = min(others, key=lambda p: float(p.gamma_minus))
        cat.second = second
        with mpmath.workprec(256):
            cat.B0m_cubed = mpmath.mpf(second.gamma_minus) / mpmath.mpf(j0.gamma_plus)
    return cat


class Sequence_:
    """Resonant sequence s(j, n) = U**n k0(j), materialized lazily with exact integers."""

    def __init__(self, data: IterationData, k0: Sequence[int]):
        self.data = data
        self._terms = [tuple(int(x) for x in k0)]

    def __getitem__(self, n: int) -> tuple[int, ...]:
        if n < 0:
            raise IndexError("negative index")
        while len(self._terms) <= n:
            self._terms.append(apply_U_pow(self.data, self._terms[-1], 1))
        return self._terms[n]

    def __iter__(self) -> Iterator[tuple[int, ...]]:
        n = 0
        while True:
            yield self[n]
            n += 1

    def gamma(self, n: int) -> FieldElement:
        return gamma_exact(self[n], self.data)


class _IntegerForms:
    """Integer coordinates of <k,omega> and lam <k,omega> for fast exact tests.

    <k,omega> = (k @ A) . basis / D and lam <k,omega> = (k @ B) . basis / D2, with
    integer matrices A, B.  Signs go through a double filter and fall back
    to exact field arithmetic when it is inconclusive.
    """

    def __init__(self, data: IterationData):
        self.data = data
        fld = data.field
        rows = [w.coords for w in data.omega]
        self.D = math.lcm(*[c.denominator for r in rows for c in r])
        self.A = [[int(c * self.D) for c in r] for r in rows]
        lrows = [(w * data.lam).coords for w in data.omega]
        self.D2 = math.lcm(*[c.denominator for r in lrows for c in r])
        self.B = [[int(c * self.D2) for c in r] for r in lrows]
        self.w = fld._float
        self.fld = fld

    def _sign(self, coords: list[int]) -> int:
        acc = 0.0
        scale = 0.0
        p = 1.0
        for c in coords:
            acc += c * p
            scale += abs(c) * p
            p *= self.w
        if acc > 1e-12 * scale:
            return 1
        if acc < -1e-12 * scale:
            return -1
        return self.fld(*coords).sign() if any(coords) else 0

    def coords(self, k, M):
        d = len(M[0])
        return [sum(k[i] * M[i][c] for i in range(len(k))) for c in range(d)]

    def admissible(self, k) -> bool:
        c = self.coords(k, self.A)
        # |x| < 1/2  <=>  2c - D e0 < 0 < 2c + D e0
        lo = [2 * x for x in c]
        hi = lo[:]
        lo[0] -= self.D
        hi[0] += self.D
        return self._sign(lo) < 0 < self._sign(hi)

    def above_floor(self, k) -> bool:
        """|lam <k,omega>| > 1/2."""
        c = [2 * x for x in self.coords(k, self.B)]
        a = c[:]
        b = c[:]
        a[0] -= self.D2
        b[0] += self.D2
        return self._sign(a) > 0 or self._sign(b) < 0


_FORMS: dict[int, _IntegerForms] = {}


def _forms(data: IterationData) -> _IntegerForms:
    f = _FORMS.get(id(data))
    if f is None or f.data is not data:
        f = _FORMS[id(data)] = _IntegerForms(data)
    return f


def classify(k: Sequence[int], data: IterationData) -> tuple[J, int]:
    """Primitive tail j and iterate n with s(j, n) = k."""
    k = tuple(int(x) for x in k)
    if not any(k):
        raise NotAdmissibleError("zero vector")
    forms = _forms(data)
    if not forms.admissible(k):
        raise NotAdmissibleError(f"{k} is not admissible")
    xf = abs(sum(a * float(w) for a, w in zip(k, data.omega)))
    if xf < 1e-9:
        xf = abs(float(data.inner(k)))
    n = max(int(math.floor(math.log(1 / (2 * xf)) / math.log(data.lam_float))), 0)
    v = k
    for _ in range(n):
        v = apply_T_transpose(data, v)
    # float rounding can misplace n by one; settle it exactly
    for _ in range(4):
        if not forms.above_floor(v):
            v = apply_T_transpose(data, v)
            n += 1
        elif not forms.admissible(v):
            n -= 1
            v = apply_U_pow(data, v, 1)
        else:
            break
    if n < 0 or not (forms.admissible(v) and forms.above_floor(v)):
        raise ArithmeticError(f"classification of {k} failed")
    return _j_label(data, v[1:]), n


def slope_band_points(catalog: ResonanceCatalog, n_max: int = 40):
    """Points (ln|k|, -ln|<k,omega>|) of the primary sequence and the two bounding intercepts."""
    seq = catalog.sequence()
    pts = []
    for n in range(n_max + 1):
        k = seq[n]
        x = abs(catalog.data.inner(k)).to_mpf(64)
        nk = catalog.data.norm(k)
        pts.append((math.log(nk), -float(mpmath.log(x))))
    lo = -math.log(float(catalog.j0.gamma_plus))
    hi = -math.log(float(catalog.j0.gamma_minus))
    return pts, (lo, hi)
