"""Exact arithmetic in real quadratic and cubic fields Q(Omega).

Elements are stored as rational coordinates with respect to the power basis
``1, Omega[, Omega**2]`` and reduced with the monic minimal polynomial of
``Omega``.  Floating point only enters when an element is evaluated, and every
evaluation carries an error bound; signs are certified by interval
refinement on a rational isolating interval of ``Omega``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence, Union

import mpmath

__all__ = [
    "ContinuedFraction",
    "NumberField",
    "FieldElement",
    "RealApprox",
    "PrecisionExhausted",
    "quadratic_from_cf",
    "cubic_golden",
    "inner_product",
    "sign_and_abs",
]

Rational = Union[int, Fraction]

START_BITS = 64
MAX_BITS = 4096


class PrecisionExhausted(ArithmeticError):
    """Sign could not be certified below the precision cap."""


@dataclass(frozen=True)
class ContinuedFraction:
    """Purely periodic continued fraction ``[a1, ..., am, a1, ...]`` in (0, 1).

    The value is ``1/(a1 + 1/(a2 + ...))`` repeated forever.
    """

    period: tuple[int, ...]

    def __post_init__(self):
        period = tuple(int(a) for a in self.period)
        if not period:
            raise ValueError("continued fraction period must be non-empty")
        if any(a < 1 for a in period):
            raise ValueError(f"partial quotients must be >= 1, got {period}")
        object.__setattr__(self, "period", period)

    @classmethod
    def parse(cls, text: str) -> "ContinuedFraction":
        body = text.strip().strip("[]")
        parts = [p for p in re.split(r"[,;\s]+", body) if p]
        try:
            return cls(tuple(int(p) for p in parts))
        except ValueError as exc:
            raise ValueError(f"cannot parse continued fraction {text!r}") from exc

    def primitive(self) -> "ContinuedFraction":
        """Shortest period generating the same expansion."""
        w = self.period
        n = len(w)
        for d in range(1, n + 1):
            if n % d == 0 and w == w[:d] * (n // d):
                return ContinuedFraction(w[:d])
        return self

    def canonical(self) -> "ContinuedFraction":
        """Primitive period rotated to its lexicographically smallest form."""
        w = self.primitive().period
        return ContinuedFraction(min(w[i:] + w[:i] for i in range(len(w))))

    def mobius(self) -> tuple[int, int, int, int]:
        """Integer matrix ``(p, q, r, s)`` of the period map ``x -> (p x + q)/(r x + s)``.

        The map sends x to ``1/(a1 + 1/(... + 1/(am + x)))``.
        """
        # x -> 1/(a + x) has matrix [[0, 1], [1, a]]
        p, q, r, s = 1, 0, 0, 1
        for a in self.period:
            p, q, r, s = q, p * 1 + q * a, s, r + s * a
        return p, q, r, s

    def __str__(self) -> str:
        return "[" + ",".join(str(a) for a in self.period) + "]"


class NumberField:
    """The real field Q(Omega) for a given real root Omega of a monic rational polynomial.

    ``coeffs`` are ``(c0, ..., c_{d-1})`` so that ``Omega**d = -(c0 + c1 Omega + ...)``.
    ``approx`` picks out the real root; it is isolated exactly on construction.
    """

    def __init__(self, coeffs: Sequence[Rational], approx: float, name: str = ""):
        self.coeffs = tuple(Fraction(c) for c in coeffs)
        self.degree = len(self.coeffs)
        if self.degree not in (2, 3):
            raise ValueError("only quadratic and cubic fields are supported")
        self.name = name or self._default_name()
        self._float = float(approx)
        # longest-lived caches: bracket per bit level and high precision value
        self._brackets: dict[int, tuple[Fraction, Fraction]] = {}
        self._mp_cache: dict[int, mpmath.mpf] = {}
        self._float = float(self.root_mpf(80))
        self.bracket(START_BITS)

    def _default_name(self) -> str:
        terms = " + ".join(f"({c})x^{i}" for i, c in enumerate(self.coeffs))
        return f"x^{self.degree} + {terms}"

    def __repr__(self) -> str:
        return f"NumberField({self.name!r}, root~{self._float:.12g})"

    def poly(self, x):
        """Value of the minimal polynomial at ``x`` (works for Fractions and mpf)."""
        acc = 1
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def _dpoly(self, x):
        d = self.degree
        acc = d
        for i in range(d - 1, 0, -1):
            acc = acc * x + i * self.coeffs[i]
        return acc

    def root_mpf(self, bits: int) -> mpmath.mpf:
        cached = self._mp_cache.get(bits)
        if cached is not None:
            return cached
        with mpmath.workprec(bits + 20):
            x = mpmath.mpf(self._float)
            # Newton from the double seed; the root is simple
            for _ in range(4 + bits.bit_length()):
                fx = self.poly(x)
                dfx = self._dpoly(x)
                x -= fx / dfx
            value = +x
        self._mp_cache[bits] = value
        return value

    def bracket(self, bits: int) -> tuple[Fraction, Fraction]:
        """Rational interval of width <= 2**-bits containing Omega, verified by a sign change."""
        cached = self._brackets.get(bits)
        if cached is not None:
            return cached
        value = self.root_mpf(bits + 8)
        scale = 1 << (bits + 2)
        with mpmath.workprec(bits + 40):
            centre = int(mpmath.nint(value * scale))
        lo = Fraction(centre - 1, scale)
        hi = Fraction(centre + 1, scale)
        plo, phi = self.poly(lo), self.poly(hi)
        if plo == 0 or phi == 0 or (plo > 0) == (phi > 0):
            raise ArithmeticError(f"failed to isolate root of {self.name} at {bits} bits")
        self._brackets[bits] = (lo, hi)
        return lo, hi

    def __call__(self, *coords: Rational) -> "FieldElement":
        return FieldElement(self, coords)

    @property
    def omega(self) -> "FieldElement":
        return FieldElement(self, (0, 1))

    def one(self) -> "FieldElement":
        return FieldElement(self, (1,))

    def zero(self) -> "FieldElement":
        return FieldElement(self, ())

    def power_basis(self) -> tuple["FieldElement", ...]:
        """``(1, Omega[, Omega**2])`` as field elements."""
        return tuple(FieldElement(self, (0,) * i + (1,)) for i in range(self.degree))

    def __float__(self) -> float:
        return self._float


def _as_coords(field: NumberField, value) -> tuple[Fraction, ...]:
    if isinstance(value, FieldElement):
        if value.field is not field:
            raise ValueError("elements belong to different fields")
        return value.coords
    if isinstance(value, (int, Fraction)):
        return (Fraction(value),) + (Fraction(0),) * (field.degree - 1)
    raise TypeError(f"cannot combine FieldElement with {type(value).__name__}")


@dataclass(frozen=True)
class RealApprox:
    """A real number known to lie in ``[value - error, value + error]``."""

    value: mpmath.mpf
    error: mpmath.mpf
    bits: int

    def __float__(self) -> float:
        return float(self.value)

    def contains(self, x) -> bool:
        return abs(mpmath.mpf(x) - self.value) <= self.error


class FieldElement:
    """Immutable element ``c0 + c1 Omega [+ c2 Omega**2]`` with rational ``ci``."""

    __slots__ = ("field", "coords", "_sign", "_float")

    def __init__(self, field: NumberField, coords: Iterable[Rational]):
        coords = [c if type(c) is Fraction else Fraction(c) for c in coords]
        d = field.degree
        if len(coords) > d:
            coords = _reduce(field, coords)
        coords += [Fraction(0)] * (d - len(coords))
        self.field = field
        self.coords = tuple(coords)
        self._sign = None
        self._float = None

    # arithmetic -------------------------------------------------------
    def __add__(self, other):
        try:
            oc = _as_coords(self.field, other)
        except TypeError:
            return NotImplemented
        return FieldElement(self.field, (a + b for a, b in zip(self.coords, oc)))

    __radd__ = __add__

    def __neg__(self):
        return FieldElement(self.field, (-a for a in self.coords))

    def __sub__(self, other):
        try:
            oc = _as_coords(self.field, other)
        except TypeError:
            return NotImplemented
        return FieldElement(self.field, (a - b for a, b in zip(self.coords, oc)))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return FieldElement(self.field, (a * other for a in self.coords))
        try:
            oc = _as_coords(self.field, other)
        except TypeError:
            return NotImplemented
        d = self.field.degree
        prod = [Fraction(0)] * (2 * d - 1)
        for i, a in enumerate(self.coords):
            if a:
                for j, b in enumerate(oc):
                    if b:
                        prod[i + j] += a * b
        return FieldElement(self.field, prod)

    __rmul__ = __mul__

    def inverse(self) -> "FieldElement":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero field element")
        # columns: coordinates of self * Omega**i; solve M y = e0
        d = self.field.degree
        cols = []
        x = self
        for _ in range(d):
            cols.append(x.coords)
            x = x * self.field.omega
        matrix = [[cols[j][i] for j in range(d)] for i in range(d)]
        rhs = [Fraction(1)] + [Fraction(0)] * (d - 1)
        return FieldElement(self.field, _solve(matrix, rhs))

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            if other == 0:
                raise ZeroDivisionError("division by zero")
            return FieldElement(self.field, (a / other for a in self.coords))
        if isinstance(other, FieldElement):
            return self * other.inverse()
        return NotImplemented

    def __rtruediv__(self, other):
        return FieldElement(self.field, _as_coords(self.field, other)) * self.inverse()

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        result = self.field.one()
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    # comparison -------------------------------------------------------
    def is_zero(self) -> bool:
        return not any(self.coords)

    def __eq__(self, other) -> bool:
        try:
            oc = _as_coords(self.field, other)
        except (TypeError, ValueError):
            return NotImplemented
        return self.coords == oc

    def __hash__(self):
        return hash((id(self.field), self.coords))

    def sign(self) -> int:
        """Certified sign of the real number represented."""
        if self._sign is None:
            self._sign = _certified_sign(self)
        return self._sign

    def __lt__(self, other):
        return (self - other).sign() < 0

    def __le__(self, other):
        return (self - other).sign() <= 0

    def __gt__(self, other):
        return (self - other).sign() > 0

    def __ge__(self, other):
        return (self - other).sign() >= 0

    def __abs__(self):
        return -self if self.sign() < 0 else self

    # evaluation -------------------------------------------------------
    def estimate(self) -> float:
        """Plain double evaluation; may lose relative accuracy to cancellation."""
        w = self.field._float
        acc = 0.0
        for c in reversed(self.coords):
            acc = acc * w + (c.numerator / c.denominator if c else 0.0)
        return acc

    def __float__(self) -> float:
        if self._float is None:
            self._float = float(self.to_mpf(80))
        return self._float

    def _headroom(self) -> int:
        # bits lost to cancellation are bounded by the coordinate sizes
        return 2 * max((abs(c.numerator).bit_length() for c in self.coords), default=0) + 8

    def to_mpf(self, bits: int = 128) -> mpmath.mpf:
        """Value correct to about ``bits`` significant bits."""
        return self.approx(bits).value

    def approx(self, bits: int = 128) -> RealApprox:
        """Enclosure whose radius is at most ``2**-bits`` times the magnitude (or absolute if zero)."""
        if self.is_zero():
            return RealApprox(mpmath.mpf(0), mpmath.mpf(0), bits)
        level = bits + self._headroom()
        while True:
            lo, hi = _interval(self, level)
            with mpmath.workprec(bits + 32):
                a = mpmath.mpf(lo.numerator) / lo.denominator
                b = mpmath.mpf(hi.numerator) / hi.denominator
                mid = (a + b) / 2
                err = (b - a) / 2 + abs(mid) * mpmath.mpf(2) ** (-bits - 16)
                if err <= abs(mid) * mpmath.mpf(2) ** (-bits):
                    return RealApprox(mid, err, bits)
            if level > 8 * MAX_BITS:
                raise PrecisionExhausted("enclosure did not shrink")
            level *= 2

    def __repr__(self) -> str:
        names = ["", "W", "W^2"]
        parts = [f"{c}{'*' + names[i] if i else ''}" for i, c in enumerate(self.coords) if c]
        return f"FieldElement({' + '.join(parts) or '0'} ~ {float(self):.10g})"


def _reduce(field: NumberField, coords: list[Fraction]) -> list[Fraction]:
    d = field.degree
    coords = list(coords)
    for top in range(len(coords) - 1, d - 1, -1):
        c = coords[top]
        if c:
            for i, m in enumerate(field.coeffs):
                coords[top - d + i] -= c * m
        coords[top] = Fraction(0)
    return coords[:d]


def _solve(matrix: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction]:
    n = len(rhs)
    a = [row[:] + [rhs[i]] for i, row in enumerate(matrix)]
    for col in range(n):
        pivot = next(r for r in range(col, n) if a[r][col] != 0)
        a[col], a[pivot] = a[pivot], a[col]
        inv = 1 / a[col][col]
        a[col] = [x * inv for x in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [a[i][n] for i in range(n)]


def _interval(x: FieldElement, bits: int) -> tuple[Fraction, Fraction]:
    """Exact rational enclosure of ``x`` using the Omega bracket at ``bits``."""
    lo, hi = x.field.bracket(bits)
    if lo <= 0 <= hi:
        raise ArithmeticError("interval evaluation expects a positive generator")
    total_lo = total_hi = Fraction(0)
    plo = phi = Fraction(1)
    for c in x.coords:
        if c > 0:
            total_lo += c * plo
            total_hi += c * phi
        elif c < 0:
            total_lo += c * phi
            total_hi += c * plo
        plo *= lo
        phi *= hi
    return total_lo, total_hi


def _float_filter(x: FieldElement) -> int:
    """Sign from a double evaluation when the rounding bound excludes zero, else 0."""
    w = x.field._float
    value = 0.0
    scale = 0.0
    p = 1.0
    for c in x.coords:
        cf = c.numerator / c.denominator if c else 0.0
        value += cf * p
        scale += abs(cf) * p
        p *= w
    if not math.isfinite(value):
        return 0
    bound = 1e-13 * scale
    if value > bound:
        return 1
    if value < -bound:
        return -1
    return 0


def _certified_sign(x: FieldElement) -> int:
    if x.is_zero():
        return 0
    s = _float_filter(x)
    if s:
        return s
    bits = START_BITS
    while bits <= MAX_BITS:
        lo, hi = _interval(x, bits)
        if lo > 0:
            return 1
        if hi < 0:
            return -1
        bits *= 2
    raise PrecisionExhausted(f"sign of {x!r} not certified at {MAX_BITS} bits")


def sign_and_abs(x: FieldElement, bits: int = 128) -> tuple[int, RealApprox]:
    """Certified sign of ``x`` and an enclosure of ``|x|``."""
    s = x.sign()
    if s == 0:
        return 0, RealApprox(mpmath.mpf(0), mpmath.mpf(0), bits)
    return s, abs(x).approx(bits)


# constructors ---------------------------------------------------------------

@lru_cache(maxsize=None)
def _quadratic_field(period: tuple[int, ...]) -> NumberField:
    p, q, r, s = ContinuedFraction(period).mobius()
    # fixed point x = (p x + q)/(r x + s):  r x^2 + (s - p) x - q = 0
    b, c = Fraction(s - p, r), Fraction(-q, r)
    disc = b * b - 4 * c
    approx = (-float(b) + math.sqrt(float(disc))) / 2
    name = "Omega_" + ",".join(str(a) for a in period)
    return NumberField((c, b), approx, name=name)


def quadratic_from_cf(cf: ContinuedFraction) -> FieldElement:
    """The quadratic irrational in (0, 1) with purely periodic expansion ``cf``."""
    field = _quadratic_field(cf.period)
    omega = field.omega
    if not (0 < omega < 1):
        raise ArithmeticError(f"root {omega!r} outside (0, 1)")
    return omega


@lru_cache(maxsize=None)
def _cubic_golden_field() -> NumberField:
    return NumberField((-1, 1, 0), 0.6823278038280193, name="cubic-golden")


def cubic_golden() -> FieldElement:
    """The real root of ``x**3 + x - 1``."""
    return _cubic_golden_field().omega


def inner_product(k: Sequence[int], omega: Sequence[FieldElement]) -> FieldElement:
    """Exact ``<k, omega>`` for an integer vector ``k``."""
    if len(k) != len(omega):
        raise ValueError(f"dimension mismatch: {len(k)} vs {len(omega)}")
    field = omega[0].field
    coords = [Fraction(0)] * field.degree
    for ki, wi in zip(k, omega):
        if ki:
            for i, c in enumerate(wi.coords):
                coords[i] += ki * c
    return FieldElement(field, coords)
