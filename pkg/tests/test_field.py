from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from torisplit.field import (
    ContinuedFraction,
    NumberField,
    cubic_golden,
    quadratic_from_cf,
)

small = st.fractions(min_value=-50, max_value=50, max_denominator=40)


def golden():
    return quadratic_from_cf(ContinuedFraction((1,)))


def test_golden_minimal_polynomial():
    g = golden()
    assert g * g + g - 1 == 0
    assert abs(float(g) - (5 ** 0.5 - 1) / 2) < 1e-15


def test_cubic_golden_root():
    w = cubic_golden()
    assert w ** 3 + w - 1 == 0
    assert abs(float(w) - 0.6823278038280193) < 1e-15


@pytest.mark.parametrize("period,expected", [
    ((2,), 2 ** 0.5 - 1),
    ((1, 2), (3 ** 0.5 - 1)),
    ((3,), (13 ** 0.5 - 3) / 2),
])
def test_quadratic_values(period, expected):
    assert abs(float(quadratic_from_cf(ContinuedFraction(period))) - expected) < 1e-15


def test_parse_and_canonical():
    assert ContinuedFraction.parse("[1,1]").canonical() == ContinuedFraction((1,))
    assert ContinuedFraction.parse("2,1").canonical() == ContinuedFraction((1, 2))
    assert ContinuedFraction.parse("1 2 1 2").primitive() == ContinuedFraction((1, 2))
    with pytest.raises(ValueError):
        ContinuedFraction.parse("1,0")
    with pytest.raises(ValueError):
        ContinuedFraction.parse("")


@given(small, small, small, small)
@settings(max_examples=60, deadline=None)
def test_field_axioms(a, b, c, d):
    w = cubic_golden()
    F = w.field
    x = F(a, b, 0)
    y = F(c, d, a)
    assert (x + y) - y == x
    assert x * (y + 1) == x * y + x
    if not y.is_zero():
        assert (x / y) * y == x


@given(small, small)
@settings(max_examples=60, deadline=None)
def test_sign_matches_high_precision(a, b):
    g = golden()
    x = a + b * g
    with mpmath.workprec(200):
        ref = mpmath.mpf(a.numerator) / a.denominator + mpmath.mpf(b.numerator) / b.denominator * g.to_mpf(200)
    s = x.sign()
    if ref == 0:
        assert s == 0
    else:
        assert s == (1 if ref > 0 else -1)


def test_sign_of_tiny_element():
    # g**60 is ~1e-13; its coordinates are large and cancel
    g = golden()
    x = g ** 60
    assert x.sign() == 1
    assert (-x).sign() == -1
    assert abs(float(x) / ((5 ** 0.5 - 1) / 2) ** 60 - 1) < 1e-12


def test_approx_is_certified():
    g = golden() ** 200
    a = g.approx(100)
    with mpmath.workprec(400):
        ref = ((mpmath.sqrt(5) - 1) / 2) ** 200
    assert abs(a.value - ref) <= a.error
    assert a.error <= abs(ref) * mpmath.mpf(2) ** -100


def test_inverse():
    w = cubic_golden()
    x = 3 - 2 * w + w * w
    assert x * x.inverse() == 1


def test_bracket_contains_root():
    F = NumberField((-1, 1, 0), 0.68)
    lo, hi = F.bracket(80)
    assert lo < hi and hi - lo <= Fraction(1, 2 ** 79)
    assert F.poly(lo) * F.poly(hi) < 0
