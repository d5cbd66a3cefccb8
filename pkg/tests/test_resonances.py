import dataclasses
import math

import numpy as np
import pytest

from torisplit.field import ContinuedFraction
from torisplit.koch import apply_U_pow, build_cubic_golden, build_quadratic, from_spec
from torisplit.resonances import (
    NotAdmissibleError,
    NotPrimitiveError,
    build_catalog,
    classify,
    slope_band_points,
    gamma,
    gamma_exact,
    is_admissible,
    is_primitive,
    k0_of,
    limit_data,
    tail_bound,
)


@pytest.fixture(scope="module")
def cubic():
    return build_cubic_golden()


@pytest.fixture(scope="module")
def cubic_cat(cubic):
    return build_catalog(cubic, cutoff=10)


def test_k0_examples(cubic):
    assert k0_of((0, 1), cubic) == (0, 0, 1)
    assert k0_of((2, 0), cubic) == (-1, 2, 0)
    assert k0_of(1, from_spec("golden")) == (-1, 1)


def test_admissible_primitive(cubic):
    assert is_primitive((0, 0, 1), cubic)
    assert not is_admissible((1, 0, 0), cubic)
    assert is_admissible((1, -1, 0), cubic) and not is_primitive((1, -1, 0), cubic)
    with pytest.raises(NotPrimitiveError):
        limit_data((1, -1), cubic) if not is_primitive(k0_of((1, -1), cubic), cubic) else limit_data((9, 9), cubic)


def test_gamma_examples(cubic):
    W = cubic.Omega
    assert gamma_exact((0, 0, 1), cubic) == W * W
    g = from_spec("golden")
    assert gamma_exact((-1, 1), g) == 2 * g.Omega ** 2
    assert abs(float(gamma((-1, 1), g)) - 0.7639320225) < 1e-9


def test_fundamental_equality(cubic):
    k0 = (0, 0, 1)
    r = abs(cubic.inner(k0))
    for n in range(8):
        k = apply_U_pow(cubic, k0, n)
        assert abs(cubic.inner(k)) == r / cubic.lam ** n


def test_cubic_catalog_table(cubic_cat):
    rows = {p.k0: p for p in cubic_cat.primitives}
    expected = {
        (0, 0, 1): (0.3459, 0.4867, 0.6276),
        (-1, 2, 0): (1.0376, 1.4602, 1.8829),
        (-2, 1, 2): (3.1127, 4.3807, 5.6488),
    }
    for k0, vals in expected.items():
        p = rows[k0]
        got = (float(p.gamma_minus), float(p.gamma_star), float(p.gamma_plus))
        assert np.allclose(got, vals, atol=5e-5)
    assert cubic_cat.j0.k0 == (0, 0, 1)
    assert abs(float(cubic_cat.B0) - 1.1824) < 1e-3
    W = cubic_cat.data.Omega
    assert cubic_cat.gamma_star == (5 + W + 4 * W * W) * 2 / 31


def test_cubic_tail_bound(cubic):
    assert float(tail_bound(cubic, 3).a) >= 1.2742


def test_catalog_sorted_and_normalized(cubic_cat):
    lows = [float(p.gamma_minus) for p in cubic_cat.primitives]
    assert lows == sorted(lows)
    assert cubic_cat.normalized(cubic_cat.j0.gamma_star) == 1.0


@pytest.mark.parametrize("period,B0", [((1,), 2.0), ((2,), math.sqrt(2)), ((1, 2), math.sqrt(2)), ((1, 12), 2.0)])
def test_quadratic_B0(period, B0):
    cat = build_catalog(build_quadratic(ContinuedFraction(period)))
    assert abs(float(cat.B0) - B0) < 1e-12


def test_classify(cubic):
    k = apply_U_pow(cubic, (0, 0, 1), 2)
    assert classify(k, cubic) == ((0, 1), 2)
    assert classify((0, 0, 1), cubic) == ((0, 1), 0)
    with pytest.raises(NotAdmissibleError):
        classify((1, 0, 0), cubic)


@pytest.mark.parametrize("spec", ["golden", "silver"])
def test_norm_growth(spec):
    d = from_spec(spec)
    cat = build_catalog(d)
    seq = cat.sequence()
    K = float(cat.j0.K)
    assert abs(d.norm(seq[25]) / float(d.lam) ** 25 / K - 1) <= 1e-6


def test_quadratic_convergence_rate():
    d = from_spec("omega:1,2")
    cat = build_catalog(d)
    seq = cat.sequence()
    gs = cat.gamma_star
    errs = [abs(float(seq.gamma(n) - gs)) for n in range(2, 12)]
    errs = [e for e in errs if e > 0]
    slope = np.polyfit(np.arange(len(errs)), np.log(errs), 1)[0]
    assert abs(slope / (-2 * math.log(float(d.lam))) - 1) < 0.05


def test_cubic_oscillation_band(cubic_cat):
    seq = cubic_cat.sequence()
    p = cubic_cat.j0
    for n in range(6, 61):
        g = float(seq.gamma(n))
        assert float(p.gamma_minus) - 1e-3 <= g <= float(p.gamma_plus) + 1e-3


def test_cubic_n5_excursion(cubic_cat):
    # the exact iterate s0(5) = (1, 0, -2) sits 1.57e-3 below the lower limit value
    seq = cubic_cat.sequence()
    assert seq[5] == (1, 0, -2)
    dev = float(seq.gamma(5)) - float(cubic_cat.j0.gamma_minus)
    assert -1.6e-3 < dev < -1.5e-3


def test_slope_band(cubic_cat):
    pts, (lo, hi) = slope_band_points(cubic_cat, 40)
    for n, (u, v) in enumerate(pts):
        if n < 6:
            continue
        assert lo - 1e-3 <= v - 2 * u <= hi + 1e-3


def test_scale_invariance():
    d = from_spec("omega:1,3")
    cat = build_catalog(d)
    scaled = dataclasses.replace(d, u1=tuple(3 * x for x in d.u1))
    cat2 = build_catalog(scaled)
    assert cat.gamma_star == cat2.gamma_star
    assert cat.B0_sq == cat2.B0_sq


def test_scale_invariance_cubic(cubic, cubic_cat):
    f = 2.5
    scaled = dataclasses.replace(cubic, u1=tuple(-2 * x for x in cubic.u1),
                                 v2=tuple(f * x for x in cubic.v2), v3=tuple(f * x for x in cubic.v3),
                                 u2=tuple(x / 3 for x in cubic.u2), u3=tuple(x / 3 for x in cubic.u3))
    cat2 = build_catalog(scaled, cutoff=10)
    for a, b in zip(cubic_cat.primitives, cat2.primitives):
        assert a.k0 == b.k0
        assert a.gamma_star == b.gamma_star
        assert abs(float(a.gamma_minus) - float(b.gamma_minus)) < 1e-12
    assert abs(float(cubic_cat.B0) - float(cat2.B0)) < 1e-12
