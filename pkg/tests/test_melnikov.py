import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from torisplit.koch import from_spec
from torisplit.melnikov import (
    C0_of,
    G,
    ModelParams,
    SplittingModel,
    coefficient,
    separation_check,
    separation_margin_cubic,
)
from torisplit.resonances import build_catalog


@pytest.fixture(scope="module")
def golden():
    return SplittingModel(build_catalog(from_spec("golden")))


@pytest.fixture(scope="module")
def om12():
    return SplittingModel(build_catalog(from_spec("omega:1,2")))


@pytest.fixture(scope="module")
def cubic():
    return SplittingModel(build_catalog(from_spec("cubic-golden")))


pos = st.floats(min_value=1e-6, max_value=1e3)


@given(pos, pos, st.sampled_from([2, 3]))
@settings(max_examples=50, deadline=None)
def test_G_minimum(X, Y, ell):
    assert math.isclose(float(G(X, X, Y, ell)), Y ** (1 / ell), rel_tol=1e-12)
    for f in (0.5, 2.0):
        assert float(G(f * X, X, Y, ell)) > Y ** (1 / ell)


@pytest.mark.parametrize("ell", [2, 3])
def test_G_convex_in_log(ell):
    e = np.geomspace(1e-9, 1e-1, 400)
    v = G(e, 1e-4, 1.0, ell)
    assert np.all(np.diff(v, 2) > 0)


def test_A1_from_G(golden):
    lam = golden.lam
    A1 = 0.5 * (math.sqrt(lam) + 1 / math.sqrt(lam))
    assert math.isclose(float(G(1.0, lam ** 2, 1.0, 2)), A1, rel_tol=1e-14)
    assert math.isclose(golden.bounds()["A1"], A1, rel_tol=1e-15)
    assert abs(A1 - 1.0291) < 1e-4


def test_eps_star_ratio(om12):
    n = np.arange(6)
    r = om12.eps_star(n[1:]) / om12.eps_star(n[:-1])
    assert np.allclose(r, om12.lam ** -4, rtol=1e-12)


@pytest.mark.parametrize("name", ["om12", "cubic"])
def test_scaling_identity(name, request):
    m = request.getfixturevalue(name)
    rng = np.random.default_rng(1)
    for _ in range(20):
        eps = math.exp(rng.uniform(math.log(1e-10), math.log(1e-2)))
        n = int(rng.integers(0, 6))
        lhs = float(m.g_star(eps, n))
        rhs = float(m.b(n)) ** (1 / m.ell) * float(G(eps / float(m.eps_star(n)), 1.0, 1.0, m.ell))
        assert math.isclose(lhs, rhs, rel_tol=1e-12)
        if m.ell == 2:
            assert math.isclose(float(m.g_star(eps, n + 1)), float(m.g_star(eps * m.lam ** 4, n)), rel_tol=1e-12)


def test_cubic_b_period_22(cubic):
    n = np.arange(0, 40)
    assert np.all(np.abs(cubic.b(n + 22) - cubic.b(n)) < 0.02)


def test_C0_cubic(cubic):
    rho, gs = cubic.rho, cubic.gstar
    assert math.isclose(cubic.C0, 3 * (rho / 2) ** (2 / 3) * (math.pi * gs / 2) ** (1 / 3), rel_tol=1e-12)
    assert math.isclose(C0_of(3, 2.0, gs), 3 * (1.0) ** (2 / 3) * (math.pi * gs / 2) ** (1 / 3), rel_tol=1e-12)


@pytest.mark.parametrize("name", ["golden", "om12"])
def test_quadratic_h1_at_special_points(name, request):
    m = request.getfixturevalue(name)
    A1 = m.bounds()["A1"]
    for n in range(1, 5):
        h, N = m.h1_scalar(float(m.eps_star(n)))
        assert math.isclose(h, 1.0, abs_tol=1e-12) and N == n
        h, _ = m.h1_scalar(float(m.eps_prime(n)))
        assert math.isclose(h, A1, abs_tol=1e-9)
        # dominance exchange: the two branches meet
        e = float(m.eps_prime(n))
        assert math.isclose(float(m.g_star(e, n)), float(m.g_star(e, n - 1)), rel_tol=1e-9) or \
            math.isclose(float(m.g_star(e, n)), float(m.g_star(e, n + 1)), rel_tol=1e-9)


@pytest.mark.parametrize("name", ["golden", "om12"])
def test_quadratic_periodicity(name, request):
    m = request.getfixturevalue(name)
    eps = np.geomspace(1e-8, 1e-3, 2000)
    a, _ = m.h1(eps)
    b, _ = m.h1(eps * m.lam ** 4)
    assert np.max(np.abs(a - b)) < 1e-9


def test_cubic_bounds(cubic):
    b = cubic.bounds()
    assert abs(b["A0_minus"] - (1 - 0.2895) ** (1 / 3)) < 1e-4
    assert abs(b["A1_plus"] - 1.0909) < 1e-3
    eps = np.geomspace(1e-8, 1e-3, 10000)
    h, _ = cubic.h1(eps)
    assert np.all(h >= b["A0_minus"]) and np.all(h <= b["A1_plus"] + 1e-9)


def test_cubic_g_star_below_g_plus(cubic):
    eps = np.geomspace(1e-8, 1e-3, 500)
    for n in range(0, 30):
        assert np.all(cubic.g_star(eps, n) <= cubic.g_plus(eps, n) + 1e-15)


def test_cubic_g_plus_crossing(cubic):
    c = cubic.bounds()["A1_plus_crossing"]
    for n in range(0, 10):
        e = float(cubic.eps_prime(n))
        a, b = float(cubic.g_plus(e, n)), float(cubic.g_plus(e, n + 1))
        assert math.isclose(a, b, rel_tol=1e-12)
        assert math.isclose(a, c, rel_tol=1e-12)


def test_separation():
    assert separation_check(build_catalog(from_spec("golden")))
    assert not separation_check(build_catalog(from_spec("omega:14")))
    cat = build_catalog(from_spec("cubic-golden"))
    assert separation_check(cat)
    assert separation_margin_cubic(cat).a > 0


@pytest.mark.parametrize("name", ["golden", "om12", "cubic"])
def test_h2_not_below_h1(name, request):
    m = request.getfixturevalue(name)
    eps = np.geomspace(1e-8, 1e-3, 400)
    h1, _ = m.h1_actual(eps)
    h2 = m.h2(eps, dominant="actual")
    assert np.all(h2 >= h1)


def test_coefficient_gap_and_minimum(cubic):
    k = (0, 0, 1)
    c = coefficient(k, 1e-4, ModelParams(), cubic.data, cubic.gstar)
    assert c.relative_gap <= math.exp(-math.pi * c.nu) * (1 + 1e-9)
    ck = coefficient(k, c.eps_k, ModelParams(), cubic.data, cubic.gstar)
    assert math.isclose(ck.beta, cubic.C0 * ck.gamma_tilde ** (1 / 3) / c.eps_k ** (1 / 6), rel_tol=1e-10)
    assert math.isclose(ck.g, ck.gamma_tilde ** (1 / 3), rel_tol=1e-10)
    assert c.g >= c.gamma_tilde ** (1 / 3)


def test_coefficient_underflow_safe(golden):
    c = golden.coefficient((-1, 1), 1e-12)
    assert math.isfinite(c.ln_L) and c.ln_L < -700


def test_params():
    with pytest.raises(ValueError):
        ModelParams(rho=0)
    assert ModelParams(p=3.5).in_regime and not ModelParams(p=2).in_regime


@pytest.mark.parametrize("name", ["golden", "cubic"])
def test_envelope_ratio(name, request):
    m = request.getfixturevalue(name)
    for eps in np.geomspace(1e-8, 1e-2, 25):
        est = m.max_splitting_estimate(float(eps))
        assert 0.1 <= est.ratio <= 10
