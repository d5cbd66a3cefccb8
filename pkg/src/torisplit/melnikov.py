"""Melnikov coefficients, exponent functions g_k, h_1, h_2 and the splitting estimates.

All functions of epsilon are vectorized over numpy arrays; constants are fixed
once per model from the certified arithmetic of the catalog.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from functools import cached_property
from typing import Mapping, Optional, Sequence

import mpmath
import numpy as np
from scipy.optimize import minimize_scalar

from .koch import CubicIteration, IterationData
from .resonances import (
    ResonanceCatalog,
    Sequence_,
    build_catalog,
    canonical_sign,
    field_interval,
    iv_prec,
)

__all__ = [
    "ModelParams",
    "HarmonicCoefficient",
    "SplittingEstimate",
    "SplittingModel",
    "G",
    "C0_of",
    "D0_of",
    "log_sinh",
    "coefficient",
    "separation_check",
    "separation_margin_cubic",
]

LN2 = math.log(2.0)


@dataclass(frozen=True)
class ModelParams:
    """Perturbation parameters: Fourier decay ``rho``, exponent ``p`` in mu = eps**p, phases."""

    rho: float = 1.0
    p: float = 3.5
    phases: Mapping[tuple, float] = dc_field(default_factory=dict)

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError("rho must be positive")

    @property
    def in_regime(self) -> bool:
        return self.p > 3

    def phase(self, k: Sequence[int]) -> float:
        return float(self.phases.get(tuple(k), 0.0))


def G(eps, X, Y, ell: int):
    """(Y^(1/ell)/ell) [(ell-1)(eps/X)^(1/2ell) + (X/eps)^((ell-1)/2ell)]."""
    eps = np.asarray(eps, dtype=float)
    r = np.log(eps) - np.log(X)
    return np.power(Y, 1.0 / ell) / ell * ((ell - 1) * np.exp(r / (2 * ell)) + np.exp(-r * (ell - 1) / (2 * ell)))


def G_log(ln_eps, ln_X, Y, ell: int):
    r = np.asarray(ln_eps) - ln_X
    return np.power(Y, 1.0 / ell) / ell * ((ell - 1) * np.exp(r / (2 * ell)) + np.exp(-r * (ell - 1) / (2 * ell)))


def C0_of(ell: int, rho: float, gstar: float) -> float:
    return ell * (rho / (ell - 1)) ** ((ell - 1) / ell) * (math.pi * gstar / 2) ** (1.0 / ell)


def D0_of(ell: int, rho: float, gstar: float) -> float:
    return ((ell - 1) * math.pi * gstar / (2 * rho)) ** 2


def log_sinh(x):
    """ln sinh(x) for x > 0 without overflow."""
    x = np.asarray(x, dtype=float)
    return x - LN2 + np.log1p(-np.exp(-2 * x))


@dataclass(frozen=True)
class HarmonicCoefficient:
    k: tuple[int, ...]
    eps: float
    nu: float
    alpha: float
    beta: float
    ln_L: float
    ln_L_approx: float
    g: float
    eps_k: float
    gamma_tilde: float

    @property
    def L(self) -> float:
        return math.exp(self.ln_L)

    @property
    def L_approx(self) -> float:
        return math.exp(self.ln_L_approx)

    @property
    def relative_gap(self) -> float:
        """|L - alpha e^-beta| / L, which equals exp(-pi nu)."""
        return -math.expm1(self.ln_L_approx - self.ln_L)


def coefficient(k: Sequence[int], eps: float, params: ModelParams, data: IterationData, gstar: float) -> HarmonicCoefficient:
    """Melnikov potential coefficient of harmonic ``k`` and its exponent data."""
    k = tuple(int(x) for x in k)
    if not any(k) or not eps > 0:
        raise ValueError("need k != 0 and eps > 0")
    ell = data.ell
    x = abs(float(data.inner(k).to_mpf(64)))
    nk = data.norm(k)
    nu = x / math.sqrt(eps)
    rho = params.rho
    ln_L = math.log(2 * math.pi * nu) - rho * nk - float(log_sinh(math.pi * nu / 2))
    alpha = 4 * math.pi * nu
    beta = rho * nk + math.pi * nu / 2
    C0 = C0_of(ell, rho, gstar)
    D0 = D0_of(ell, rho, gstar)
    gt = x * nk ** (ell - 1) / gstar
    return HarmonicCoefficient(
        k=k,
        eps=eps,
        nu=nu,
        alpha=alpha,
        beta=beta,
        ln_L=ln_L,
        ln_L_approx=math.log(alpha) - beta,
        g=beta * eps ** (1 / (2 * ell)) / C0,
        eps_k=D0 * gt * gt / nk ** (2 * ell),
        gamma_tilde=gt,
    )


@dataclass(frozen=True)
class SplittingEstimate:
    eps: float
    N: int
    k_dominant: tuple[int, ...]
    h1: float
    ln_envelope: float
    ln_first_order: float

    @property
    def envelope(self) -> float:
        return math.exp(self.ln_envelope)

    @property
    def first_order(self) -> float:
        return math.exp(self.ln_first_order)

    @property
    def ratio(self) -> float:
        return math.exp(self.ln_first_order - self.ln_envelope)


class _Pool:
    """Exact harmonics with float summaries: canonical k, |k|, |<k,omega>|."""

    def __init__(self):
        self.keys: dict[tuple, int] = {}
        self.k: list[tuple[int, ...]] = []
        self.norm: list[float] = []
        self.absx: list[float] = []
        self.tag: list[tuple] = []

    def add(self, k, norm, absx, tag):
        c = canonical_sign(k)
        if c in self.keys:
            return
        self.keys[c] = len(self.k)
        self.k.append(c)
        self.norm.append(norm)
        self.absx.append(absx)
        self.tag.append(tag)

    def arrays(self):
        return np.array(self.norm), np.array(self.absx)


class SplittingModel:
    """Exponent machinery for one frequency vector and one perturbation."""

    def __init__(self, catalog: ResonanceCatalog, params: ModelParams = ModelParams(), eps_min: float = 1e-13,
                 eps_max: float = 1e-1):
        self.catalog = catalog
        self.params = params
        self.data = catalog.data
        self.ell = ell = catalog.ell
        self.rho = params.rho
        self.gstar = float(catalog.gamma_star)
        self.lam = float(catalog.data.lam)
        self.ln_lam = math.log(self.lam)
        self.C0 = C0_of(ell, self.rho, self.gstar)
        self.D0 = D0_of(ell, self.rho, self.gstar)
        self.K0 = float(catalog.j0.K)
        self.eps_min = eps_min
        self.eps_max = eps_max
        if ell == 3:
            d: CubicIteration = catalog.data
            self.delta = float(d.delta)
            self.phi = float(d.phi)
            self.theta = float(d.theta)
            self.psi0 = float(catalog.j0.psi)
        else:
            self.delta = 0.0
        # spacing of successive minima in ln eps
        self.step = 2 * ell / (ell - 1) * self.ln_lam

    # asymptotic primary family ------------------------------------------
    def b(self, n):
        n = np.asarray(n)
        if self.ell == 2:
            return np.ones(n.shape)
        return 1 + self.delta * np.cos(2 * n * self.phi + 2 * self.psi0 - self.theta)

    def ln_eps_star(self, n):
        ell = self.ell
        n = np.asarray(n)
        e = 2 * ell / (ell - 1)
        return (math.log(self.D0) - e * math.log(self.K0)
                - 2 / (ell - 1) * (np.log(self.b(n)) + ell * n * self.ln_lam))

    def eps_star(self, n):
        return np.exp(self.ln_eps_star(n))

    def g_star(self, eps, n):
        return G_log(np.log(eps), self.ln_eps_star(n), self.b(n), self.ell)

    def _window(self, ln_eps):
        """Candidate n for each ln eps: the minimizer lies within the certified window."""
        ell = self.ell
        d = self.delta
        wide = 2 * ell * self.ln_lam + (math.log((1 + d) / (1 - d)) if d else 0.0)
        base = math.log(self.D0) - 2 * ell / (ell - 1) * math.log(self.K0)
        # ln eps*_n lies in base - 2/(ell-1) ln b - step n, b in [1-d, 1+d]
        bl = 2 / (ell - 1) * math.log(1 - d) if d else 0.0
        bh = 2 / (ell - 1) * math.log(1 + d) if d else 0.0
        lo = np.floor((base - bh - ln_eps - wide) / self.step)
        hi = np.ceil((base - bl - ln_eps + wide) / self.step)
        return np.maximum(lo, 0).astype(int), np.maximum(hi, 0).astype(int)

    def h1(self, eps):
        """min over n >= 0 of g*_n(eps) and the minimizing index N."""
        eps = np.atleast_1d(np.asarray(eps, dtype=float))
        ln_eps = np.log(eps)
        lo, hi = self._window(ln_eps)
        width = int((hi - lo).max()) + 1
        ns = lo[:, None] + np.arange(width)[None, :]
        vals = G_log(ln_eps[:, None], self.ln_eps_star(ns), self.b(ns), self.ell)
        vals = np.where(ns <= hi[:, None], vals, np.inf)
        idx = np.argmin(vals, axis=1)
        rows = np.arange(len(eps))
        return vals[rows, idx], ns[rows, idx]

    def h1_scalar(self, eps: float) -> tuple[float, int]:
        v, n = self.h1(np.array([eps]))
        return float(v[0]), int(n[0])

    # bounds --------------------------------------------------------------
    def bounds(self) -> dict:
        """A_0, A_1 (quadratic) or A_0^-, A_1^+ (cubic) from lam and delta."""
        lam = self.lam
        if self.ell == 2:
            return {"A0": 1.0, "A1": 0.5 * (1 / math.sqrt(lam) + math.sqrt(lam))}
        d = self.delta
        c = (math.sqrt(lam) + 1) / (2 * lam)
        return {
            "A0_minus": (1 - d) ** (1 / 3),
            # closed form as commonly quoted
            "A1_plus": (1 + d) ** (1 / 3) / 3 * (2 * c ** (1 / 6) + c ** (-1 / 3)),
            # value of g+_n = g+_{n+1} at their crossing
            "A1_plus_crossing": (1 + d) ** (1 / 3) / 3 * (2 * c ** (1 / 3) + c ** (-2 / 3)),
        }

    def eps_prime(self, n):
        """Crossing points of consecutive families (g*_n, g*_{n+1}) or (g+_n, g+_{n+1})."""
        if self.ell == 2:
            return self.eps_star(n) / self.lam ** 2
        c = (math.sqrt(self.lam) + 1) / (2 * self.lam)
        return c * c * self.eps_plus(n)

    def ln_eps_plus(self, n):
        n = np.asarray(n)
        return math.log(self.D0) - 3 * math.log(self.K0) - math.log(1 + self.delta) - 3 * n * self.ln_lam

    def eps_plus(self, n):
        return np.exp(self.ln_eps_plus(n))

    def g_plus(self, eps, n):
        return G_log(np.log(eps), self.ln_eps_plus(n), 1 + self.delta, 3)

    # actual harmonics ----------------------------------------------------
    def g_direct(self, eps, norm, absx):
        """g_k(eps) = eps^(1/2ell) (rho |k| + pi |<k,omega>| / (2 sqrt eps)) / C0."""
        eps = np.asarray(eps, dtype=float)
        return eps ** (1 / (2 * self.ell)) * (self.rho * norm + math.pi * absx / (2 * np.sqrt(eps))) / self.C0

    def g_k(self, eps, k: Sequence[int]):
        absx = abs(float(self.data.inner(k).to_mpf(64)))
        return self.g_direct(eps, self.data.norm(k), absx)

    def _n_limit(self) -> int:
        # iterate sequences until eps_k is far below eps_min
        margin = 3 * self.step + 4
        n = (math.log(self.D0) - 2 * self.ell / (self.ell - 1) * math.log(self.K0) - math.log(self.eps_min) + margin) / self.step
        return max(int(math.ceil(n)), 2) + 2

    @cached_property
    def pool_threshold(self) -> float:
        """Normalized numerator above which a harmonic cannot reach the second minimum."""
        ell = self.ell
        d = self.delta
        ratio = ((1 + d) / (1 - d)) ** (2 / (ell - 1)) if d else 1.0
        H = (1 + d) ** (1 / ell) * float(G(np.exp(self.step) * ratio, 1.0, 1.0, ell))
        return 1.2 * H

    @cached_property
    def small_radius(self) -> int:
        """|k| beyond which rho |k| alone pushes g above the pool threshold at eps_max."""
        return int(math.ceil(1.5 * self.pool_threshold * self.C0 / (self.rho * self.eps_max ** (1 / (2 * self.ell)))))

    @cached_property
    def pool(self) -> _Pool:
        data = self.data
        H = self.pool_threshold
        cat = build_catalog(data, cutoff=H ** self.ell)
        self.pool_catalog = cat
        pool = _Pool()
        nmax = self._n_limit()
        gs = float(cat.gamma_star)
        for prim in cat.primitives:
            if float(prim.gamma_minus) / gs > H ** self.ell * 1.0001 and prim is not cat.j0:
                continue
            seq = Sequence_(data, prim.k0)
            for n in range(nmax + 1):
                k = seq[n]
                pool.add(k, data.norm(k), abs(float(data.inner(k).to_mpf(64))), (prim.j, n))
        R = self.small_radius
        for k in _ball(data.ell, R, data.ell == 2):
            pool.add(k, data.norm(k), abs(float(data.inner(k).to_mpf(64))), None)
        return pool

    @cached_property
    def _primary_index(self) -> np.ndarray:
        pool = self.pool
        seq = Sequence_(self.data, self.catalog.j0.k0)
        return np.array([pool.keys[canonical_sign(seq[n])] for n in range(self._n_limit() + 1)])

    def pool_g(self, eps) -> np.ndarray:
        eps = np.atleast_1d(np.asarray(eps, dtype=float))
        norm, absx = self.pool.arrays()
        return self.g_direct(eps[:, None], norm[None, :], absx[None, :])

    def h1_actual(self, eps):
        """min over the primary sequence of g_k with actual numerators; returns (value, N)."""
        g = self.pool_g(eps)[:, self._primary_index]
        idx = np.argmin(g, axis=1)
        return g[np.arange(len(idx)), idx], idx

    def h2(self, eps, dominant: str = "asymptotic"):
        """Second exponent: min of g_k over harmonics other than s0(N).

        ``dominant`` selects N from the asymptotic h1 or from the actual primary minimum.
        """
        eps = np.atleast_1d(np.asarray(eps, dtype=float))
        g = self.pool_g(eps)
        if dominant == "asymptotic":
            _, N = self.h1(eps)
        elif dominant == "actual":
            _, N = self.h1_actual(eps)
        else:
            raise ValueError("dominant must be 'asymptotic' or 'actual'")
        cols = self._primary_index[N]
        g[np.arange(len(eps)), cols] = np.inf
        return g.min(axis=1)

    def dominant_vector(self, N: int) -> tuple[int, ...]:
        return canonical_sign(Sequence_(self.data, self.catalog.j0.k0)[int(N)])

    # estimates -----------------------------------------------------------
    def coefficient(self, k, eps) -> HarmonicCoefficient:
        return coefficient(k, eps, self.params, self.data, self.gstar)

    def ln_envelope(self, eps, h):
        eps = np.asarray(eps, dtype=float)
        ell = self.ell
        return (self.params.p - 1 / ell) * np.log(eps) - self.C0 * h / eps ** (1 / (2 * ell))

    def max_splitting_estimate(self, eps: float) -> SplittingEstimate:
        h, N = self.h1_scalar(eps)
        k = self.dominant_vector(N)
        c = self.coefficient(k, eps)
        ln_first = self.params.p * math.log(eps) + math.log(self.data.norm(k)) + c.ln_L
        return SplittingEstimate(eps=eps, N=N, k_dominant=k, h1=h,
                                 ln_envelope=float(self.ln_envelope(eps, h)), ln_first_order=ln_first)

    def h1_extrema(self, eps_lo: float, eps_hi: float, points: int = 2000, actual: bool = False):
        """Global min and max of h1 on [eps_lo, eps_hi], refined between grid points."""
        f = (lambda e: float(self.h1_actual(np.array([e]))[0][0])) if actual else (lambda e: self.h1_scalar(e)[0])
        grid = np.exp(np.linspace(math.log(eps_lo), math.log(eps_hi), points))
        vals = np.array([f(e) for e in grid]) if actual else self.h1(grid)[0]
        out = {}
        for sign, key in ((1.0, "min"), (-1.0, "max")):
            i = int(np.argmin(sign * vals))
            a = math.log(grid[max(i - 1, 0)])
            b = math.log(grid[min(i + 1, points - 1)])
            best = float(vals[i])
            if b > a:
                res = minimize_scalar(lambda u: sign * f(math.exp(u)), bounds=(a, b), method="bounded",
                                      options={"xatol": 1e-13})
                cand = sign * float(res.fun)
                if sign * cand < sign * best:
                    best = cand
            out[key] = best
        return out

    def separation_check(self) -> bool:
        """B_0 >= A_1 (quadratic, exact) or B_0^- >= A_1^+ (cubic, interval arithmetic)."""
        cat = self.catalog
        return separation_check(cat)


def separation_check(catalog: ResonanceCatalog) -> bool:
    data = catalog.data
    if data.ell == 2:
        lam = data.lam
        a1_sq = (lam + 2 + lam.inverse()) / 4
        return catalog.B0_sq >= a1_sq
    margin = separation_margin_cubic(catalog)
    if margin.a >= 0:
        return True
    if margin.b < 0:
        return False
    raise ArithmeticError("separation undecided at working precision")


def separation_margin_cubic(catalog: ResonanceCatalog, bits: int = 160):
    """Interval enclosure of B0^-**3 - (A1^+)**3 using the crossing value of g+."""
    data = catalog.data
    with iv_prec(bits) as iv:
        lam = field_interval(data.lam, bits)
        d = iv.sqrt(field_interval(data.delta_sq, bits))
        g0 = field_interval(catalog.j0.gamma_star, bits)
        g1 = field_interval(catalog.second.gamma_star, bits)
        b0_cubed = g1 * (1 - d) / (g0 * (1 + d))
        c = (iv.sqrt(lam) + 1) / (2 * lam)
        def root(x, n):
            return iv.exp(iv.log(x) / n)
        closed = (1 + d) / 27 * (2 * root(c, 6) + 1 / root(c, 3)) ** 3
        cross = (1 + d) / 27 * (2 * root(c, 3) + 1 / root(c * c, 3)) ** 3
        a1_cubed = iv.mpf([min(closed.a, cross.a), max(closed.b, cross.b)])
        return b0_cubed - a1_cubed


def _ball(ell: int, R: int, l1: bool):
    """Canonical (last nonzero component positive) integer vectors with 0 < |k| <= R."""
    out = []
    if ell == 2:
        for k2 in range(0, R + 1):
            for k1 in range(-R, R + 1):
                if (k2 > 0 or k1 > 0) and abs(k1) + k2 <= R:
                    out.append((k1, k2))
        return out
    for k3 in range(0, R + 1):
        for k2 in range(-R, R + 1):
            for k1 in range(-R, R + 1):
                if k1 * k1 + k2 * k2 + k3 * k3 > R * R:
                    continue
                if k3 > 0 or (k3 == 0 and (k2 > 0 or (k2 == 0 and k1 > 0))):
                    out.append((k1, k2, k3))
    return out
