"""Independent checks: exhaustive enumeration, brute-force exponents and quadrature.

Nothing here uses the limit formulas; numerators come straight from exact
inner products and coefficients from numerical integration.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Optional, Sequence

import mpmath
import numpy as np

from .koch import IterationData, apply_U_pow
from .resonances import (
    NotAdmissibleError,
    _forms,
    canonical_sign,
    classify,
    gamma_exact,
    k0_of,
)

__all__ = [
    "EnumerationReport",
    "OracleError",
    "enumerate_vectors",
    "h_bruteforce",
    "QuadratureResult",
    "melnikov_quadrature",
    "non_dominant_sum",
    "tails",
    "SuiteResult",
    "coverage_suite",
    "bruteforce_suite",
    "quadrature_pairs",
    "quadrature_suite",
    "run_suites",
]


class OracleError(RuntimeError):
    """An oracle precondition failed (boundary hit, tolerance exceeded)."""


def tails(data: IterationData, K: int) -> np.ndarray:
    """Tails (k2[,k3]) of canonical vectors with tail norm <= K."""
    if data.ell == 2:
        return np.arange(1, K + 1, dtype=np.int64)[:, None]
    a = np.arange(-K, K + 1, dtype=np.int64)
    k2, k3 = np.meshgrid(a, np.arange(0, K + 1, dtype=np.int64), indexing="ij")
    k2, k3 = k2.ravel(), k3.ravel()
    keep = (k2 * k2 + k3 * k3 <= K * K) & ((k3 > 0) | ((k3 == 0) & (k2 > 0)))
    return np.stack([k2[keep], k3[keep]], axis=1)


def _norms(data: IterationData, k: np.ndarray) -> np.ndarray:
    if data.ell == 2:
        return np.abs(k).sum(axis=1).astype(float)
    return np.sqrt((k.astype(float) ** 2).sum(axis=1))


@dataclass
class EnumerationReport:
    K: int
    total: int
    admissible: list[tuple[tuple[int, ...], float, tuple]] = dc_field(default_factory=list)
    unclassified: list[tuple[int, ...]] = dc_field(default_factory=list)
    min_gamma: Optional[float] = None

    @property
    def unclassified_count(self) -> int:
        return len(self.unclassified)


def enumerate_vectors(K: int, data: IterationData) -> EnumerationReport:
    """All canonical k with 0 < |k| <= K; admissible ones are classified and checked.

    Only the integer closest to -<tail, omega> can complete a tail to an admissible
    vector, so the scan is over tails; the remaining completions are counted.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    T = tails(data, K)
    W = [float(w) for w in data.omega[1:]]
    total = 0
    rep = EnumerationReport(K=K, total=0)
    forms = _forms(data)
    # vectors with zero tail: (k1, 0[, 0]) with k1 > 0, never admissible
    total += K
    for row in T:
        tail = tuple(int(x) for x in row)
        tn = sum(abs(x) for x in tail) if data.ell == 2 else math.sqrt(sum(x * x for x in tail))
        # count completions k1 with |k| <= K
        if data.ell == 2:
            total += 2 * (K - int(tn)) + 1
        else:
            total += 2 * int(math.isqrt(K * K - sum(x * x for x in tail))) + 1
        xt = sum(t * w for t, w in zip(tail, W))
        m = -round(xt)
        k = None
        for k1 in (m, m - 1, m + 1):
            cand = (k1,) + tail
            if forms.admissible(cand):
                k = cand
                break
        if k is None or data.norm(k) > K + 1e-9:
            continue
        try:
            j, n = classify(k, data)
            ok = apply_U_pow(data, k0_of(j, data), n) == k
        except (NotAdmissibleError, ArithmeticError):
            ok = False
        if not ok:
            rep.unclassified.append(k)
            continue
        g = abs(k[0] + xt) * data.norm_power(k)
        rep.admissible.append((k, g, (j, n)))
    rep.total = total
    if rep.admissible:
        rep.min_gamma = min(g for _, g, _ in rep.admissible)
    return rep


def _exact_g(k, eps, data, rho, C0):
    x = abs(data.inner(k).to_mpf(80))
    nk = data.norm(k)
    with mpmath.workprec(80):
        beta = rho * nk + mpmath.pi * x / (2 * mpmath.sqrt(eps))
        return float(mpmath.mpf(eps) ** (mpmath.mpf(1) / (2 * data.ell)) * beta / C0)


def h_bruteforce(eps: float, K: int, data: IterationData, rho: float, gstar: float, C0: float,
                 refine: int = 32, tails_cache: Optional[np.ndarray] = None):
    """Min and second min of g_k(eps) over all canonical k with |k| <= K.

    Returns (h1, h2, k1, k2).  Raises OracleError if a minimizer has |k| > K/2.
    """
    if not math.pi / (2 * math.sqrt(eps)) > rho:
        raise OracleError("eps too large for the nearest-integer reduction")
    T = tails(data, K) if tails_cache is None else tails_cache
    W = np.array([float(w) for w in data.omega[1:]])
    x = T @ W
    m = -np.rint(x)
    cands = []
    for d in (-1, 0, 1):
        k1 = (m + d).astype(np.int64)
        full = np.concatenate([k1[:, None], T], axis=1)
        cands.append(full)
    ks = np.concatenate(cands, axis=0)
    norms = _norms(data, ks)
    inside = norms <= K + 1e-9
    ks, norms = ks[inside], norms[inside]
    absx = np.abs(ks[:, 0] + ks[:, 1:] @ W)
    ell = data.ell
    g = eps ** (1 / (2 * ell)) * (rho * norms + math.pi * absx / (2 * math.sqrt(eps))) / C0
    top = np.argsort(g)[:refine]
    exact = sorted(((_exact_g(tuple(int(v) for v in ks[i]), eps, data, rho, C0), tuple(int(v) for v in ks[i]))
                    for i in top))
    (g1, k_1), (g2, k_2) = exact[0], exact[1]
    for kk in (k_1, k_2):
        if data.norm(kk) > K / 2:
            raise OracleError(f"minimizer {kk} touches the enumeration boundary K={K}")
    return g1, g2, k_1, k_2


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    sine_part: float
    error: float
    closed_form: float

    @property
    def relative_error(self) -> float:
        return abs(self.value - self.closed_form) / self.closed_form


def _trapezoid(nu, a, h, T, C):
    """sum h * 2 C sech^2(t) cos(nu t + a) on the grid t = i h, |t| <= T."""
    n = int(mpmath.ceil(T / h))
    total = 2 * mpmath.cos(a)  # t = 0 term: 2 C cos(a) sech^2(0), C applied below
    for i in range(1, n + 1):
        t = i * h
        s = 2 / mpmath.cosh(t) ** 2
        total += s * (mpmath.cos(nu * t + a) + mpmath.cos(-nu * t + a))
    return C * h * total


def melnikov_quadrature(k: Sequence[int], eps: float, rho: float, data: IterationData,
                        sigma: float = 0.0, rtol: float = 1e-10) -> QuadratureResult:
    """Coefficient of cos(<k,theta> - sigma) in the first-order Melnikov potential.

    Integrates 2 exp(-rho|k|) / cosh(t)**2 * cos(nu t + a) over the real line,
    where cos(x0) - 1 = -2/cosh(t)**2 along x0 = 4 arctan(exp t).
    """
    k = tuple(int(x) for x in k)
    x = abs(data.inner(k).to_mpf(128))
    nk = data.norm(k)
    with mpmath.workprec(64):
        nu = x / mpmath.sqrt(eps)
    nu_f = float(nu)
    # integrand size is O(1); the result ~ exp(-pi nu/2) so cancellation needs extra digits
    dps = int(math.pi * nu_f / (2 * math.log(10)) + 25)
    with mpmath.workdps(dps):
        nu = x / mpmath.sqrt(mpmath.mpf(eps))
        C = mpmath.exp(-rho * mpmath.mpf(nk))
        # poles of sech^2 at i pi/2: trapezoid error ~ exp(nu pi - pi^2/h) relative to the result,
        # so the fine step leaves ~e^-60 and the comparison step ~e^-45
        h = mpmath.pi ** 2 / (mpmath.pi * nu + 60)
        h_cmp = mpmath.pi ** 2 / (mpmath.pi * nu + 45)
        T = mpmath.pi * nu / 2 + 40
        parts = []
        errs = []
        for a in (-sigma, -sigma + mpmath.pi / 2):
            fine = _trapezoid(nu, a, h, T, C)
            coarse = _trapezoid(nu, a, h_cmp, T, C)
            parts.append(fine)
            errs.append(abs(fine - coarse))
        # I(a) = A cos(a) - B sin(a) with A the cosine and B the sine integral
        i0, i1 = parts
        ca, sa = mpmath.cos(-sigma), mpmath.sin(-sigma)
        # solve [ca -sa; -sa -ca] [A B]^T = [i0 i1]^T
        A = ca * i0 - sa * i1
        B = -sa * i0 - ca * i1
        # both sides of a window of half the size: 2 * 2 C * int_{T/2}^inf 4 e^{-2t} dt
        tail = 8 * C * mpmath.exp(-T)
        err = max(errs) + tail
        closed = 2 * mpmath.pi * nu * C / mpmath.sinh(mpmath.pi * nu / 2)
        if err > rtol * abs(A):
            raise OracleError(f"quadrature error {float(err)} exceeds tolerance at nu={nu_f}")
        return QuadratureResult(value=float(A), sine_part=float(B), error=float(err), closed_form=float(closed))


def quadrature_window(k, eps, rho, data, T: float, h: float) -> float:
    """Trapezoid value with a prescribed window and step, for window-halving checks."""
    x = abs(data.inner(k).to_mpf(128))
    nu_f = float(x) / math.sqrt(eps)
    dps = int(math.pi * nu_f / (2 * math.log(10)) + 25)
    with mpmath.workdps(dps):
        nu = x / mpmath.sqrt(mpmath.mpf(eps))
        C = mpmath.exp(-rho * mpmath.mpf(data.norm(k)))
        return float(_trapezoid(nu, 0, mpmath.mpf(h), mpmath.mpf(T), C))


def non_dominant_sum(eps: float, data: IterationData, rho: float, exclude: Sequence[int], K: int,
                     width: int = 3) -> float:
    """ln of sum over canonical k != exclude, |k| <= K, of |k| L_k (without the mu factor)."""
    T = tails(data, K)
    W = np.array([float(w) for w in data.omega[1:]])
    x = T @ W
    m = -np.rint(x)
    ks = np.concatenate([np.concatenate([(m + d).astype(np.int64)[:, None], T], axis=1)
                         for d in range(-width, width + 1)], axis=0)
    ex = canonical_sign(exclude)
    mask = ~np.all(ks == np.array(ex)[None, :], axis=1)
    ks = ks[mask]
    norms = _norms(data, ks)
    keep = norms <= K + 1e-9
    ks, norms = ks[keep], norms[keep]
    absx = np.abs(ks[:, 0] + ks[:, 1:] @ W)
    nu = absx / math.sqrt(eps)
    a = math.pi * nu / 2
    ln_sinh = a - math.log(2) + np.log1p(-np.exp(-2 * a))
    terms = np.log(norms) + np.log(2 * math.pi * nu) - rho * norms - ln_sinh
    # zero-tail vectors (k1, 0[,0]) are not in the tail scan
    k1 = np.arange(1, K + 1, dtype=float)
    nu0 = k1 / math.sqrt(eps)
    a0 = math.pi * nu0 / 2
    t0 = np.log(k1) + np.log(2 * math.pi * nu0) - rho * k1 - (a0 - math.log(2) + np.log1p(-np.exp(-2 * a0)))
    allt = np.concatenate([terms, t0])
    top = allt.max()
    return float(top + math.log(np.exp(allt - top).sum()))


@dataclass
class SuiteResult:
    name: str
    passed: bool
    detail: str
    worst: float = 0.0


def coverage_suite(k_max: int, specs=("golden", "cubic-golden"), fault: bool = False) -> SuiteResult:
    from .koch import from_spec

    parts = []
    bad = 0
    for s in specs:
        data = from_spec(s)
        rep = enumerate_vectors(k_max, data)
        n_bad = rep.unclassified_count + (len(rep.admissible) if fault else 0)
        bad += n_bad
        parts.append(f"{data.name}: {len(rep.admissible)} admissible, {n_bad} unclassified")
    return SuiteResult("coverage", bad == 0, "; ".join(parts), float(bad))


def bruteforce_suite(eps_samples: int, K: int = 500, specs=("golden", "cubic-golden"), seed: int = 0,
                     eps_range=(1e-8, 1e-2), tol: float = 1e-9, fault: bool = False) -> SuiteResult:
    """Catalog exponents (exact numerators along the sequences) against direct minimization."""
    from .koch import from_spec
    from .melnikov import ModelParams, SplittingModel
    from .resonances import build_catalog

    rng = np.random.default_rng(seed)
    worst = 0.0
    parts = []
    lo, hi = math.log(eps_range[0]), math.log(eps_range[1])
    for s in specs:
        data = from_spec(s)
        model = SplittingModel(build_catalog(data), ModelParams())
        eps = np.exp(rng.uniform(lo, hi, size=eps_samples))
        h1, _ = model.h1_actual(eps)
        h2 = model.h2(eps, dominant="actual")
        if fault:
            h1 = h1 * (1 + 1e-6)
        T = tails(data, K)
        w = 0.0
        for e, a1, a2 in zip(eps, h1, h2):
            g1, g2, _, _ = h_bruteforce(float(e), K, data, model.rho, model.gstar, model.C0, tails_cache=T)
            w = max(w, abs(a1 - g1), abs(a2 - g2))
        worst = max(worst, w)
        parts.append(f"{data.name}: max |diff| {w:.3g}")
    return SuiteResult("bruteforce", bool(worst <= tol), "; ".join(parts), float(worst))


def quadrature_pairs(count: int, specs=("golden", "cubic-golden"), nu_range=(0.5, 50.0)):
    """(data, k, eps) triples with <k, omega_eps> log-spaced over nu_range."""
    from .koch import from_spec
    from .resonances import build_catalog

    seqs = []
    for s in specs:
        data = from_spec(s)
        cat = build_catalog(data)
        for prim in cat.primitives[:2]:
            seq = cat.sequence(prim)
            for n in range(3):
                seqs.append((data, seq[n]))
    nus = np.exp(np.linspace(math.log(nu_range[0]), math.log(nu_range[1]), count))
    out = []
    for i, nu in enumerate(nus):
        data, k = seqs[i % len(seqs)]
        x = abs(float(data.inner(k)))
        out.append((data, k, (x / nu) ** 2))
    return out


def quadrature_suite(count: int, rho: float = 1.0, tol: float = 1e-8, fault: bool = False) -> SuiteResult:
    worst = 0.0
    for data, k, eps in quadrature_pairs(count):
        res = melnikov_quadrature(k, eps, rho, data, sigma=0.7)
        closed = res.closed_form * (1 + 1e-6) if fault else res.closed_form
        worst = max(worst, abs(res.value - closed) / closed)
    return SuiteResult("quadrature", bool(worst <= tol), f"{count} pairs, max rel err {worst:.3g}", worst)


def run_suites(k_max: int = 200, eps_samples: int = 20, quad_samples: int = 10, fault: bool = False,
               seed: int = 0) -> list[SuiteResult]:
    return [
        coverage_suite(k_max, fault=fault),
        bruteforce_suite(eps_samples, seed=seed, fault=fault),
        quadrature_suite(quad_samples, fault=fault),
    ]
