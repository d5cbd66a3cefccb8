"""Sweeps over quadratic frequencies and sampled splitting profiles."""
from __future__ import annotations

import csv
import io
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Optional, TextIO

import numpy as np

from .field import ContinuedFraction, PrecisionExhausted
from .koch import IterationData, build_quadratic, from_spec
from .melnikov import ModelParams, SplittingModel
from .resonances import TieError, build_catalog

__all__ = ["ScanRow", "canonical_words", "scan_quadratic", "evaluate_word", "SplittingProfile", "profile"]

NEAR_TIE = 1e-6


@dataclass(frozen=True)
class ScanRow:
    cf: ContinuedFraction
    lam: float
    B0: float
    A1: float
    passes: Optional[bool]
    b0_exact: bool
    near_tie: bool
    indeterminate: bool
    note: str = ""

    @property
    def margin(self) -> float:
        return self.B0 - self.A1

    @property
    def label(self) -> str:
        return "Omega_" + ",".join(map(str, self.cf.period))

    def as_dict(self) -> dict:
        return {
            "cf": list(self.cf.period),
            "label": self.label,
            "lambda": self.lam,
            "B0": self.B0,
            "A1": self.A1,
            "margin": self.margin,
            "passes": self.passes,
            "b0_exact": self.b0_exact,
            "near_tie": self.near_tie,
            "indeterminate": self.indeterminate,
            "note": self.note,
        }


def canonical_words(period_max: int, digit_max: int) -> list[ContinuedFraction]:
    """Purely periodic words up to the bounds, one per rotation class of primitive periods."""
    if period_max < 1 or digit_max < 1:
        raise ValueError("period_max and digit_max must be >= 1")
    seen = set()
    out = []
    for m in range(1, period_max + 1):
        for w in itertools.product(range(1, digit_max + 1), repeat=m):
            c = ContinuedFraction(w).canonical()
            if c.period not in seen:
                seen.add(c.period)
                out.append(c)
    out.sort(key=lambda c: (len(c.period), c.period))
    return out


def evaluate_word(cf: ContinuedFraction, lam_cap: float = 200.0) -> ScanRow:
    """Separation test B0 >= A1 for one quadratic frequency, decided exactly."""
    data = build_quadratic(cf)
    lam = data.lam
    a1_sq = (lam + 2 + lam.inverse()) / 4
    A1 = 0.5 * (math.sqrt(float(lam)) + 1 / math.sqrt(float(lam)))
    if float(lam) > lam_cap and a1_sq > 4:
        # the doubled primary sequence is another sequence with normalized limit 4, so B0 <= 2 < A1
        return ScanRow(cf=cf, lam=float(lam), B0=2.0, A1=A1, passes=False, b0_exact=False,
                       near_tie=False, indeterminate=False, note="B0<=2<A1")
    try:
        cat = build_catalog(data)
    except TieError as exc:
        # two primitives share the minimal limit: the secondary level equals the primary one,
        # so B0 = 1 < A1 exactly
        return ScanRow(cf=cf, lam=float(lam), B0=1.0, A1=A1, passes=False, b0_exact=True,
                       near_tie=False, indeterminate=False, note=f"tie: {exc}")
    try:
        passes = cat.B0_sq >= a1_sq
        indeterminate = False
        note = "B0=A1" if cat.B0_sq == a1_sq else ""
    except PrecisionExhausted:
        passes, indeterminate, note = None, True, "sign not certified"
    B0 = float(cat.B0)
    return ScanRow(cf=cf, lam=float(lam), B0=B0, A1=A1, passes=passes, b0_exact=True,
                   near_tie=abs(B0 - A1) < NEAR_TIE, indeterminate=indeterminate, note=note)


def _eval_args(args):
    return evaluate_word(*args)


def scan_quadratic(period_max: int = 2, digit_max: int = 13, lam_cap: float = 200.0, workers: int = 1) -> list[ScanRow]:
    words = canonical_words(period_max, digit_max)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(_eval_args, [(w, lam_cap) for w in words], chunksize=64))
    return [evaluate_word(w, lam_cap) for w in words]


def passing(rows: Iterable[ScanRow]) -> list[ScanRow]:
    return [r for r in rows if r.passes]


@dataclass
class SplittingProfile:
    """h1, h2, dominant index and envelope sampled on a log-spaced grid."""

    name: str
    eps: np.ndarray
    h1: np.ndarray
    h2: np.ndarray
    N: np.ndarray
    k_dominant: list[tuple[int, ...]]
    ln_envelope: np.ndarray

    @property
    def ln_eps(self) -> np.ndarray:
        return np.log(self.eps)

    COLUMNS = ("eps", "ln_eps", "h1", "h2", "N", "k_dominant", "ln_envelope")

    def rows(self):
        for i in range(len(self.eps)):
            yield (
                f"{self.eps[i]:.17g}",
                f"{math.log(self.eps[i]):.17g}",
                f"{self.h1[i]:.17g}",
                f"{self.h2[i]:.17g}",
                str(int(self.N[i])),
                ";".join(str(x) for x in self.k_dominant[i]),
                f"{self.ln_envelope[i]:.17g}",
            )

    def write_csv(self, fh: TextIO) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(self.COLUMNS)
        for r in self.rows():
            w.writerow(r)

    def to_csv(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()


def profile(spec, eps_min: float = 1e-8, eps_max: float = 1e-2, points: int = 2000,
            params: ModelParams = ModelParams()) -> SplittingProfile:
    if not (0 < eps_min < eps_max):
        raise ValueError("need 0 < eps_min < eps_max")
    if points < 2:
        raise ValueError("points must be >= 2")
    data = from_spec(spec) if isinstance(spec, str) else spec
    model = SplittingModel(build_catalog(data), params, eps_min=min(eps_min, 1e-13), eps_max=max(eps_max, 1e-1))
    eps = np.geomspace(eps_min, eps_max, points)
    h1, N = model.h1(eps)
    h2 = model.h2(eps, dominant="asymptotic")
    ks = [model.dominant_vector(n) for n in N]
    env = model.ln_envelope(eps, h1)
    return SplittingProfile(name=data.name, eps=eps, h1=h1, h2=h2, N=N, k_dominant=ks, ln_envelope=env)
