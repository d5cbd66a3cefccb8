import io
import math

import numpy as np
import pytest

from torisplit.field import ContinuedFraction
from torisplit.melnikov import SplittingModel
from torisplit.resonances import build_catalog
from torisplit.koch import from_spec
from torisplit.scan import canonical_words, evaluate_word, profile, scan_quadratic

EXPECTED = {(a,) for a in range(1, 14)} | {(1, a) for a in range(2, 13)}


@pytest.fixture(scope="module")
def default_rows():
    return scan_quadratic(2, 13)


def test_default_scan_24(default_rows):
    passing = {r.cf.period for r in default_rows if r.passes}
    assert passing == EXPECTED
    assert not any(r.indeterminate for r in default_rows)


def test_words_deduplicated():
    words = canonical_words(2, 3)
    periods = [w.period for w in words]
    assert len(periods) == len(set(periods))
    assert (1, 1) not in periods and (2, 1) not in periods
    assert periods == [(1,), (2,), (3,), (1, 2), (1, 3), (2, 3)]


def test_bad_bounds():
    with pytest.raises(ValueError):
        canonical_words(0, 5)


def test_omega14_fails():
    r = evaluate_word(ContinuedFraction((14,)))
    assert r.passes is False and r.B0 < r.A1


def test_exact_tie_flagged():
    r = evaluate_word(ContinuedFraction((1, 12)))
    assert r.passes is True and r.near_tie and r.margin == 0.0


def test_primary_tie_fails():
    r = evaluate_word(ContinuedFraction((1, 2, 2)))
    assert r.passes is False and r.note.startswith("tie")


def test_large_lambda_certificate():
    r = evaluate_word(ContinuedFraction((20, 20)), lam_cap=100)
    assert r.passes is False and not r.b0_exact and r.A1 > 2


def test_deterministic(default_rows):
    again = scan_quadratic(2, 13)
    assert [r.as_dict() for r in again] == [r.as_dict() for r in default_rows]


def test_parallel_matches_serial():
    a = scan_quadratic(2, 5)
    b = scan_quadratic(2, 5, workers=2)
    assert [r.as_dict() for r in a] == [r.as_dict() for r in b]


def test_profile_single_point_consistency():
    p = profile("omega:1,2", 1e-6, 1e-3, 7)
    m = SplittingModel(build_catalog(from_spec("omega:1,2")))
    for i, e in enumerate(p.eps):
        h, N = m.h1_scalar(float(e))
        assert h == p.h1[i] and N == p.N[i]
        assert m.h2(np.array([e]))[0] == p.h2[i]
    assert p.eps[0] == 1e-6 and p.eps[-1] == 1e-3


def test_profile_scallop_period():
    p = profile("omega:1,2", 1e-8, 1e-3, 2000)
    lam = 2 + math.sqrt(3)
    # successive minima of h1 are 4 ln(lam) apart
    mins = [i for i in range(1, len(p.h1) - 1) if p.h1[i] < p.h1[i - 1] and p.h1[i] <= p.h1[i + 1]]
    gaps = np.diff(p.ln_eps[mins])
    assert np.allclose(gaps, 4 * math.log(lam), atol=2 * (p.ln_eps[1] - p.ln_eps[0]))


def test_profile_csv():
    p = profile("cubic-golden", 1e-8, 1e-2, 5)
    text = p.to_csv()
    lines = text.strip().split("\n")
    assert lines[0] == "eps,ln_eps,h1,h2,N,k_dominant,ln_envelope"
    assert len(lines) == 6
    assert ";" in lines[1].split(",")[5]
    buf = io.StringIO()
    p.write_csv(buf)
    assert buf.getvalue() == text


def test_profile_bad_args():
    with pytest.raises(ValueError):
        profile("golden", 1e-3, 1e-4, 10)
    with pytest.raises(ValueError):
        profile("golden", 1e-5, 1e-4, 1)
