from __future__ import annotations

import itertools
import math

import mpmath
import numpy as np
import pytest
import scipy.stats as ss
from hypothesis import given, settings
from hypothesis import strategies as st

from attnet import stats
from attnet.errors import ConstantInput, EmptySample, InvalidDof, LengthMismatch, ZeroMarginal


# ---- F tail -------------------------------------------------------------

def mp_f_sf(x, d1, d2):
    mpmath.mp.dps = 40
    z = mpmath.mpf(d1) * x / (d1 * x + d2)
    return float(mpmath.betainc(mpmath.mpf(d1) / 2, mpmath.mpf(d2) / 2, z, 1, regularized=True))


def test_f_sf_zero_and_dof():
    assert stats.f_sf(0.0, 3, 10) == 1.0
    with pytest.raises(InvalidDof):
        stats.f_sf(1.0, 0, 10)
    with pytest.raises(InvalidDof):
        stats.f_sf(1.0, 3, 0)


@pytest.mark.parametrize("x", [0.01, 0.5, 1.0, 3.84, 10.0])
def test_f_sf_normal_limit(x):
    limit = 2 * (1 - 0.5 * math.erfc(-math.sqrt(x) / math.sqrt(2)))
    assert abs(stats.f_sf(x, 1, 10**6) - limit) < 1e-6


@pytest.mark.parametrize("x,d1,d2", [
    (0.3, 1, 1), (2.5, 3, 7), (4.0, 14, 360), (1.1, 7, 388), (25.0, 2, 50),
    (0.05, 10, 10), (80.0, 1, 400), (3.0, 30, 5), (1e-4, 5, 5), (12.0, 14, 14),
])
def test_f_sf_matches_mpmath(x, d1, d2):
    assert abs(stats.f_sf(x, d1, d2) - mp_f_sf(x, d1, d2)) <= 1e-10


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 200), st.integers(1, 60), st.integers(1, 2000))
def test_f_sf_vs_mpmath_random(x, d1, d2):
    # mpmath rather than scipy: scipy's F tail drifts by ~3e-9 near x = 0
    p = stats.f_sf(x, d1, d2)
    assert 0 <= p <= 1
    assert abs(p - mp_f_sf(x, d1, d2)) <= 1e-10


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 50), st.floats(0, 50), st.integers(1, 20), st.integers(1, 200))
def test_f_sf_monotone(x1, x2, d1, d2):
    lo, hi = sorted((x1, x2))
    assert stats.f_sf(lo, d1, d2) >= stats.f_sf(hi, d1, d2)


@pytest.mark.parametrize("x,d1,d2", [(1.5, 3, 20), (2.2, 5, 100), (0.7, 1, 8)])
def test_f_sf_monte_carlo(x, d1, d2):
    rng = np.random.default_rng(2024)
    draws = 10**7
    hits = 0
    for _ in range(10):
        hits += int((rng.f(d1, d2, draws // 10) > x).sum())
    est = hits / draws
    p = stats.f_sf(x, d1, d2)
    se = math.sqrt(p * (1 - p) / draws)
    assert abs(est - p) < 3 * se + 1e-12


def test_betainc_edges():
    assert stats.betainc(2, 3, 0.0) == 0.0 and stats.betainc(2, 3, 1.0) == 1.0
    assert stats.betainc(2, 3, 0.4) == pytest.approx(ss.beta.cdf(0.4, 2, 3), abs=1e-12)


def test_t_tail():
    for t, df in [(2.0, 5), (0.3, 30), (-1.7, 12)]:
        assert stats.t_sf_two_sided(t, df) == pytest.approx(2 * ss.t.sf(abs(t), df), abs=1e-10)


# ---- chi-square ---------------------------------------------------------

def test_chi2_reported_counts():
    r = stats.chi2_test_2x2([[37, 77], [34, 80]], continuity=True)
    assert abs(r.p - 0.7749) <= 0.0005


def test_chi2_examples():
    r = stats.chi2_test_2x2([[10, 10], [10, 10]])
    assert r.statistic == 0.0 and r.p == 1.0
    assert stats.chi2_test_2x2([[20, 5], [5, 20]]).p < 0.001
    with pytest.raises(ZeroMarginal):
        stats.chi2_test_2x2([[0, 0], [3, 4]])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(1, 200), min_size=4, max_size=4), st.booleans())
def test_chi2_vs_scipy_and_swaps(cells, yates):
    t = [[cells[0], cells[1]], [cells[2], cells[3]]]
    r = stats.chi2_test_2x2(t, continuity=yates)
    ref = ss.chi2_contingency(t, correction=yates)
    assert r.statistic == pytest.approx(ref[0], abs=1e-9)
    assert r.p == pytest.approx(ref[1], abs=1e-10)
    swapped = [[t[1][1], t[1][0]], [t[0][1], t[0][0]]]
    assert stats.chi2_test_2x2(swapped, continuity=yates).p == pytest.approx(r.p, abs=1e-15)


# ---- Mann-Whitney -------------------------------------------------------

def perm_p(a, b):
    """Two-sided exact p by brute-force relabelling of the pooled sample."""
    pooled = list(a) + list(b)
    ranks = stats.midranks(pooled)
    n_a = len(a)

    def u_of(idx):
        return sum(ranks[i] for i in idx) - n_a * (n_a + 1) / 2

    u = u_of(range(n_a))
    us = [u_of(c) for c in itertools.combinations(range(len(pooled)), n_a)]
    le = sum(x <= u + 1e-9 for x in us)
    ge = sum(x >= u - 1e-9 for x in us)
    return min(1.0, 2 * min(le, ge) / len(us))


def test_mwu_example():
    r = stats.mann_whitney_u([1, 2, 3], [4, 5, 6])
    assert r.statistic == 0 and r.p == pytest.approx(0.1, abs=1e-15)
    assert r.method == "mann-whitney-exact"


def test_mwu_identical_samples():
    a = [3.0, 1.0, 2.0, 5.0]
    assert stats.mann_whitney_u(a, list(a)).statistic == len(a) ** 2 / 2
    assert stats.mann_whitney_u(a * 4, a * 4).statistic == 128.0


def test_mwu_errors():
    with pytest.raises(EmptySample):
        stats.mann_whitney_u([], [1.0])
    with pytest.raises(ValueError):
        stats.mann_whitney_u([1.0], [2.0], method="bootstrap")


@pytest.mark.parametrize("seed", range(20))
def test_mwu_8v8_normal_close_to_exact(seed):
    rng = np.random.default_rng(seed)
    a, b = rng.normal(size=8).tolist(), rng.normal(0.5, 1, size=8).tolist()
    approx = stats.mann_whitney_u(a, b, method="asymptotic").p
    assert abs(approx - perm_p(a, b)) <= 0.05


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 6), min_size=1, max_size=6), st.lists(st.integers(0, 6), min_size=1, max_size=6))
def test_mwu_exact_matches_permutation_and_symmetry(a, b):
    r = stats.mann_whitney_u(a, b, method="exact")
    assert r.p == pytest.approx(perm_p(a, b), abs=1e-12)
    assert 0 <= r.p <= 1
    assert r.statistic + stats.mann_whitney_u(b, a).statistic == len(a) * len(b)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 20), min_size=7, max_size=25), st.lists(st.integers(0, 20), min_size=7, max_size=25))
def test_mwu_asymptotic_vs_scipy(a, b):
    r = stats.mann_whitney_u(a, b, method="asymptotic")
    if len(set(a + b)) == 1:
        assert r.p == 1.0
        return
    ref = ss.mannwhitneyu(a, b, alternative="two-sided", method="asymptotic", use_continuity=True)
    assert r.statistic == ref.statistic
    assert r.p == pytest.approx(ref.pvalue, abs=1e-10)


# ---- Spearman -----------------------------------------------------------

def test_spearman_examples():
    assert stats.spearman([1, 2, 3, 4], [1, 3, 2, 4]).statistic == 0.8
    assert stats.spearman([1, 2, 3], [10, 20, 30]).statistic == 1.0
    assert stats.spearman([1, 2, 3], [3, 2, 1]).statistic == -1.0
    with pytest.raises(LengthMismatch):
        stats.spearman([1, 2, 3], [1, 2])
    with pytest.raises(LengthMismatch):
        stats.spearman([1, 2], [1, 2])
    with pytest.raises(ConstantInput):
        stats.spearman([1, 1, 1], [1, 2, 3])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(-50, 50), st.integers(-50, 50)), min_size=4, max_size=30))
def test_spearman_vs_scipy_and_monotone_invariance(pairs):
    x = [p[0] for p in pairs]
    y = [p[1] for p in pairs]
    if len(set(x)) < 2 or len(set(y)) < 2:
        return
    r = stats.spearman(x, y)
    ref = ss.spearmanr(x, y)
    assert r.statistic == pytest.approx(ref.statistic, abs=1e-12)
    if abs(r.statistic) < 1:
        assert r.p == pytest.approx(ref.pvalue, abs=1e-9)
    warped = [math.exp(v / 10) + v ** 3 for v in x]
    assert stats.spearman(warped, y).statistic == pytest.approx(r.statistic, abs=1e-12)
    assert 0 <= r.p <= 1


@pytest.mark.parametrize("x", [5e-324, 1e-310, 1e-300])
def test_f_sf_subnormal_x(x):
    for d1, d2 in ((1, 2), (3, 7), (14, 1000)):
        p = stats.f_sf(x, d1, d2)
        assert 0.0 <= p <= 1.0 and p == pytest.approx(float(mp_f_sf(x, d1, d2)), abs=1e-12)
