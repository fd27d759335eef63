"""Distribution tails and the rank / contingency tests used by the analyses.

Everything here is pure Python on top of :mod:`math`; no SciPy at runtime.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

from .errors import ConstantInput, EmptySample, InvalidDof, LengthMismatch, ZeroMarginal

__all__ = [
    "TestResult",
    "betainc",
    "f_sf",
    "chi2_sf_1dof",
    "normal_sf",
    "t_sf_two_sided",
    "chi2_test_2x2",
    "mann_whitney_u",
    "midranks",
    "spearman",
]

_BETA_MAX_ITER = 200
_BETA_EPS = 1e-15
_TINY = 1e-300


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p: float
    method: str

    __test__ = False  # keep pytest from collecting this as a test class


def _betacf(a: float, b: float, x: float) -> float:
    # modified Lentz evaluation of the incomplete-beta continued fraction
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _BETA_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETA_EPS:
            return h
    return h


def _lgamma_diff(big: float, small: float) -> float:
    """log Gamma(big + small) - log Gamma(big), stable for big >> small."""
    if big < 1e3:
        return math.lgamma(big + small) - math.lgamma(big)
    s = big + small
    out = (big - 0.5) * math.log1p(small / big) + small * math.log(s) - small
    # Stirling series remainder terms
    out += (1.0 / (12.0 * s) - 1.0 / (360.0 * s ** 3)) - (1.0 / (12.0 * big) - 1.0 / (360.0 * big ** 3))
    return out


def _log_beta(a: float, b: float) -> float:
    big, small = (a, b) if a >= b else (b, a)
    return math.lgamma(small) - _lgamma_diff(big, small)


def _betainc(a: float, b: float, x: float, log_x: float, log_1mx: float) -> float:
    front = math.exp(a * log_x + b * log_1mx - _log_beta(a, b))
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise ValueError("betainc requires a > 0 and b > 0")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    return _betainc(a, b, x, math.log(x), math.log1p(-x))


def f_sf(x: float, d1: int, d2: int) -> float:
    """Upper tail P(F > x) of the F(d1, d2) distribution."""
    if d1 < 1 or d2 < 1:
        raise InvalidDof(f"degrees of freedom must be >= 1, got ({d1}, {d2})")
    if x <= 0:
        return 1.0
    if math.isinf(x):
        return 0.0
    # P(F > x) = I_z(d2/2, d1/2) with z = d2 / (d2 + d1 x); logs are formed
    # from the ratio r = d1 x / d2 so that z near 1 keeps full precision
    r = d1 * x / d2
    z = 1.0 / (1.0 + r)
    log_z = -math.log1p(r)
    # log r from its factors: r itself underflows for subnormal x
    log_1mz = math.log(d1) + math.log(x) - math.log(d2) - math.log1p(r)
    return min(1.0, max(0.0, _betainc(d2 / 2.0, d1 / 2.0, z, log_z, log_1mz)))


def normal_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def chi2_sf_1dof(x: float) -> float:
    if x <= 0:
        return 1.0
    return math.erfc(math.sqrt(x / 2.0))


def t_sf_two_sided(t: float, df: int) -> float:
    if df < 1:
        raise InvalidDof(f"t test needs df >= 1, got {df}")
    if math.isinf(t):
        return 0.0
    return betainc(df / 2.0, 0.5, df / (df + t * t))


def chi2_test_2x2(table, continuity: bool = True) -> TestResult:
    """Pearson chi-square on a 2x2 table, Yates-corrected by default.

    With the correction, ``[[37, 77], [34, 80]]`` gives p ~ 0.7749.
    """
    (a, b), (c, d) = table
    cells = (a, b, c, d)
    if any(v < 0 for v in cells):
        raise ValueError("contingency counts must be non-negative")
    rows = (a + b, c + d)
    cols = (a + c, b + d)
    if min(rows) == 0 or min(cols) == 0:
        raise ZeroMarginal(f"zero marginal in table {table!r}")
    n = float(a + b + c + d)
    stat = 0.0
    observed = ((a, b), (c, d))
    for i in range(2):
        for j in range(2):
            expected = rows[i] * cols[j] / n
            dev = abs(observed[i][j] - expected)
            if continuity:
                dev = max(0.0, dev - 0.5)
            stat += dev * dev / expected
    method = "chi2-2x2-yates" if continuity else "chi2-2x2"
    return TestResult(stat, min(1.0, chi2_sf_1dof(stat)), method)


def midranks(values: Sequence[float]) -> list[float]:
    """1-based ranks with ties given their average rank."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def _u_from_ranks(rank_sum_a: float, n_a: int) -> float:
    return rank_sum_a - n_a * (n_a + 1) / 2.0


EXACT_MAX_TOTAL = 12


def mann_whitney_u(a: Sequence[float], b: Sequence[float], method: str = "auto") -> TestResult:
    """Two-sided Mann-Whitney U test; ``statistic`` is U for sample ``a``.

    ``method`` is ``"exact"`` (full permutation over pooled midranks),
    ``"asymptotic"`` (normal approximation, tie-corrected variance,
    continuity correction) or ``"auto"``, which picks exact when
    ``len(a) + len(b) <= 12``.
    """
    n_a, n_b = len(a), len(b)
    if n_a == 0 or n_b == 0:
        raise EmptySample("both samples need at least one observation")
    pooled = list(a) + list(b)
    ranks = midranks(pooled)
    u = _u_from_ranks(sum(ranks[:n_a]), n_a)
    if method == "auto":
        method = "exact" if n_a + n_b <= EXACT_MAX_TOTAL else "asymptotic"
    if method == "exact":
        return TestResult(u, _mwu_exact_p(ranks, n_a, u), "mann-whitney-exact")
    if method == "asymptotic":
        return TestResult(u, _mwu_normal_p(ranks, n_a, n_b, u), "mann-whitney-normal")
    raise ValueError(f"unknown method {method!r}")


def _mwu_exact_p(ranks: list[float], n_a: int, u: float) -> float:
    total = 0
    le = 0
    ge = 0
    eps = 1e-9
    for combo in itertools.combinations(ranks, n_a):
        uc = _u_from_ranks(sum(combo), n_a)
        total += 1
        if uc <= u + eps:
            le += 1
        if uc >= u - eps:
            ge += 1
    return min(1.0, 2.0 * min(le, ge) / total)


def _mwu_normal_p(ranks: list[float], n_a: int, n_b: int, u: float) -> float:
    n = n_a + n_b
    counts: dict[float, int] = {}
    for r in ranks:
        counts[r] = counts.get(r, 0) + 1
    tie_term = sum(t ** 3 - t for t in counts.values())
    var = n_a * n_b / 12.0 * ((n + 1) - tie_term / (n * (n - 1))) if n > 1 else 0.0
    if var <= 0:
        return 1.0
    mu = n_a * n_b / 2.0
    dev = max(0.0, abs(u - mu) - 0.5)
    return min(1.0, 2.0 * normal_sf(dev / math.sqrt(var)))


def _pearson(x: Sequence[float], y: Sequence[float]) -> float:
    n = len(x)
    mx = math.fsum(x) / n
    my = math.fsum(y) / n
    sxy = math.fsum((xi - mx) * (yi - my) for xi, yi in zip(x, y))
    sxx = math.fsum((xi - mx) ** 2 for xi in x)
    syy = math.fsum((yi - my) ** 2 for yi in y)
    if sxx == 0 or syy == 0:
        raise ConstantInput("correlation undefined for constant input")
    return max(-1.0, min(1.0, sxy / math.sqrt(sxx * syy)))


def spearman(x: Sequence[float], y: Sequence[float]) -> TestResult:
    """Spearman rank correlation with a t-approximation p-value (n-2 dof)."""
    if len(x) != len(y):
        raise LengthMismatch(f"lengths differ: {len(x)} vs {len(y)}")
    n = len(x)
    if n < 3:
        raise LengthMismatch("spearman needs at least 3 paired observations")
    rho = _pearson(midranks(x), midranks(y))
    df = n - 2
    if abs(rho) >= 1.0:
        return TestResult(rho, 0.0, "spearman")
    t = rho * math.sqrt(df / (1.0 - rho * rho))
    return TestResult(rho, min(1.0, t_sf_two_sided(t, df)), "spearman")
