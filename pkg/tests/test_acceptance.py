"""Acceptance criteria, one test each, at their stated tolerances.

Each test records a PASS/FAIL line that is printed in the terminal summary.
"""
from __future__ import annotations

import math
import time

import numpy as np

from attnet import stats
from attnet.causality import best_lag_scan, granger_fit
from attnet.cli import EXIT_OK, main
from attnet.community import detect_communities
from attnet.graphmetrics import gini
from attnet.motifs import FFL, motif_zscores, triad_census
from attnet.netbuild import BackboneParams, disparity_backbone
from attnet.rng import gaussian, stream
from attnet.stitch import stitch_windows, window_scales

from conftest import make_window, random_digraph, record
from test_causality import coupled
from test_cli import snapshot
from test_community import exhaustive_min, planted_cliques, recovered
from test_motifs import brute_census, layered_dag
from test_netbuild import brute_backbone


def check(name: str, ok: bool, detail: str) -> None:
    record(name, ok, detail)
    print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    assert ok, detail


def test_stitch_reference_arithmetic():
    t0 = time.perf_counter()
    w1 = make_window("DZ", "2016-10-05", "2016-10-07", {"US": [10, 20, 39], "KR": [1, 2, 19]})
    w2 = make_window("DZ", "2016-10-07", "2016-10-09", {"US": [79, 30, 40], "KR": [39, 5, 6]})
    sc = window_scales(w1, w2)
    out = {s.target: s for s in stitch_windows(w1, w2)}
    ref = out["US"]
    elapsed = time.perf_counter() - t0
    ok = (sc.first == 2.5 and sc.second == 1.25 and ref.values[2] == 100.0
          and list(ref.values) == [11 * 2.5, 21 * 2.5, 100.0, 31 * 1.25, 41 * 1.25]
          and elapsed < 1.0)
    check("stitch 39/79", ok, f"scales {sc.first}/{sc.second}, overlap {float(ref.values[2])!r}, {elapsed:.4f}s")


def test_chi2_reported_counts():
    t0 = time.perf_counter()
    r = stats.chi2_test_2x2([[37, 77], [34, 80]], continuity=True)
    elapsed = time.perf_counter() - t0
    check("chi2 2x2", abs(r.p - 0.7749) <= 0.0005 and elapsed < 1.0, f"p={r.p:.6f}, {elapsed:.4f}s")


def test_disparity_backbone_vs_brute_force():
    mismatches, monotone = 0, True
    alphas = (0.01, 0.05, 0.2, 0.5)
    for seed in range(100):
        rng = np.random.default_rng(seed)
        n = random_digraph(rng, int(rng.integers(2, 51)), float(rng.uniform(0.05, 0.5)))
        prev = set()
        for alpha in alphas:
            got = set(disparity_backbone(n, BackboneParams(alpha)).edges)
            mismatches += got != brute_backbone(n.edges, alpha)
            monotone &= prev <= got
            prev = got
    check("disparity backbone", mismatches == 0 and monotone,
          f"{mismatches} mismatches over 100 graphs x {len(alphas)} alphas, monotone={monotone}")


def test_triad_census_and_zscores():
    mismatches = 0
    for seed in range(200):
        rng = np.random.default_rng(seed)
        n = random_digraph(rng, int(rng.integers(3, 13)), float(rng.uniform(0.1, 0.6)))
        got = triad_census(n).as_dict()
        want = brute_census(n)
        mismatches += any(got[k] != want[k] for k in got)
    g = random_digraph(np.random.default_rng(7), 12, 0.3)
    a = motif_zscores(g, ensemble_size=50, seed=3)
    b = motif_zscores(g, ensemble_size=50, seed=3)
    c = motif_zscores(g, ensemble_size=50, seed=3, workers=4)
    z = motif_zscores(layered_dag(0), ensemble_size=100, seed=11)[FFL]
    ok = mismatches == 0 and a == b == c and z is not None and z > 0
    check("triad census", ok, f"{mismatches} census mismatches in 200 graphs, deterministic={a == b},"
                              f" worker-independent={a == c}, layered DAG z(030T)={z:.2f}")


def test_granger_engine():
    t0 = time.perf_counter()
    lags = range(1, 15)
    nested = True
    detected = 0
    for seed in range(100):
        x, y = coupled(seed)
        r = best_lag_scan(x, y, lags)
        detected += r.best_lag == 3
    false_pos = 0
    for seed in range(400):
        gen = stream(seed, 98)
        x, y = gaussian(gen, 404), gaussian(gen, 404)
        fit = granger_fit(x, y, 3)
        false_pos += fit.p < 0.05
        nested &= fit.rss_unrestricted <= fit.rss_restricted
        for lag in (1, 7, 14):
            f = granger_fit(y, x, lag)
            nested &= f.rss_unrestricted <= f.rss_restricted
    for seed in range(20):
        x, y = coupled(seed)
        for lag in lags:
            f = granger_fit(x, y, lag)
            nested &= f.rss_unrestricted <= f.rss_restricted
    elapsed = time.perf_counter() - t0
    rate = false_pos / 400
    ok = detected >= 95 and abs(rate - 0.05) <= 0.03 and nested and elapsed < 60
    check("granger engine", ok, f"lag-3 detected {detected}/100, false-positive rate {rate:.4f},"
                                f" nesting held={nested}, {elapsed:.1f}s")


def test_community_detection():
    hits = sum(recovered(detect_communities(n, seed=seed), left, right)
               for seed, (n, left, right) in ((s, planted_cliques(s)) for s in range(100)))
    close = 0
    for seed in range(50):
        rng = np.random.default_rng(5000 + seed)
        n = random_digraph(rng, int(rng.integers(3, 9)), float(rng.uniform(0.2, 0.5)))
        got = detect_communities(n, seed=seed).codelength
        close += got <= 1.05 * exhaustive_min(n)
    check("community detection", hits >= 95 and close >= 45,
          f"planted cliques {hits}/100, within 5% of exhaustive {close}/50")


def test_gini_properties():
    rng = np.random.default_rng(0)
    invariant = True
    for _ in range(1000):
        x = rng.exponential(size=int(rng.integers(2, 40)))
        g = gini(x)
        invariant &= abs(gini(x * float(rng.uniform(0.01, 100))) - g) <= 1e-12
        invariant &= abs(gini(rng.permutation(x)) - g) <= 1e-12
    uniform = gini([3.0] * 7)
    single = gini([0, 0, 0, 1])
    ok = uniform == 0.0 and abs(single - 0.75) <= 1e-12 and invariant
    check("gini", ok, f"uniform={uniform!r}, [0,0,0,1]={single!r}, invariance over 1000 vectors={invariant}")


def test_stats_kernel():
    # normal approximation against the exact permutation p for every size pair up to 8+8
    worst, failing = 0.0, []
    for n_a in range(1, 9):
        for n_b in range(1, 9):
            pair_worst = 0.0
            for seed in range(200):
                rng = np.random.default_rng([seed, n_a, n_b])
                a, b = list(rng.normal(size=n_a)), list(rng.normal(size=n_b))
                exact = stats.mann_whitney_u(a, b, "exact").p
                approx = stats.mann_whitney_u(a, b, "asymptotic").p
                pair_worst = max(pair_worst, abs(exact - approx))
            worst = max(worst, pair_worst)
            if pair_worst > 0.05:
                failing.append(f"{n_a}+{n_b}")
    # F(1, d2) tends to the square of a standard normal: tail 2*(1 - Phi(sqrt x)) = erfc(sqrt(x/2))
    f_err = max(abs(stats.f_sf(x, 1, 10**6) - math.erfc(math.sqrt(x / 2.0)))
                for x in (0.01, 0.5, 1.0, 2.0, 3.84, 6.63, 10.0, 25.0))
    rho = stats.spearman([1, 2, 3, 4], [1, 3, 2, 4]).statistic
    ok = not failing and f_err <= 1e-6 and rho == 0.8
    check("stats kernel", ok, f"MWU worst |approx-exact|={worst:.4f}, pairs over 0.05: {failing or 'none'};"
                              f" f_sf normal-limit error={f_err:.2e}; spearman={rho!r}")


def test_end_to_end_determinism(tmp_path):
    snaps = []
    for i, workers in enumerate((1, 1, 1, 4)):
        out = tmp_path / f"run{i}"
        assert main(["run", "--fixture", "--out", str(out), "--workers", str(workers)]) == EXIT_OK
        snaps.append(snapshot(out))
    same_runs = snaps[0] == snaps[1] == snaps[2]
    same_workers = snaps[0] == snaps[3]
    check("end-to-end determinism", same_runs and same_workers,
          f"{len(snaps[0])} artifacts, identical across 3 runs={same_runs}, across workers 1/4={same_workers}")
