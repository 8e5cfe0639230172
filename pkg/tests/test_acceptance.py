"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

The summary is repeated at the end of the pytest run (see conftest.py).
"""

import math
import time
from itertools import combinations

import numpy as np
import pytest

from acceptance_log import record
from distop.align import AlignConfig, align, subset_loss, subset_loss_gradient
from distop.casestudy import run_case_study
from distop.datasets import add_noise, circle
from distop.distributed import (
    DistributedInvariant,
    check_cover_closure,
    closure_completion,
    compute_distributed,
    cover_probability_lower_bound,
    enumerate_subsets,
    monte_carlo_cover_probability,
    required_sample_count,
    sample_subsets,
)
from distop.filtrations import cech_filtration, rips_filtration
from distop.geometry import PointCloud, pairwise_distances, quasi_isometry_distortion
from distop.metrics import bottleneck
from distop.persistence import alternating_sum, betti_curves, compute_persistence, euler_curve, rips_persistence
from distop.reconstruction import (
    certify_alignment,
    densify_grid,
    distances_from_pair_curves,
    euler_reconstruct_pairs,
    rounding_grid,
)
from oracles import brute_bottleneck, random_diagram, random_filtered_complex


# ---------------------------------------------------------------- 1


def test_criterion_01_case_study_orderings():
    lines = []
    ok = True
    for n, M in ((500, 1000), (200, 300)):
        t = time.time()
        cs = run_case_study(n, 10, M, seed=0)
        o = cs.orderings()
        b, l2 = cs.bottleneck_table["noisy_circle"], cs.image_table["noisy_circle"]
        ok &= o["full_diagram_noisy_closer_to_disc"] and o["averaged_image_noisy_closer_to_circle"]
        ok &= time.time() - t <= 300
        lines.append(f"n={n},M={M}: dB(noisy,disc)={b['disc']:.3f} < dB(noisy,circle)={b['circle']:.3f}"
                     f" {o['full_diagram_noisy_closer_to_disc']}; L2(noisy,circle)={l2['circle']:.3f}"
                     f" < L2(noisy,disc)={l2['disc']:.3f} {o['averaged_image_noisy_closer_to_circle']}"
                     f" ({time.time() - t:.0f}s)")
    record(1, ok, "; ".join(lines))
    assert ok


# ---------------------------------------------------------------- 2 and 3


def _clouds(count=100, seed=2024):
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        n = 5 + i % 4
        d = 2 + (i // 4) % 2
        out.append(rng.normal(size=(n, d)))
    return out


def _valid_km(n):
    return [(k, m) for m in (1, 2) for k in range(m + 2, n + 1)]


def _all_curves(P, kind, m):
    n = len(P)
    C = [s for size in range(1, n + 1) for s in combinations(range(n), size)]
    return compute_distributed(PointCloud(P), C, kind, m).entries


def _restrict(curves, subsets, kind, m, n):
    return DistributedInvariant(kind, m, {s: curves[s] for s in subsets}, n)


def _minimal_collection(n, k, m, rng):
    tops = list(enumerate_subsets(n, k))
    order = rng.permutation(len(tops))
    need = set(combinations(range(n), 2))
    count = {}
    chosen = []
    for i in order:
        t = tops[i]
        pairs = set(combinations(t, 2))
        if pairs & need:
            chosen.append(t)
            need -= pairs
        if not need:
            break
    for t in chosen:
        for p in combinations(t, 2):
            count[p] = count.get(p, 0) + 1
    # drop tops whose pairs are all covered elsewhere
    for t in list(chosen):
        pairs = list(combinations(t, 2))
        if all(count[p] > 1 for p in pairs):
            chosen.remove(t)
            for p in pairs:
                count[p] -= 1
    return closure_completion(chosen, k, m, n)


_RECON = {}


def _full_collection(n, k, m):
    tops = list(enumerate_subsets(n, k))
    return closure_completion(tops, k, m, n)


def test_criterion_02_exact_inverse():
    t0 = time.time()
    worst = 0.0
    runs = 0
    for idx, P in enumerate(_clouds()):
        n = len(P)
        D = pairwise_distances(P)
        for m in (1, 2):
            kind = "CE" if idx % 5 == 0 else "RE"
            curves = _all_curves(P, kind, m)
            for k, mm in _valid_km(n):
                if mm != m:
                    continue
                inv = _restrict(curves, _full_collection(n, k, m), kind, m, n)
                Dr = distances_from_pair_curves(euler_reconstruct_pairs(inv))
                _RECON[(idx, k, m)] = Dr
                worst = max(worst, float(np.abs(Dr - D).max()))
                runs += 1
    elapsed = time.time() - t0
    ok = worst < 1e-9 and elapsed <= 120
    record(2, ok, f"100 clouds, {runs} (k,m) reconstructions, max abs error {worst:.2e}, {elapsed:.1f}s")
    assert ok


def test_criterion_03_cover_closure_collections():
    rng = np.random.default_rng(7)
    if not _RECON:
        pytest.skip("needs criterion 2 results in the same session")
    identical = 0
    total = 0
    smaller = 0
    for idx, P in enumerate(_clouds()):
        n = len(P)
        for m in (1, 2):
            kind = "CE" if idx % 5 == 0 else "RE"
            curves = _all_curves(P, kind, m)
            for k, mm in _valid_km(n):
                if mm != m:
                    continue
                C = _minimal_collection(n, k, m, rng)
                assert check_cover_closure(C, n, k, m).ok
                smaller += len(C.of_size(k)) < math.comb(n, k)
                Dr = distances_from_pair_curves(euler_reconstruct_pairs(_restrict(curves, C, kind, m, n)))
                identical += np.array_equal(Dr, _RECON[(idx, k, m)])
                total += 1
    ok = identical == total
    record(3, ok, f"{identical}/{total} reconstructions from minimal cover+closure collections identical "
                  f"({smaller} used fewer than all k-subsets)")
    assert ok


# ---------------------------------------------------------------- 4


def _rounding_instance(rng):
    n = int(rng.integers(1, 51))
    style = rng.integers(4)
    if style == 0:
        P = rng.uniform(-10, 10, n)
        Q = P + rng.normal(0, 10.0 ** rng.uniform(-4, 0), n)
    elif style == 1:  # many ties
        P = np.round(rng.uniform(0, 3, n), 1)
        Q = np.round(P + rng.choice([-0.1, 0, 0, 0.1], n), 1)
    elif style == 2:  # clusters with a few large moves
        P = rng.choice([0.0, 5.0, 20.0], n) + rng.normal(0, 0.01, n)
        Q = P.copy()
        j = rng.integers(n)
        Q[j] += rng.normal(0, 1)
    else:
        P = np.cumsum(rng.exponential(1.0, n))
        Q = P + rng.uniform(-0.05, 0.05, n)
    return P, Q


def test_criterion_04_rounding_lemma():
    rng = np.random.default_rng(4)
    bad1 = bad2 = bad_dense = bad_pi = 0
    densified = 0
    for _ in range(1000):
        P, Q = _rounding_instance(rng)
        r = rounding_grid(P, Q)
        pp, qq = r.pi(r.P), r.pi(r.Q)
        bad1 += not np.array_equal(pp, qq)
        bound = 3 * r.epsilon + 4 * r.delta
        bad2 += not (np.all(np.abs(pp - r.P) <= bound) and np.all(np.abs(qq - r.Q) <= bound))
        if r.delta > 0:
            densified += 1
            g = densify_grid(r)
            data = np.concatenate([r.P, r.Q])
            bad_dense += not g.covering_radius(data.min(), data.max()) <= 14 * r.delta
            bad_pi += not (np.array_equal(g.round(r.P), pp) and np.array_equal(g.round(r.Q), qq))
    ok = bad1 == bad2 == bad_dense == bad_pi == 0
    record(4, ok, f"1000 instances: property (1) failures {bad1}, property (2) failures {bad2}; "
                  f"{densified} densified: density failures {bad_dense}, pi changed {bad_pi}")
    assert ok


# ---------------------------------------------------------------- 5


def test_criterion_05_bottleneck_oracle():
    rng = np.random.default_rng(5)
    worst = 0.0
    for i in range(500):
        a = random_diagram(rng, 5, integer=i % 3 == 0)
        b = random_diagram(rng, 5, integer=i % 3 == 0)
        worst = max(worst, abs(bottleneck(a, b) - brute_bottleneck(a, b)))
    ok = worst <= 1e-12
    record(5, ok, f"500 pairs, max |binary search - brute force| = {worst:.1e}")
    assert ok


# ---------------------------------------------------------------- 6


def test_criterion_06_stability():
    rng = np.random.default_rng(6)
    worst = -math.inf
    for i in range(200):
        n = int(rng.integers(3, 26))
        X = rng.normal(size=(n, 2 + i % 2))
        Y = X + rng.normal(0, 10.0 ** rng.uniform(-3, -0.5), X.shape)
        eps = quasi_isometry_distortion(pairwise_distances(X), pairwise_distances(Y))
        a, _ = rips_persistence(pairwise_distances(X))
        b, _ = rips_persistence(pairwise_distances(Y))
        for q in (0, 1):
            worst = max(worst, bottleneck(a, b, q) - eps)
    ok = worst <= 1e-12
    record(6, ok, f"200 clouds, max over degrees 0,1 of d_B - eps = {worst:.3e}")
    assert ok


# ---------------------------------------------------------------- 7


def test_criterion_07_invstab_inequality():
    rng = np.random.default_rng(77)
    violations = 0
    ratios = []
    for i in range(100):
        n = int(rng.integers(6, 9))
        flavor = "CP" if i % 4 == 0 else "RP"
        k, m = (5, 2) if i % 5 == 1 else (int(rng.integers(4, 6)), 1)
        X = rng.normal(size=(n, 2))
        Y = X + rng.uniform(-0.05, 0.05, X.shape)
        C = closure_completion(sample_subsets(n, k, 3 * math.comb(n, 2), int(rng.integers(2 ** 31))), k, m, n)
        if not check_cover_closure(C, n, k, m).ok:
            C = closure_completion(list(enumerate_subsets(n, k)), k, m, n)
        rep = certify_alignment(X, Y, None, C, flavor, m)
        violations += not rep.distortion <= rep.bound
        ratios.append(rep.bound / rep.distortion)
    ok = violations == 0
    record(7, ok, f"100 instances, {violations} violations; bound/distortion ranges "
                  f"{min(ratios):.0f}..{max(ratios):.0f}")
    assert ok


# ---------------------------------------------------------------- 8


def test_criterion_08_covering_bound():
    grid = [(6, 3, 2, 10), (8, 4, 2, 15), (10, 5, 2, 25), (10, 4, 3, 120), (12, 6, 2, 30),
            (20, 5, 2, 200), (15, 3, 1, 20), (9, 6, 3, 25)]
    trials = 10 ** 4
    fails = []
    lines = []
    for j, (n, k, p, M) in enumerate(grid):
        est = monte_carlo_cover_probability(n, k, p, M, trials, seed=100 + j)
        se = math.sqrt(est * (1 - est) / trials)
        lb = cover_probability_lower_bound(n, k, p, M)
        if est < lb - 3 * se:
            fails.append((n, k, p, M))
        lines.append(f"({n},{k},{p},{M}) MC={est:.3f} bound={lb:.3f}")
    round_trip = 0
    for n in range(3, 31, 3):
        for k in range(1, n + 1, 2):
            for p in range(1, min(k, 3) + 1):
                for eps in (0.01, 0.5, 0.9, 0.999):
                    M = required_sample_count(n, k, p, eps)
                    round_trip += cover_probability_lower_bound(n, k, p, M) < eps
    ok = not fails and round_trip == 0
    record(8, ok, "; ".join(lines) + f"; round-trip failures {round_trip}")
    assert ok


# ---------------------------------------------------------------- 9


def test_criterion_09_euler_poincare():
    rng = np.random.default_rng(9)
    mismatches = 0
    for i in range(200):
        if i % 2 == 0:
            K = random_filtered_complex(rng)
        else:
            P = rng.normal(size=(int(rng.integers(2, 8)), 2))
            m = int(rng.integers(0, 4))
            K = rips_filtration(pairwise_distances(P), m) if i % 4 == 1 else cech_filtration(P, m)
        lhs = alternating_sum(betti_curves(K))
        rhs = euler_curve(K)
        ts = np.union1d(lhs.thresholds, rhs.thresholds)
        mismatches += not (lhs == rhs and np.array_equal(lhs(ts), rhs(ts)))
    ok = mismatches == 0
    record(9, ok, f"200 complexes, {mismatches} mismatches")
    assert ok


# ---------------------------------------------------------------- 10


def _min_relative_gap(Y):
    d = np.sort(pairwise_distances(Y)[np.triu_indices(len(Y), 1)])
    return float(np.min(np.diff(d) / d[1:]))


def test_criterion_10_gradient_check():
    rng = np.random.default_rng(10)
    good = 0
    ties = []
    other = []
    h = 1e-5
    for i in range(100):
        X = rng.normal(size=(8, 2))
        Y = X + rng.normal(0, 0.3, X.shape)
        g = subset_loss_gradient(X, Y)
        fd = np.zeros_like(Y)
        for a in range(8):
            for c in range(2):
                Yp, Ym = Y.copy(), Y.copy()
                Yp[a, c] += h
                Ym[a, c] -= h
                fd[a, c] = (subset_loss(X, Yp)[0] - subset_loss(X, Ym)[0]) / (2 * h)
        err = np.linalg.norm(g - fd) / max(np.linalg.norm(fd), 1e-12)
        if err < 1e-4:
            good += 1
        elif _min_relative_gap(Y) < 1e-4:
            ties.append((i, err))
        else:
            other.append((i, err))
    if ties:
        print("tie instances excluded:", ties)
    if other:
        print("non-tie failures:", other)
    ok = good >= 95
    record(10, ok, f"{good}/100 instances with relative error < 1e-4; ties {len(ties)}, other {len(other)}")
    assert ok


# ---------------------------------------------------------------- 11


def test_criterion_11_alignment():
    X = circle(100)
    sigma = 0.1 * float(pairwise_distances(X).max())
    Y0 = add_noise(X, sigma, seed=11)
    t = time.time()
    res = align(X, Y0, AlignConfig(k=25, iterations=20000, seed=11, snapshot_every=5000))
    elapsed = time.time() - t
    short_a = align(X, Y0, AlignConfig(k=25, iterations=300, seed=11))
    short_b = align(X, Y0, AlignConfig(k=25, iterations=300, seed=11))
    deterministic = (np.array_equal(short_a.Y, short_b.Y) and np.array_equal(short_a.losses, short_b.losses)
                     and np.array_equal(res.losses[:300], short_a.losses))
    ratio = res.final_mean_distortion / res.initial_mean_distortion
    ok = ratio < 0.5 and deterministic and elapsed <= 600
    record(11, ok, f"mean pairwise distortion {res.initial_mean_distortion:.4f} -> {res.final_mean_distortion:.2e}"
                   f" (ratio {ratio:.2e}), deterministic {deterministic}, {elapsed:.0f}s")
    assert ok


# ---------------------------------------------------------------- 12


def test_criterion_12_cech_rips():
    rng = np.random.default_rng(12)
    stated = corrected = 0
    simplices = 0
    worst_db = -math.inf
    for i in range(60):
        d = 2 + i % 2
        c = math.sqrt(2 * d / (d + 1))
        P = rng.normal(size=(int(rng.integers(3, 9)), d))
        P /= pairwise_distances(P).max()
        R = rips_filtration(pairwise_distances(P), 2)
        C = cech_filtration(P, 2)
        tc = C.time_of()
        for s, tr in zip(R.simplices, R.times):
            simplices += 1
            # as stated: Cech <= Rips <= c * Cech
            stated += not (tc[s] <= tr + 1e-9 and tr <= c * tc[s] + 1e-9)
            # Jung's inequality with Cech as ball diameter: Rips <= Cech <= c * Rips
            corrected += not (tr <= tc[s] + 1e-9 and tc[s] <= c * tr + 1e-9)
        a, _ = compute_persistence(R)
        b, _ = compute_persistence(C)
        for q in (0, 1):
            worst_db = max(worst_db, bottleneck(a, b, q) - c)
    db_ok = worst_db <= 1e-9
    ok = stated == 0 and db_ok
    record(12, ok, f"per-simplex 'Cech <= Rips <= c*Cech' violated on {stated}/{simplices} simplices "
                   f"(reverse order 'Rips <= Cech <= c*Rips' violated on {corrected}); "
                   f"bottleneck <= c clause {'holds' if db_ok else 'fails'} (max d_B - c = {worst_db:.3f})")
    assert ok
