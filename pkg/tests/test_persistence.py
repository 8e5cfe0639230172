import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from distop.datasets import circle
from distop.filtrations import cech_filtration, rips_filtration
from distop.geometry import pairwise_distances
from distop.persistence import (
    EulerCurve,
    PersistenceDiagram,
    alternating_sum,
    betti_curves,
    compute_persistence,
    euler_curve,
    rips_persistence,
)
from oracles import betti_numbers, random_filtered_complex


def tri(s=1.0):
    return s * (1 - np.eye(3))


def pts(dgm, q):
    return sorted(map(tuple, dgm[q].tolist()))


def test_two_points():
    dgm, pairing = compute_persistence(rips_filtration(np.array([[0, 2.0], [2.0, 0]]), 1))
    assert pts(dgm, 0) == [(0, 2.0), (0, math.inf)]
    assert pairing.pairs[0][0][1] == (0, 1) or pairing.pairs[0][1][1] == (0, 1)


def test_equilateral_m1_and_m2():
    dgm, _ = compute_persistence(rips_filtration(tri(), 1))
    assert pts(dgm, 0) == [(0, 1), (0, 1), (0, math.inf)]
    assert pts(dgm, 1) == [(1, math.inf)]
    assert dgm.truncated == 1 and dgm.metric_degrees() == [0]
    dgm, _ = compute_persistence(rips_filtration(tri(), 2))
    assert len(dgm[1]) == 0


def test_critical_pairing_times():
    D = pairwise_distances(np.random.default_rng(5).normal(size=(8, 2)))
    K = rips_filtration(D, 2)
    dgm, pairing = compute_persistence(K)
    t = K.time_of()
    for q in (0, 1):
        for (b, d), (sb, sd) in zip(dgm[q], pairing.pairs[q]):
            assert t[sb] == b
            assert (sd is None and d == math.inf) or t[sd] == d


def test_euler_examples():
    c = euler_curve(rips_filtration(np.array([[0, 3.0], [3.0, 0]]), 1))
    assert c(0) == 2 and c(2.99) == 2 and c(3) == 1 and c(-1) == 0
    c = euler_curve(rips_filtration(pairwise_distances(np.random.default_rng(0).normal(size=(5, 2))), 0))
    assert c == EulerCurve.constant(5)
    c = euler_curve(rips_filtration(tri(2.0), 2))
    assert c == EulerCurve([0, 2.0], [3, 1])


def test_betti_two_points_and_circle():
    b0, b1 = betti_curves(rips_filtration(np.array([[0, 1.5], [1.5, 0]]), 1))
    assert b0 == EulerCurve([0, 1.5], [2, 1])
    X = circle(12)
    K = rips_filtration(pairwise_distances(X), 2)
    dgm, _ = compute_persistence(K)
    b1 = betti_curves(K)[1]
    big = max(dgm[1], key=lambda p: p[1] - p[0])
    mid = (big[0] + big[1]) / 2
    assert b1(mid) == 1 and b1(big[0] - 1e-9) == 0 and b1(big[1]) == 0


@pytest.mark.parametrize("seed", range(30))
def test_betti_numbers_match_rank_oracle(seed):
    rng = np.random.default_rng(seed)
    K = random_filtered_complex(rng)
    curves = betti_curves(K)
    for r in np.unique(K.times):
        sub = [s for s, t in zip(K.simplices, K.times) if t <= r]
        expect = betti_numbers(sub, K.skeleton_dim)
        got = [int(c(r)) for c in curves]
        assert got == expect


@given(st.integers(0, 10 ** 6))
def test_euler_poincare(seed):
    K = random_filtered_complex(np.random.default_rng(seed))
    assert alternating_sum(betti_curves(K)) == euler_curve(K)


def test_essential_degree0_counts_components():
    D = pairwise_distances(np.random.default_rng(2).normal(size=(6, 2)))
    dgm, _ = compute_persistence(rips_filtration(D, 1))
    assert len(dgm.essential(0)) == 1


@pytest.mark.parametrize("seed", range(40))
def test_fast_rips_matches_reduction(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 16))
    X = rng.normal(size=(n, 2))
    if seed % 3 == 0:
        X = np.round(X, 1)  # lots of tied distances
    D = pairwise_distances(X)
    a, pa = compute_persistence(rips_filtration(D, 2))
    b, pb = rips_persistence(D)
    for q in (0, 1):
        assert np.array_equal(a[q][np.lexsort(a[q].T[::-1])], b[q][np.lexsort(b[q].T[::-1])])
        assert sorted(map(str, pa.pairs[q])) == sorted(map(str, pb.pairs[q]))


def test_euler_curve_arithmetic_and_json():
    a = EulerCurve([0, 1, 2], [3, 2, 1])
    b = EulerCurve([0, 1.5], [1, 0])
    s = a + b
    assert s(0) == 4 and s(1) == 3 and s(1.5) == 2 and s(2) == 1
    assert (a - a) == EulerCurve()
    assert EulerCurve.from_json(a.to_json()) == a
    with pytest.raises(ValueError):
        EulerCurve([1, 0], [1, 2])
    c = EulerCurve.from_events([0, 0, 1, math.inf], [1, 1, -1, 5])
    assert c == EulerCurve([0, 1], [2, 1])


def test_diagram_json_round_trip():
    D = pairwise_distances(np.random.default_rng(3).normal(size=(7, 2)))
    dgm, _ = compute_persistence(rips_filtration(D, 1))
    back = PersistenceDiagram.from_json(dgm.to_json())
    assert back == dgm and back.truncated == 1
    with pytest.raises(ValueError):
        PersistenceDiagram({0: [(2.0, 1.0)]})


def test_cech_persistence_runs():
    P = np.random.default_rng(4).normal(size=(6, 2))
    dgm, _ = compute_persistence(cech_filtration(P, 2))
    assert len(dgm.essential(0)) == 1
