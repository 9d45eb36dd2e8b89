import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from obddlab.reduction.ddwb import (
    LocalFunction,
    ProcessError,
    check_loss_of_expectation,
    check_ratio_bound,
    ddwb_check_suite,
    random_instance,
    table_process,
    uniform_process,
)
from obddlab.reduction.lemmas import check_convexity, check_supersaturation, random_graph


# ------------------------------------------------------------- convexity
def test_convexity_example():
    r = check_convexity(range(1, 5), [{1, 2}, {1, 2}], 2)
    assert (r.lhs, r.bound, r.ok) == (2, 1, True)


def test_convexity_all_full():
    r = check_convexity(range(5), [range(5)] * 3, 4)
    assert r.lhs == r.bound == 5


def _avg_intersection(ground, sets, k):
    n = len(sets)
    total = sum(len(set(ground).intersection(*(sets[i] for i in idx))) for idx in itertools.product(range(n), repeat=k))
    return Fraction(total, n**k)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_convexity_random(seed):
    rng = np.random.default_rng(seed)
    size, n, k = int(rng.integers(1, 7)), int(rng.integers(1, 5)), int(rng.integers(0, 4))
    sets = [set(np.flatnonzero(rng.random(size) < 0.5).tolist()) for _ in range(n)]
    r = check_convexity(range(size), sets, k)
    assert r.ok
    if k:
        assert r.lhs == _avg_intersection(range(size), sets, k)


def test_convexity_errors():
    with pytest.raises(ValueError):
        check_convexity([1], [{2}], 1)
    with pytest.raises(ValueError):
        check_convexity([1], [], 1)


# ------------------------------------------------------- supersaturation
def _p3_by_enumeration(a):
    n = len(a)
    hits = sum(1 for u, v, w in itertools.product(range(n), repeat=3) if a[u][v] and a[u][w])
    return Fraction(hits, n**3)


def test_supersaturation_k4():
    a = ~np.eye(4, dtype=bool)
    r = check_supersaturation(a)
    assert r.p3 == Fraction(36, 64) == _p3_by_enumeration(a)
    assert r.bound3 == 1 - Fraction(5, 4) and r.ok


def test_supersaturation_empty():
    r = check_supersaturation(np.zeros((6, 6), bool))
    assert r.p3 == 0 and r.ok


def test_supersaturation_random():
    rng = np.random.default_rng(0)
    for _ in range(100):
        a = random_graph(12, float(rng.random()), rng)
        r = check_supersaturation(a)
        assert r.ok
    a = random_graph(5, 0.5, rng)
    assert check_supersaturation(a).p3 == _p3_by_enumeration(a)


def test_supersaturation_rejects_loops():
    with pytest.raises(ValueError):
        check_supersaturation(np.eye(3, dtype=bool))


# ------------------------------------------------------------------ DDWB
def test_uniform_case_has_no_loss():
    proc = uniform_process([3, 4])
    f = LocalFunction((1,), {(0,): Fraction(1), (3,): Fraction(1, 2)})
    rep = check_loss_of_expectation(proc, f)
    assert rep.e_pi == rep.e_uniform == Fraction(3, 8)
    assert rep.beta == 0 and rep.ok
    assert check_ratio_bound(proc).ok


def test_hand_process():
    # X1 = X2 = {0, 1}; after u1 = 0 the second step blocks 1
    dom = {(): frozenset({0, 1}), (0,): frozenset({0, 1}), (1,): frozenset({0, 1})}
    blk = {(0,): frozenset({1})}
    proc = table_process([2, 2], dom, blk)
    assert proc.distribution() == {(0, 0): Fraction(1, 2), (1, 0): Fraction(1, 4), (1, 1): Fraction(1, 4)}
    assert proc.blockage_bound() == Fraction(1, 2)
    assert proc.covering_bound() == Fraction(1, 2)
    f = LocalFunction((1,), {(1,): Fraction(1)})
    rep = check_loss_of_expectation(proc, f)
    assert rep.e_pi == Fraction(1, 4) and rep.e_uniform == Fraction(1, 2) and rep.ok


def test_empty_choice_is_an_error():
    proc = table_process([2], {(): frozenset({0})}, {(): frozenset({0})})
    with pytest.raises(ProcessError):
        proc.validate()


def test_random_processes():
    rng = np.random.default_rng(11)
    for _ in range(500):
        inst = random_instance(rng)
        rep = ddwb_check_suite(inst.process, inst.f)
        assert rep.expectation.support_ok
        assert rep.ok, (rep.expectation, rep.ratio)
        assert sum(inst.process.distribution().values()) == 1


def test_sampler_matches_distribution():
    inst = random_instance(np.random.default_rng(4), max_t=2, max_size=3)
    dist = inst.process.distribution()
    rng = np.random.default_rng(0)
    draws = 20000
    counts = {}
    for _ in range(draws):
        pt = inst.process.sample(rng)
        counts[pt] = counts.get(pt, 0) + 1
    for pt, p in dist.items():
        se = math.sqrt(float(p) * (1 - float(p)) / draws)
        assert abs(counts.get(pt, 0) / draws - float(p)) <= 5 * se + 1e-12
