import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from obddlab.cnf import edge_var, match_roles, vertex_var
from obddlab.reduction.partition import (
    Partition,
    PartitionError,
    density,
    density_exact,
    density_mc,
    density_profile,
    full_partition,
    k12,
    partition_from_sides,
    pm,
    pm_size,
    random_partition,
    read_partition,
    split_by_order,
    tm,
    tm_size,
    write_partition,
)
from oracles import density_by_definition


def test_density_extremes():
    assert density_exact(full_partition(2)) == 1
    all_vertices_to_one = Partition(2, frozenset(match_roles(2)))
    assert density_exact(all_vertices_to_one) == 0


@pytest.mark.parametrize("m", [1, 2])
def test_density_matches_definition(m):
    rng = np.random.default_rng(m)
    for _ in range(3 if m == 2 else 10):
        p = random_partition(m, rng)
        assert density_exact(p) == density_by_definition(p)


def test_density_mc_close_to_exact():
    rng = np.random.default_rng(5)
    p = random_partition(2, rng)
    est = density_mc(p, 100_000, rng)
    assert abs(est.mean - float(density_exact(p))) <= 4 * est.stderr
    assert density(p, "mc", 1000, seed=3) == density(p, "mc", 1000, seed=3)


def _relabel(p: Partition, slot_perm, row_perm) -> Partition:
    ones = set()
    for v in p.side_one:
        if v.role == "x":
            i, a, b = v.idx
            ones.add(edge_var(slot_perm[i - 1], a, b))
        else:
            j, u = v.idx
            ones.add(vertex_var(row_perm[j - 1], u))
    return Partition(p.m, frozenset(ones))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_density_symmetric_under_relabeling(seed, m):
    rng = np.random.default_rng(seed)
    p = random_partition(m, rng)
    q = _relabel(p, list(rng.permutation(m) + 1), list(rng.permutation(2 * m + 1) + 1))
    assert density_exact(p) == density_exact(q)


def test_full_partition_profile():
    prof = density_profile(full_partition(2))
    assert prof.delta == 1
    assert prof.g == (0, 1)
    rows = 5
    assert all(len(t) == rows * (rows - 1) * (rows - 2) for t in prof.n3)


def test_empty_vertex_side_degenerates():
    # delta = 0 makes both non-strict thresholds vacuous, so every slot is dense
    p = Partition(2, frozenset(match_roles(2)))
    prof = density_profile(p)
    assert prof.delta == 0
    assert prof.g == (0, 1)
    assert (prof.triple_counts == 0).all()


def test_profile_thresholds_by_definition():
    rng = np.random.default_rng(9)
    p = random_partition(2, rng)
    prof = density_profile(p)
    rows, ce = 5, math.comb(6, 2)
    for i in range(1, 3):
        want = set()
        for t in itertools.permutations(range(1, rows + 1), 3):
            vs = set.intersection(*(set(p.vertex_set(j)) for j in t))
            cnt = sum(1 for a, b in p.edge_set(i) if a in vs and b in vs)
            if Fraction(cnt) >= prof.delta / 3 * ce:
                want.add(t)
        got = {tuple(x + 1 for x in row) for row in prof.n3[i - 1].tolist()}
        assert got == want
        dense = Fraction(len(want)) >= prof.delta / 12 * rows**3
        assert ((i - 1) in prof.g) == dense


def test_profile_modes():
    p = random_partition(3, np.random.default_rng(2))
    assert density_profile(p).mode == "exact"
    mc = density_profile(p, mode="mc", samples=2000, seed=1)
    assert mc.mode == "mc" and mc.delta != density_exact(p)
    assert density_profile(p, Fraction(1, 2)).mode == "given"


def test_helper_set_examples():
    assert len(k12([(1, 2), (2, 3), (1, 3)])) == 6
    assert len(pm([1, 2, 3], [1])) == 5 == pm_size(3, 1)
    assert len(tm([1, 2, 3], [1])) == 19 == tm_size(3, 1)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6), st.integers(0, 6))
def test_helper_sizes(n, k):
    k = min(k, n)
    assert len(pm(range(n), range(k))) == pm_size(n, k)
    assert len(tm(range(n), range(k))) == tm_size(n, k)


# -------------------------------------------------------------- splitting
def test_split_edges_first():
    m = 2
    roles = match_roles(m)
    order = [v for v in roles if v.role == "x"] + [v for v in roles if v.role == "y"]
    p = split_by_order(order, m)
    n_edge = m * math.comb(3 * m, 2)
    assert p.side_one == frozenset(order[: math.ceil(n_edge / 2)])


def test_split_vertices_first():
    m = 2
    roles = match_roles(m)
    order = [v for v in roles if v.role == "y"] + [v for v in roles if v.role == "x"]
    p = split_by_order(order, m)
    n_vert = (2 * m + 1) * 3 * m
    prefix = order[: math.ceil(n_vert / 2)]
    assert all(p.side(v) == "II" for v in prefix)
    assert all(p.side(v) == "I" for v in order[len(prefix):])


def test_split_ignores_selector_bits():
    from obddlab.cnf import perm_var

    m = 1
    roles = match_roles(m)
    with_z = [perm_var(1)] + roles[:4] + [perm_var(2)] + roles[4:]
    assert split_by_order(with_z, m) == split_by_order(roles, m)


# ------------------------------------------------------------ file format
def test_partition_file_round_trip(tmp_path):
    p = random_partition(2, np.random.default_rng(0))
    write_partition(p, tmp_path / "p.txt")
    assert read_partition(tmp_path / "p.txt", 2) == p


@pytest.mark.parametrize(
    "text",
    ["x1_1_2 I\n", "x1_1_2 III\n" + "\n", "bogus I\n", "x1_1_2\n"],
)
def test_partition_file_errors(tmp_path, text):
    path = tmp_path / "p.txt"
    path.write_text(text)
    with pytest.raises(PartitionError):
        read_partition(path, 1)


def test_partition_from_sides_checks_cover():
    with pytest.raises(PartitionError):
        partition_from_sides(1, {})
