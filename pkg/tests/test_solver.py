import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from obddlab.cnf import Cnf, gen_match, gen_php
from obddlab.obdd import VarOrder
from obddlab.proof import Axiom, check_derivation
from obddlab.solver import (
    BUDGET,
    SAT,
    UNSAT,
    bucket_schedule,
    choose_order,
    degree_order,
    schedule_is_valid,
    solve,
    write_order_file,
)
from oracles import brute_satisfiable


def random_cnf(rng, nvars, nclauses, width=3):
    clauses = []
    for _ in range(nclauses):
        w = int(rng.integers(1, width + 1))
        vs = rng.choice(nvars, size=min(w, nvars), replace=False) + 1
        clauses.append(tuple(int(v) if rng.random() < 0.5 else -int(v) for v in vs))
    return Cnf(nvars, clauses)


def test_bucket_rule_small_example():
    # {x}, {-x or y}; order (y, x) eliminates x first and both clauses mention x
    c = Cnf(2, [(1,), (-1, 2)])
    sched = bucket_schedule(c, VarOrder([2, 1]))
    assert sched.buckets[0].variables == (1,)
    assert sched.buckets[0].clauses == (0, 1)
    assert schedule_is_valid(c, VarOrder([2, 1]), sched)


def test_schedule_invariant_random_orders():
    c = gen_match(2)
    rng = np.random.default_rng(0)
    for _ in range(20):
        order = VarOrder(int(v) + 1 for v in rng.permutation(c.num_vars))
        assert schedule_is_valid(c, order, bucket_schedule(c, order))


def test_sat_example():
    res = solve(Cnf(2, [(1, 2)]), [1, 2])
    assert res.verdict == SAT
    assert check_derivation(Cnf(2, [(1, 2)]), res.derivation, refutation=False).ok


@pytest.mark.parametrize("cnf", [gen_match(1), gen_php(3)], ids=["match1", "php3"])
def test_unsat_examples(cnf):
    res = solve(cnf, choose_order(cnf, "natural"))
    assert res.verdict == UNSAT
    assert check_derivation(cnf, res.derivation).ok
    assert res.peak_nodes >= 2


def test_budget_outcome():
    c = gen_php(4)
    res = solve(c, choose_order(c, "natural"), node_cap=20)
    assert res.verdict == BUDGET


def test_empty_clause_is_unsat():
    res = solve(Cnf(1, [()]), [1])
    assert res.verdict == UNSAT


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_verdict_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 15))
    c = random_cnf(rng, n, int(rng.integers(0, 4 * n + 2)))
    order = VarOrder(int(v) + 1 for v in rng.permutation(n))
    res = solve(c, order)
    assert (res.verdict == SAT) == brute_satisfiable(c.clauses, n)
    assert check_derivation(c, res.derivation, refutation=res.verdict == UNSAT).ok


def test_verdicts_up_to_twenty_variables():
    rng = np.random.default_rng(20)
    for n in (16, 18, 20):
        for ratio in (3.0, 4.3, 5.5):
            c = random_cnf(rng, n, int(ratio * n))
            res = solve(c, degree_order(c))
            assert (res.verdict == SAT) == brute_satisfiable(c.clauses, n)


def test_solver_never_emits_subsumption_and_is_tree_like():
    c = gen_php(3)
    res = solve(c, choose_order(c, "degree"))
    used = set()
    for line in res.derivation.lines:
        for a in getattr(line.rule, "left", None), getattr(line.rule, "right", None), getattr(line.rule, "ante", None):
            if a is not None:
                assert a not in used
                used.add(a)
    assert any(isinstance(l.rule, Axiom) for l in res.derivation.lines)


def test_orders():
    c = Cnf(3, [(1, 2), (2, 3), (-2,)])
    assert choose_order(c, "natural").perm == (1, 2, 3)
    assert choose_order(c, "degree").perm == (2, 1, 3)
    with pytest.raises(ValueError):
        choose_order(c, "bogus")


def test_order_file_round_trip(tmp_path):
    c = gen_match(1)
    order = choose_order(c, "vertex-major")
    write_order_file(c, order, tmp_path / "o.txt")
    assert choose_order(c, f"@{tmp_path / 'o.txt'}") == order


def test_vertex_major_groups_vertices():
    c = gen_match(2)
    order = choose_order(c, "vertex-major")
    roles = [c.role(v) for v in order.perm]
    ys = [r for r in roles if r.role == "y"]
    assert roles[: len(ys)] == ys
    assert [r.idx[1] for r in ys] == sorted(r.idx[1] for r in ys)
