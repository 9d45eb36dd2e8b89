import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from obddlab.cnf import Cnf, gen_indmatch, gen_match, gen_php, perm_var
from obddlab.field import PermFamily
from obddlab.mutate import KINDS, mutants
from obddlab.obdd import ObddStore, SerializedObdd, VarOrder
from obddlab.proof import (
    Axiom,
    CheckCache,
    Conjunction,
    Derivation,
    Line,
    ProofParseError,
    Projection,
    Subsumption,
    check_derivation,
    lift_match_refutation,
    parse_proof,
    proof_size,
    restrict_and_rename,
    write_proof,
)
from obddlab.solver import choose_order, solve


def two_axiom():
    cnf = Cnf(1, [(1,), (-1,)])
    s = ObddStore(VarOrder([1]))
    d = Derivation(s.order)
    a = d.add(Axiom(0), s.build_clause([1]))
    b = d.add(Axiom(1), s.build_clause([-1]))
    d.add(Conjunction(a, b), s.FALSE)
    return cnf, d, s


def test_two_axiom_refutation_accepted():
    cnf, d, _ = two_axiom()
    assert check_derivation(cnf, d).ok


def test_final_true_rejected_semantically():
    cnf, d, s = two_axiom()
    d.lines[2] = Line(d.lines[2].rule, s.TRUE)
    v = check_derivation(cnf, d)
    assert not v.ok and v.failure.line == 2 and v.failure.kind == "semantic"


def test_proof_size_examples():
    _, d, _ = two_axiom()
    assert proof_size(d) == 3 + 3 + 1
    assert proof_size(Derivation(VarOrder([1]))) == 0
    sizes = [proof_size(Derivation(d.order, d.lines[:k])) for k in range(4)]
    assert sizes == sorted(sizes)


def test_structural_errors_are_distinct():
    cnf, d, s = two_axiom()
    bad = Derivation(d.order, d.lines[:2] + [Line(Conjunction(0, 5), s.FALSE)])
    assert check_derivation(cnf, bad).failure.kind == "structural"
    dup = Derivation(d.order, d.lines[:2] + [Line(Conjunction(0, 0), s.build_clause([1]))])
    v = check_derivation(cnf, dup, refutation=False)
    assert not v.ok and v.failure.kind == "structural" and "twice" in v.failure.reason
    wrong_order = Derivation(VarOrder([1, 2]), d.lines)
    assert check_derivation(cnf, wrong_order).failure.kind == "structural"
    no_clause = Derivation(d.order, [Line(Axiom(7), s.TRUE)])
    assert check_derivation(cnf, no_clause, refutation=False).failure.kind == "structural"


def test_subsumption_rule():
    cnf = Cnf(2, [(1,), (-1, 2)])
    s = ObddStore(VarOrder([1, 2]))
    d = Derivation(s.order)
    a = d.add(Axiom(0), s.build_clause([1]))
    d.add(Subsumption(a), s.build_clause([1, 2]))
    assert check_derivation(cnf, d, refutation=False).ok
    d2 = Derivation(s.order)
    b = d2.add(Axiom(1), s.build_clause([-1, 2]))
    d2.add(Subsumption(b), s.build_clause([2]))
    assert not check_derivation(cnf, d2, refutation=False).ok


def test_projection_rule():
    cnf = Cnf(2, [(1, 2)])
    s = ObddStore(VarOrder([1, 2]))
    d = Derivation(s.order)
    a = d.add(Axiom(0), s.build_clause([1, 2]))
    d.add(Projection(a, 1), s.TRUE)
    assert check_derivation(cnf, d, refutation=False).ok
    d.lines[1] = Line(Projection(a, 1), s.var_node(2))
    assert not check_derivation(cnf, d, refutation=False).ok


@pytest.mark.parametrize("cnf", [gen_match(1), gen_php(3), gen_php(4)], ids=["match1", "php3", "php4"])
def test_round_trip_and_mutants(cnf):
    res = solve(cnf, choose_order(cnf, "degree"))
    d = res.derivation.frozen()
    text = write_proof(d, cnf)
    back = parse_proof(text, cnf)
    assert write_proof(back, cnf) == text
    assert check_derivation(cnf, back) == check_derivation(cnf, res.derivation)
    assert proof_size(back) == proof_size(res.derivation)
    cache = CheckCache()
    muts = mutants(cnf, d, 60, np.random.default_rng(1))
    assert len(muts) == 60
    assert len({m.kind for m in muts}) >= 5 and {m.kind for m in muts} <= set(KINDS)
    for mu in muts:
        assert not check_derivation(cnf, mu.deriv, cache=cache).ok, mu.kind


def test_duplicated_antecedent_always_rejected():
    cnf = gen_php(3)
    d = solve(cnf, choose_order(cnf, "natural")).derivation.frozen()
    conj = [k for k, l in enumerate(d.lines) if isinstance(l.rule, Conjunction)]
    for k in conj[:10]:
        r = d.lines[k].rule
        lines = list(d.lines)
        lines[k] = Line(Conjunction(r.left, r.left), lines[k].obdd)
        assert not check_derivation(cnf, Derivation(d.order, lines)).ok


@pytest.mark.parametrize(
    "mutate",
    [
        lambda t: t + "garbage\n",
        lambda t: t.replace("\n", " extra\n", 1),
        lambda t: t.replace("| obdd", "| obd", 1),
        lambda t: "\n".join(t.split("\n")[1:]),
        lambda t: t.replace("a 0 ", "a x ", 1),
    ],
)
def test_parse_rejects_malformed_logs(mutate):
    cnf = gen_match(1)
    text = write_proof(solve(cnf, choose_order(cnf, "natural")).derivation, cnf)
    with pytest.raises(ProofParseError):
        parse_proof(mutate(text), cnf)


def test_parse_rejects_forward_node_reference():
    cnf = Cnf(1, [(1,)])
    with pytest.raises(ProofParseError):
        parse_proof("order v1\na 0 | obdd v1:F:0\n", cnf)


# ------------------------------------------------- permutation transform
@pytest.fixture(scope="module")
def match1_refutation():
    c = gen_match(1)
    return c, solve(c, choose_order(c, "vertex-major")).derivation.frozen()


def test_lift_then_restrict_every_permutation(match1_refutation):
    c, d = match1_refutation
    ind = gen_indmatch(1)
    fam = PermFamily(1)
    for idx in range(len(fam)):
        lifted = lift_match_refutation(d, c, ind, idx, fam)
        assert check_derivation(ind, lifted, refutation=False).ok
        back = restrict_and_rename(lifted, ind, c, idx, fam)
        assert check_derivation(c, back).ok
        assert proof_size(back) <= proof_size(lifted)


def test_identity_restriction_only_drops_selector(match1_refutation):
    c, d = match1_refutation
    ind = gen_indmatch(1)
    lifted = lift_match_refutation(d, c, ind, 0)
    back = restrict_and_rename(lifted, ind, c, 0)
    zs = {ind.var(perm_var(b)) for b in range(1, 4)}
    names_back = [c.name(v) for v in back.order.perm]
    names_lift = [ind.name(v) for v in lifted.order.perm if v not in zs]
    assert names_back == names_lift == [c.name(v) for v in d.order.perm]


def test_restrict_rejects_unknown_permutation(match1_refutation):
    c, d = match1_refutation
    ind = gen_indmatch(1)
    with pytest.raises(ValueError):
        restrict_and_rename(lift_match_refutation(d, c, ind, 0), ind, c, 99)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_solver_proofs_check(seed):
    rng = np.random.default_rng(seed)
    c = gen_php(int(rng.integers(1, 5)))
    order = VarOrder(int(v) + 1 for v in rng.permutation(c.num_vars))
    res = solve(c, order)
    assert check_derivation(c, res.derivation).ok
    assert check_derivation(c, parse_proof(write_proof(res.derivation, c), c)).ok
