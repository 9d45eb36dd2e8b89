import math

import numpy as np
import pytest

from obddlab.cnf import MAssignment, find_bad_edges, gen_match, is_nondegenerate, random_nondegenerate
from obddlab.obdd import VarOrder
from obddlab.proof import Conjunction
from obddlab.reduction.layout import LayoutProcess, StuckError, max_guarded_n
from obddlab.reduction.partition import density_profile, full_partition
from obddlab.reduction.protocol import (
    FullExchangeProtocol,
    NotSplitCompatible,
    extract_search_protocol,
)
from obddlab.reduction.reduce import SetDisjInstance, random_disjoint, random_intersecting, run_reduction
from obddlab.solver import choose_order, solve


@pytest.fixture(scope="module")
def match2():
    c = gen_match(2)
    d = solve(c, choose_order(c, "vertex-major")).derivation.frozen()
    return c, d, extract_search_protocol(c, d)


def _expected_bits(proto, run):
    """Recount: each conjunction on the path costs the node-index width plus one reply bit if sent."""
    total = 0
    lines = proto.deriv.lines
    for k in run.path:
        if isinstance(lines[k].rule, Conjunction):
            total += math.ceil(math.log2(len(proto.nodes[lines[k].rule.left]) + 2))
    total += sum(1 for msg in run.transcript if msg.speaker != proto.prefix_owner)
    return total


def test_match2_protocol_finds_bad_edges(match2):
    c, d, proto = match2
    rng = np.random.default_rng(0)
    bound = proto.cost_bound()
    for _ in range(500):
        a = random_nondegenerate(2, rng)
        run = proto.run(a)
        assert run.edge in find_bad_edges(a)
        assert run.bits <= bound
        assert run.bits == _expected_bits(proto, run)


def test_match1_protocol_is_exhaustive():
    c = gen_match(1)
    d = solve(c, choose_order(c, "vertex-major")).derivation.frozen()
    proto = extract_search_protocol(c, d)
    roles = c.roles
    for bits in range(1 << len(roles)):
        a = MAssignment(1, frozenset(r for k, r in enumerate(roles) if bits >> k & 1))
        if is_nondegenerate(a):
            assert proto.run(a).edge in find_bad_edges(a)


def test_locality_audit(match2):
    c, d, proto = match2
    rng = np.random.default_rng(1)
    for _ in range(30):
        assert proto.audit_locality(random_nondegenerate(2, rng), rng)


def test_interleaved_order_rejected():
    c = gen_match(1)
    xs = [v for v in range(1, c.num_vars + 1) if c.role(v).role == "x"]
    ys = [v for v in range(1, c.num_vars + 1) if c.role(v).role == "y"]
    # under the full partition x's belong to one player and y's to the other
    order = VarOrder([ys[0], xs[0], ys[1], xs[1], ys[2], xs[2]] + ys[3:])
    d = solve(c, order).derivation.frozen()
    with pytest.raises(NotSplitCompatible):
        extract_search_protocol(c, d, full_partition(1))


def test_full_exchange_reference():
    p = full_partition(2)
    proto = FullExchangeProtocol(p)
    rng = np.random.default_rng(2)
    for _ in range(50):
        a = random_nondegenerate(2, rng)
        run = proto.run(a)
        assert run.edge == min(find_bad_edges(a))


# -------------------------------------------------------------- reduction
@pytest.fixture(scope="module")
def m6():
    prof = density_profile(full_partition(6))
    n = max_guarded_n(prof)
    return prof, n, LayoutProcess(prof, n), FullExchangeProtocol(prof.partition)


def test_disjoint_always_zero(m6):
    prof, n, proc, proto = m6
    rng = np.random.default_rng(3)
    for _ in range(200):
        inst = random_disjoint(n, rng)
        assert not inst.intersecting
        assert run_reduction(prof, proto, inst, rng, reps=2, process=proc).answer == 0


def test_intersecting_positive_rate_and_amplification(m6):
    prof, n, proc, proto = m6
    rates = []
    for reps in (1, 3):
        rng = np.random.default_rng(4)
        hits = sum(run_reduction(prof, proto, random_intersecting(n, rng), rng, reps=reps, process=proc).answer for _ in range(200))
        rates.append(hits / 200)
    assert rates[0] > 0
    assert rates[1] >= rates[0]


def test_all_ones_single_gadget():
    prof = density_profile(full_partition(6))
    proto = FullExchangeProtocol(prof.partition)
    rng = np.random.default_rng(5)
    inst = SetDisjInstance((1,), (1,))
    hits = sum(run_reduction(prof, proto, inst, rng).answer for _ in range(200))
    assert hits > 0


def test_instance_validation():
    with pytest.raises(ValueError):
        SetDisjInstance((1,), (1, 0))
    with pytest.raises(ValueError):
        SetDisjInstance((2,), (0,))
    with pytest.raises(ValueError):
        random_intersecting(0, np.random.default_rng(0))


def test_stuck_propagates():
    prof = density_profile(full_partition(2))
    with pytest.raises(StuckError):
        run_reduction(prof, FullExchangeProtocol(prof.partition), SetDisjInstance((0, 0), (0, 0)), np.random.default_rng(0))
