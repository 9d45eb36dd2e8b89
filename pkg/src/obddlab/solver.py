"""Satisfiability by bucketed symbolic quantifier elimination.

Every variable gets its own bucket.  Buckets are processed from the last
variable of the order to the first; a clause belongs to the bucket of its
variable that comes latest in the order, which is the first of its
variables to be eliminated.  Each step is logged as a line of a tree-like
OBDD derivation.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .cnf import Cnf, VarId
from .obdd import NodeBudgetExceeded, NodeRef, ObddStore, VarOrder
from .proof import Axiom, Conjunction, Derivation, Projection

SAT = "SAT"
UNSAT = "UNSAT"
BUDGET = "BUDGET"


@dataclass(frozen=True)
class Bucket:
    variables: tuple[int, ...]
    clauses: tuple[int, ...]


@dataclass(frozen=True)
class Schedule:
    buckets: tuple[Bucket, ...]

    def elimination_order(self) -> list[int]:
        return [v for b in self.buckets for v in b.variables]


def bucket_schedule(cnf: Cnf, order: VarOrder) -> Schedule:
    pos = order.position
    members: dict[int, list[int]] = {v: [] for v in order.perm}
    for k, c in enumerate(cnf.clauses):
        if not c:
            # the empty clause has no variable; it joins the first bucket
            members.setdefault(order.perm[-1], []).append(k)
            continue
        last = max(c, key=lambda lit: pos(abs(lit)))
        members[abs(last)].append(k)
    buckets = tuple(Bucket((v,), tuple(members[v])) for v in reversed(order.perm))
    return Schedule(buckets)


def schedule_is_valid(cnf: Cnf, order: VarOrder, schedule: Schedule) -> bool:
    seen_vars: list[int] = []
    seen_clauses: list[int] = []
    for b in schedule.buckets:
        seen_vars.extend(b.variables)
        seen_clauses.extend(b.clauses)
    if sorted(seen_vars) != sorted(order.perm):
        return False
    if sorted(seen_clauses) != list(range(len(cnf.clauses))):
        return False
    eliminated: set[int] = set()
    for b in schedule.buckets:
        for k in b.clauses:
            if any(abs(l) in eliminated for l in cnf.clauses[k]):
                return False
        eliminated.update(b.variables)
    return True


@dataclass
class SolveResult:
    verdict: str
    derivation: Derivation
    peak_nodes: int
    seconds: float
    store: ObddStore = field(repr=False)

    @property
    def unsat(self) -> bool:
        return self.verdict == UNSAT


def _balanced_conjunction(store: ObddStore, deriv: Derivation, items: list[tuple[int, NodeRef]]):
    """Conjoin (line, ref) pairs pairwise, level by level; return the root pair.

    Stops early when a conjunction yields FALSE.
    """
    while len(items) > 1:
        nxt = []
        for k in range(0, len(items) - 1, 2):
            (la, ra), (lb, rb) = items[k], items[k + 1]
            r = store.apply_and(ra, rb)
            line = deriv.add(Conjunction(la, lb), r)
            if r.is_false:
                return line, r
            nxt.append((line, r))
        if len(items) % 2:
            nxt.append(items[-1])
        items = nxt
    return items[0]


def solve(
    cnf: Cnf,
    order: VarOrder | Sequence[int],
    schedule: Schedule | None = None,
    node_cap: int | None = None,
) -> SolveResult:
    order = order if isinstance(order, VarOrder) else VarOrder(order)
    if schedule is None:
        schedule = bucket_schedule(cnf, order)
    store = ObddStore(order, node_cap=node_cap)
    deriv = Derivation(order)
    t0 = time.perf_counter()
    carried: tuple[int, NodeRef] | None = None
    try:
        for bucket in schedule.buckets:
            items = []
            for k in bucket.clauses:
                r = store.build_clause(cnf.clauses[k])
                items.append((deriv.add(Axiom(k), r), r))
                if r.is_false:
                    return SolveResult(UNSAT, deriv, store.node_count, time.perf_counter() - t0, store)
            items.sort(key=lambda it: store.size(it[1]))
            if items:
                cur = _balanced_conjunction(store, deriv, items)
                if cur[1].is_false:
                    return SolveResult(UNSAT, deriv, store.node_count, time.perf_counter() - t0, store)
                if carried is not None:
                    r = store.apply_and(carried[1], cur[1])
                    cur = (deriv.add(Conjunction(carried[0], cur[0]), r), r)
                    if r.is_false:
                        return SolveResult(UNSAT, deriv, store.node_count, time.perf_counter() - t0, store)
                carried = cur
            if carried is None:
                continue
            support = None
            for v in bucket.variables:
                if support is None:
                    support = store.support(carried[1])
                if v in support:
                    r = store.exists(carried[1], v)
                    carried = (deriv.add(Projection(carried[0], v), r), r)
                    support = None
            store.clear_memo()
    except NodeBudgetExceeded:
        return SolveResult(BUDGET, deriv, store.node_count, time.perf_counter() - t0, store)
    seconds = time.perf_counter() - t0
    if carried is None or carried[1].is_true:
        return SolveResult(SAT, deriv, store.node_count, seconds, store)
    if carried[1].is_false:
        return SolveResult(UNSAT, deriv, store.node_count, seconds, store)
    raise AssertionError("every variable was eliminated but the result is not constant")


# ------------------------------------------------------------------- orders
def natural_order(cnf: Cnf) -> VarOrder:
    return VarOrder(range(1, cnf.num_vars + 1))


def degree_order(cnf: Cnf) -> VarOrder:
    occ = [0] * (cnf.num_vars + 1)
    for c in cnf.clauses:
        for l in c:
            occ[abs(l)] += 1
    return VarOrder(sorted(range(1, cnf.num_vars + 1), key=lambda v: (-occ[v], v)))


def vertex_major_order(cnf: Cnf) -> VarOrder:
    """Selector bits, then vertex variables grouped by vertex, then edge
    variables grouped by edge, then anything else in index order.

    Grouping every slot of an edge (and every row of a vertex) together keeps
    the carried OBDD of Match_m small; the vertex block goes first so the
    edge variables are eliminated first.
    """
    rank = {"z": 0, "y": 1, "x": 2}

    def key(v: int):
        r = cnf.role(v)
        if r.role == "y":
            j, u = r.idx
            return (1, u, j)
        if r.role == "x":
            i, a, b = r.idx
            return (2, a, b, i)
        return (rank.get(r.role, 3), v)

    return VarOrder(sorted(range(1, cnf.num_vars + 1), key=key))


def read_order_file(cnf: Cnf, path: str | Path) -> VarOrder:
    """Whitespace-separated variable names or DIMACS integers."""
    toks = Path(path).read_text().split()
    out = []
    for t in toks:
        out.append(int(t) if t.lstrip("-").isdigit() else cnf.var(VarId.parse(t)))
    order = VarOrder(out)
    if sorted(order.perm) != list(range(1, cnf.num_vars + 1)):
        raise ValueError("order file must list every variable exactly once")
    return order


def write_order_file(cnf: Cnf, order: VarOrder, path: str | Path) -> None:
    Path(path).write_text("\n".join(cnf.name(v) for v in order.perm) + "\n")


def choose_order(cnf: Cnf, heuristic: str) -> VarOrder:
    """``natural``, ``degree``, ``vertex-major``, or ``@path`` / ``file:path`` for an order file."""
    if heuristic == "natural":
        return natural_order(cnf)
    if heuristic == "degree":
        return degree_order(cnf)
    if heuristic == "vertex-major":
        return vertex_major_order(cnf)
    if heuristic.startswith("@"):
        return read_order_file(cnf, heuristic[1:])
    if heuristic.startswith("file:"):
        return read_order_file(cnf, heuristic[5:])
    raise ValueError(f"unknown order heuristic {heuristic!r}")
