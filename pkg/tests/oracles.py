"""Independent reference implementations used by the tests.

Nothing here calls into the OBDD operations under test except to read node
structure; truth tables are computed directly with numpy.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np


def assignments(nvars: int) -> np.ndarray:
    """Row r holds the bits of r; column k is variable k + 1."""
    r = np.arange(1 << nvars, dtype=np.int64)
    return ((r[:, None] >> np.arange(nvars)) & 1).astype(bool)


# ------------------------------------------------------------- formulas
def random_formula(rng: np.random.Generator, nvars: int, depth: int):
    if depth == 0 or rng.random() < 0.2:
        r = rng.random()
        if r < 0.05:
            return ("const", int(rng.integers(2)))
        return ("var", int(rng.integers(1, nvars + 1)))
    op = ("and", "or", "not", "xor")[int(rng.integers(4))]
    if op == "not":
        return ("not", random_formula(rng, nvars, depth - 1))
    return (op, random_formula(rng, nvars, depth - 1), random_formula(rng, nvars, depth - 1))


def formula_table(expr, table: np.ndarray) -> np.ndarray:
    kind = expr[0]
    if kind == "const":
        return np.full(len(table), bool(expr[1]))
    if kind == "var":
        return table[:, expr[1] - 1].copy()
    if kind == "not":
        return ~formula_table(expr[1], table)
    a, b = formula_table(expr[1], table), formula_table(expr[2], table)
    return {"and": a & b, "or": a | b, "xor": a ^ b}[kind]


def build(store, expr):
    kind = expr[0]
    if kind == "const":
        return store.TRUE if expr[1] else store.FALSE
    if kind == "var":
        return store.var_node(expr[1])
    if kind == "not":
        return store.apply_not(build(store, expr[1]))
    a, b = build(store, expr[1]), build(store, expr[2])
    if kind == "and":
        return store.apply_and(a, b)
    if kind == "or":
        return store.apply_or(a, b)
    # xor from and/or/not
    return store.apply_or(store.apply_and(a, store.apply_not(b)), store.apply_and(store.apply_not(a), b))


def obdd_table(store, ref, table: np.ndarray) -> np.ndarray:
    """Follow every path at once: value(node) = hi-value where var is set, else lo-value."""
    memo: dict[int, np.ndarray] = {}

    def go(r) -> np.ndarray:
        if r.is_false:
            return np.zeros(len(table), bool)
        if r.is_true:
            return np.ones(len(table), bool)
        if r.id in memo:
            return memo[r.id]
        lo, hi = store.children(r)
        col = table[:, store.var_of(r) - 1]
        out = np.where(col, go(hi), go(lo))
        memo[r.id] = out
        return out

    return go(ref)


def reachable(store, ref) -> list:
    seen, stack, out = set(), [ref], []
    while stack:
        r = stack.pop()
        if r.id in seen:
            continue
        seen.add(r.id)
        out.append(r)
        if r.id > 1:
            stack.extend(store.children(r))
    return out


def check_ops(rng, nvars):
    """Build two random formulas under a random order and compare every operation with truth tables."""
    from obddlab.obdd import ObddStore, VarOrder

    order = list(rng.permutation(nvars) + 1)
    s = ObddStore(VarOrder(order), node_cap=1 << 30)
    table = assignments(nvars)
    e1, e2 = random_formula(rng, nvars, 5), random_formula(rng, nvars, 5)
    t1, t2 = formula_table(e1, table), formula_table(e2, table)
    f, g = build(s, e1), build(s, e2)
    assert (obdd_table(s, f, table) == t1).all()
    assert (obdd_table(s, s.apply_and(f, g), table) == (t1 & t2)).all()
    v = int(rng.integers(1, nvars + 1))
    b = int(rng.integers(2))
    col = v - 1
    flipped = table.copy()
    flipped[:, col] = bool(b)
    cof = formula_table(e1, flipped)
    assert (obdd_table(s, s.restrict(f, v, b), table) == cof).all()
    flipped0, flipped1 = table.copy(), table.copy()
    flipped0[:, col] = False
    flipped1[:, col] = True
    ex = formula_table(e1, flipped0) | formula_table(e1, flipped1)
    r = s.exists(f, v)
    assert (obdd_table(s, r, table) == ex).all()
    assert v not in s.support(r)
    assert s.implies(f, g) == bool((~t1 | t2).all())
    rows = rng.integers(len(table), size=8)
    for row in rows:
        a = {k + 1: int(table[row, k]) for k in range(nvars)}
        assert s.eval(f, a) == int(t1[row])
    assert s.sat_count(f) == int(t1.sum())


# ------------------------------------------------------------------ CNF
def cnf_table(clauses, nvars: int) -> np.ndarray:
    table = assignments(nvars)
    ok = np.ones(len(table), bool)
    for c in clauses:
        sat = np.zeros(len(table), bool)
        for lit in c:
            col = table[:, abs(lit) - 1]
            sat |= col if lit > 0 else ~col
        ok &= sat
    return ok


def brute_satisfiable(clauses, nvars: int) -> bool:
    return bool(cnf_table(clauses, nvars).any())


# -------------------------------------------------------------- density
def density_by_definition(p) -> Fraction:
    """Average over all (i1, i2, j1..j5) of |E_i1 ∩ E_i2 restricted to all V_jk| / C(3m, 2)."""
    m = p.m
    rows = 2 * m + 1
    total = 0
    for i1, i2 in itertools.product(range(1, m + 1), repeat=2):
        common = p.edge_set(i1) & p.edge_set(i2)
        for js in itertools.product(range(1, rows + 1), repeat=5):
            vs = set.intersection(*(set(p.vertex_set(j)) for j in js))
            total += sum(1 for (u, v) in common if u in vs and v in vs)
    return Fraction(total, m * m * rows**5 * math.comb(3 * m, 2))


# ------------------------------------------------------- layout experiment
def _k12_avoiding(edges, verts):
    """Ordered (u, v, w), v != w, with {u,v}, {u,w} edges inside ``verts``."""
    nbrs = {u: set() for u in verts}
    for a, b in edges:
        if a in verts and b in verts:
            nbrs[a].add(b)
            nbrs[b].add(a)
    return [(u, v, w) for u in sorted(verts) for v in sorted(nbrs[u]) for w in sorted(nbrs[u]) if v != w]


def experiment_masses(profile, n):
    """Run every branch of the sampling experiment with exact probabilities.

    Written from the step description only: slots from G, row pairs from N2,
    the row triple from N3 (both avoiding used rows), then vertex triples
    from K_{1,2} of the slot's edges inside the chosen rows, avoiding used
    vertices.  Returns {layout coordinates: probability} and the total
    probability of runs that get stuck.
    """
    p = profile.partition
    m = p.m
    g = list(profile.g_one_based)
    n2 = [sorted(profile.n2_sets[i]) for i in range(m)]
    n3 = [sorted(profile.n3_sets[i]) for i in range(m)]
    out: dict = {}
    stuck = [Fraction(0)]

    def verts_of(rows):
        s = set(range(1, 3 * m + 1))
        for j in rows:
            s &= set(p.vertex_set(j))
        return s

    def vertex_step(slots, pairs, triple, k, used_v, uvw, pr):
        if k == n + 1:
            out[(tuple(slots), tuple(pairs), triple, tuple(uvw))] = pr
            return
        rows = pairs[k] if k < n else triple
        cand = _k12_avoiding(p.edge_set(slots[k]), verts_of(rows) - used_v)
        if not cand:
            stuck[0] += pr
            return
        for t in cand:
            vertex_step(slots, pairs, triple, k + 1, used_v | set(t), uvw + [t], pr / len(cand))

    def triple_step(slots, pairs, used_r, pr):
        cand = [tuple(x + 1 for x in t) for t in n3[slots[n] - 1] if not (set(x + 1 for x in t) & used_r)]
        if not cand:
            stuck[0] += pr
            return
        for t in cand:
            vertex_step(slots, pairs, t, 0, set(), [], pr / len(cand))

    def pair_step(slots, pairs, used_r, pr):
        k = len(pairs)
        if k == n:
            triple_step(slots, pairs, used_r, pr)
            return
        cand = [tuple(x + 1 for x in t) for t in n2[slots[k] - 1] if not (set(x + 1 for x in t) & used_r)]
        if not cand:
            stuck[0] += pr
            return
        for t in cand:
            pair_step(slots, pairs + [t], used_r | set(t), pr / len(cand))

    def slot_step(slots, pr):
        if len(slots) == n + 1:
            pair_step(slots, [], set(), pr)
            return
        cand = [i for i in g if i not in slots]
        if not cand:
            stuck[0] += pr
            return
        for i in cand:
            slot_step(slots + [i], pr / len(cand))

    slot_step([], Fraction(1))
    return out, stuck[0]
