"""Single-line mutations of derivations, for exercising the checker.

Every mutant differs from its source in exactly one line.  Mutants that
still describe a correct inference are dropped before they are returned,
using a function comparison in a scratch store, so each returned mutant
is one the checker must reject.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cnf import Cnf
from .obdd import ObddStore, SerializedObdd
from .proof import Axiom, Conjunction, Derivation, Line, Projection, Rule, antecedents

KINDS = ("clause", "antecedent", "projected-var", "swap-children", "redirect-child", "relabel-node", "final-constant")


@dataclass
class Mutant:
    kind: str
    line: int
    deriv: Derivation


def _replace(deriv: Derivation, k: int, rule: Rule, obdd) -> Derivation:
    lines = list(deriv.lines)
    lines[k] = Line(rule, obdd)
    return Derivation(deriv.order, lines)


class _Scratch:
    """Lazily built store for equivalence filtering."""

    def __init__(self, deriv: Derivation):
        self.deriv = deriv
        self.store: ObddStore | None = None

    def fresh(self) -> None:
        """Start a new store once the old one grows large; call between mutations only."""
        if self.store is None or self.store.node_count > 2_000_000:
            self.store = ObddStore(self.deriv.order, node_cap=1 << 62)

    def load(self, k_or_ser) -> int:
        assert self.store is not None
        ser = self.deriv.serialized(k_or_ser) if isinstance(k_or_ser, int) else k_or_ser
        return self.store.load(ser).id


def _try_mutation(cnf: Cnf, deriv: Derivation, kind: str, rng: np.random.Generator, scratch: _Scratch) -> Mutant | None:
    """One random mutation of ``kind``; None when no non-equivalent candidate was drawn."""
    n = len(deriv.lines)
    scratch.fresh()
    if kind == "final-constant":
        last = deriv.serialized(n - 1)
        if last.nodes:
            return None
        return Mutant(kind, n - 1, _replace(deriv, n - 1, deriv.lines[-1].rule, SerializedObdd((), 1 - last.const)))
    k = int(rng.integers(n))
    line = deriv.lines[k]
    rule = line.rule
    if kind == "clause":
        if not isinstance(rule, Axiom) or len(cnf.clauses) < 2:
            return None
        c = int(rng.integers(len(cnf.clauses) - 1))
        c += c >= rule.clause
        if set(cnf.clauses[c]) == set(cnf.clauses[rule.clause]):
            return None
        return Mutant(kind, k, _replace(deriv, k, Axiom(c), line.obdd))
    if kind == "antecedent":
        if not isinstance(rule, (Conjunction, Projection)) or k < 2:
            return None
        ants = antecedents(rule)
        slot = int(rng.integers(len(ants)))
        new = int(rng.integers(k - 1))
        new += new >= ants[slot]
        if isinstance(rule, Projection):
            new_rule: Rule = Projection(new, rule.var)
            got = scratch.load(k)
            want = scratch.store._exists(scratch.load(new), scratch.store.order.position(rule.var))
        else:
            left, right = (new, rule.right) if slot == 0 else (rule.left, new)
            new_rule = Conjunction(left, right)
            got = scratch.load(k)
            want = scratch.store._and(scratch.load(left), scratch.load(right))
        if got == want and len(set(antecedents(new_rule))) == len(antecedents(new_rule)):
            # still a correct step; only tree-likeness could catch it, which
            # is not the point of this mutation
            return None
        return Mutant(kind, k, _replace(deriv, k, new_rule, line.obdd))
    if kind == "projected-var":
        if not isinstance(rule, Projection):
            return None
        perm = deriv.order.perm
        var = perm[int(rng.integers(len(perm)))]
        if var == rule.var:
            return None
        got = scratch.load(k)
        want = scratch.store._exists(scratch.load(rule.ante), scratch.store.order.position(var))
        if got == want:
            return None
        return Mutant(kind, k, _replace(deriv, k, Projection(rule.ante, var), line.obdd))
    ser = deriv.serialized(k)
    if not ser.nodes:
        return None
    nodes = list(ser.nodes)
    p = int(rng.integers(len(nodes)))
    var, lo, hi = nodes[p]
    if kind == "swap-children":
        nodes[p] = (var, hi, lo)
    elif kind == "redirect-child":
        choices = [c for c in range(0, p + 2) if c not in (lo, hi)]
        if not choices:
            return None
        c = choices[int(rng.integers(len(choices)))]
        nodes[p] = (var, c, hi) if rng.integers(2) else (var, lo, c)
    elif kind == "relabel-node":
        perm = deriv.order.perm
        new_var = perm[int(rng.integers(len(perm)))]
        if new_var == var:
            return None
        nodes[p] = (new_var, lo, hi)
    else:
        raise ValueError(f"unknown mutation kind {kind!r}")
    mutated = SerializedObdd(tuple(nodes), 0)
    try:
        same = scratch.load(mutated) == scratch.load(k)
    except Exception:
        same = False  # malformed, which the checker must report
    if same:
        return None
    return Mutant(kind, k, _replace(deriv, k, rule, mutated))


def mutants(cnf: Cnf, deriv: Derivation, count: int, rng: np.random.Generator, max_tries: int = 100_000) -> list[Mutant]:
    """``count`` non-equivalent single-line mutants, cycling through the mutation kinds."""
    scratch = _Scratch(deriv)
    out: list[Mutant] = []
    tries = 0
    kinds = [k for k in KINDS if k != "final-constant"]
    if not deriv.serialized(len(deriv.lines) - 1).nodes:
        out.append(_try_mutation(cnf, deriv, "final-constant", rng, scratch))  # type: ignore[arg-type]
    while len(out) < count and tries < max_tries:
        kind = kinds[tries % len(kinds)]
        tries += 1
        mu = _try_mutation(cnf, deriv, kind, rng, scratch)
        if mu is not None:
            out.append(mu)
    if len(out) < count:
        raise RuntimeError(f"only {len(out)} non-equivalent mutants found in {max_tries} tries")
    return out[:count]
