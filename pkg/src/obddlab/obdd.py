"""Reduced ordered binary decision diagrams over a fixed variable order.

Nodes live in an append-only arena owned by an :class:`ObddStore`.  Two
terminal nodes are reserved (FALSE has id 0, TRUE has id 1).  Internal
nodes are hash-consed on ``(level, lo, hi)`` so that every Boolean
function has exactly one identifier per store.
"""

from __future__ import annotations

import os
from array import array
from itertools import chain
import sys
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

DEFAULT_NODE_CAP = 1 << 24
_ID_LIMIT = 1 << 32  # node ids are packed into 32-bit halves of memo keys

sys.setrecursionlimit(max(sys.getrecursionlimit(), 20000))


class ObddError(Exception):
    """Base class for OBDD engine faults."""


class OrderViolation(ObddError):
    """A node would query a variable that does not precede its children."""


class UnknownVariable(ObddError):
    pass


class ForeignNodeError(ObddError):
    """A node reference from a different store was passed in."""


class NodeBudgetExceeded(ObddError):
    def __init__(self, cap: int):
        super().__init__(f"node cap of {cap} nodes exceeded")
        self.cap = cap


def node_cap_from_env(default: int = DEFAULT_NODE_CAP) -> int:
    raw = os.environ.get("OBDD_NODE_CAP")
    if raw is None or raw.strip() == "":
        return default
    return int(raw)


class VarOrder:
    """Bijection between variable identifiers and positions."""

    __slots__ = ("perm", "_pos")

    def __init__(self, perm: Iterable[int]):
        self.perm: tuple[int, ...] = tuple(perm)
        self._pos = {v: i for i, v in enumerate(self.perm)}
        if len(self._pos) != len(self.perm):
            raise ValueError("variable order lists a variable twice")

    def __len__(self) -> int:
        return len(self.perm)

    def __contains__(self, var: int) -> bool:
        return var in self._pos

    def __eq__(self, other: object) -> bool:
        return isinstance(other, VarOrder) and other.perm == self.perm

    def __hash__(self) -> int:
        return hash(self.perm)

    def __repr__(self) -> str:
        return f"VarOrder({list(self.perm)!r})"

    def position(self, var: int) -> int:
        try:
            return self._pos[var]
        except KeyError:
            raise UnknownVariable(f"variable {var} is not in the order") from None

    def var_at(self, level: int) -> int:
        return self.perm[level]


class NodeRef:
    """Handle to a node inside one particular store."""

    __slots__ = ("owner", "id")

    def __init__(self, owner: "ObddStore", node_id: int):
        self.owner = owner
        self.id = node_id

    def __eq__(self, other: object) -> bool:
        return isinstance(other, NodeRef) and other.owner is self.owner and other.id == self.id

    def __hash__(self) -> int:
        return hash((id(self.owner), self.id))

    def __repr__(self) -> str:
        if self.id == 0:
            return "NodeRef(FALSE)"
        if self.id == 1:
            return "NodeRef(TRUE)"
        return f"NodeRef({self.id})"

    @property
    def is_false(self) -> bool:
        return self.id == 0

    @property
    def is_true(self) -> bool:
        return self.id == 1


class SerializedObdd:
    """Store-independent OBDD: children listed before parents, root last.

    Each entry is ``(var, lo, hi)`` where a child code of 0 is FALSE, 1 is
    TRUE and ``k + 2`` points to entry ``k`` of the list.  An empty node
    list denotes the constant given by ``const``.  Entries are packed as
    native 32-bit integers, twelve bytes per node, so whole refutations can
    be held detached from any store.
    """

    __slots__ = ("data", "const")

    def __init__(self, nodes: Iterable[tuple[int, int, int]] = (), const: int = 0, *, data: bytes | None = None):
        if data is None:
            data = array("i", chain.from_iterable(nodes)).tobytes()
        elif len(data) % 12:
            raise ObddError("packed node data must hold whole (var, lo, hi) triples")
        object.__setattr__(self, "data", bytes(data))
        object.__setattr__(self, "const", const)

    def __setattr__(self, name, value):
        raise AttributeError("SerializedObdd is immutable")

    @property
    def nodes(self) -> tuple[tuple[int, int, int], ...]:
        flat = array("i")
        flat.frombytes(self.data)
        it = iter(flat)
        return tuple(zip(it, it, it))

    def __len__(self) -> int:
        return len(self.data) // 12

    def __eq__(self, other) -> bool:
        if not isinstance(other, SerializedObdd):
            return NotImplemented
        return self.const == other.const and self.data == other.data

    def __hash__(self) -> int:
        return hash((self.data, self.const))

    def __repr__(self) -> str:
        if not self.data:
            return f"SerializedObdd(const={self.const})"
        return f"SerializedObdd({len(self)} nodes)"

    def renamed(self, rename: Mapping[int, int]) -> "SerializedObdd":
        """Same structure with node variables mapped through ``rename`` (missing keys kept)."""
        flat = array("i")
        flat.frombytes(self.data)
        for k in range(0, len(flat), 3):
            flat[k] = rename.get(flat[k], flat[k])
        return SerializedObdd(const=self.const, data=flat.tobytes())

    @property
    def is_false(self) -> bool:
        return not self.data and self.const == 0

    @property
    def is_true(self) -> bool:
        return not self.data and self.const == 1


FALSE_ID = 0
TRUE_ID = 1


class ObddStore:
    """Arena of hash-consed OBDD nodes sharing one variable order."""

    def __init__(self, order: VarOrder | Sequence[int], node_cap: int | None = None):
        self.order = order if isinstance(order, VarOrder) else VarOrder(order)
        self.node_cap = node_cap_from_env() if node_cap is None else node_cap
        nlev = len(self.order)
        self._term_level = nlev
        self._lvl: list[int] = [nlev, nlev]
        self._lo: list[int] = [0, 1]
        self._hi: list[int] = [0, 1]
        # one table per level, keyed by the packed child pair
        self._unique: list[dict[int, int]] = [{} for _ in range(nlev)]
        self._and_memo: dict[int, int] = {}
        self._or_memo: dict[int, int] = {}
        self._not_memo: dict[int, int] = {}
        self._ex_memo: dict[tuple[int, int], int] = {}
        self._res_memo: dict[tuple[int, int, int], int] = {}
        self._imp_memo: dict[int, bool] = {}

    # built on demand: holding them as attributes would make every store a
    # reference cycle that only the cyclic collector frees
    @property
    def FALSE(self) -> NodeRef:
        return NodeRef(self, FALSE_ID)

    @property
    def TRUE(self) -> NodeRef:
        return NodeRef(self, TRUE_ID)

    # ------------------------------------------------------------------ basics
    def __len__(self) -> int:
        return len(self._lvl)

    @property
    def node_count(self) -> int:
        """Total nodes ever allocated, terminals included."""
        return len(self._lvl)

    def clear_memo(self) -> None:
        self._and_memo.clear()
        self._or_memo.clear()
        self._not_memo.clear()
        self._ex_memo.clear()
        self._res_memo.clear()
        self._imp_memo.clear()

    def ref(self, node_id: int) -> NodeRef:
        if not 0 <= node_id < len(self._lvl):
            raise ObddError(f"no node with id {node_id}")
        return NodeRef(self, node_id)

    def _own(self, r: NodeRef) -> int:
        if not isinstance(r, NodeRef):
            raise TypeError(f"expected NodeRef, got {type(r).__name__}")
        if r.owner is not self:
            raise ForeignNodeError("node reference belongs to another store")
        return r.id

    def level_of(self, r: NodeRef) -> int:
        return self._lvl[self._own(r)]

    def var_of(self, r: NodeRef) -> int | None:
        lvl = self._lvl[self._own(r)]
        return None if lvl == self._term_level else self.order.var_at(lvl)

    def children(self, r: NodeRef) -> tuple[NodeRef, NodeRef]:
        i = self._own(r)
        if i < 2:
            raise ObddError("terminals have no children")
        return NodeRef(self, self._lo[i]), NodeRef(self, self._hi[i])

    # -------------------------------------------------------------- node build
    def _mk(self, lvl: int, lo: int, hi: int) -> int:
        if lo == hi:
            return lo
        table = self._unique[lvl]
        key = (lo << 32) | hi
        r = table.get(key)
        if r is not None:
            return r
        r = len(self._lvl)
        if r >= self.node_cap or r >= _ID_LIMIT:
            raise NodeBudgetExceeded(min(self.node_cap, _ID_LIMIT))
        self._lvl.append(lvl)
        self._lo.append(lo)
        self._hi.append(hi)
        table[key] = r
        return r

    def mk_node(self, var: int, lo: NodeRef, hi: NodeRef) -> NodeRef:
        lvl = self.order.position(var)
        a, b = self._own(lo), self._own(hi)
        if lvl >= self._lvl[a] or lvl >= self._lvl[b]:
            raise OrderViolation(
                f"variable {var} (position {lvl}) does not precede its children"
            )
        return NodeRef(self, self._mk(lvl, a, b))

    def var_node(self, var: int, positive: bool = True) -> NodeRef:
        lvl = self.order.position(var)
        return NodeRef(self, self._mk(lvl, 0, 1) if positive else self._mk(lvl, 1, 0))

    def build_clause(self, literals: Iterable[int]) -> NodeRef:
        """OBDD of a disjunction of signed-integer literals.

        Built bottom-up along the order, so the result has one internal node
        per distinct variable. Tautological clauses collapse to TRUE.
        """
        by_level: dict[int, int] = {}
        for lit in literals:
            if lit == 0:
                raise ValueError("literal 0 is not a variable")
            lvl = self.order.position(abs(lit))
            sign = 1 if lit > 0 else -1
            prev = by_level.get(lvl)
            if prev is not None and prev != sign:
                return self.TRUE
            by_level[lvl] = sign
        node = FALSE_ID
        for lvl in sorted(by_level, reverse=True):
            if by_level[lvl] > 0:
                node = self._mk(lvl, node, TRUE_ID)
            else:
                node = self._mk(lvl, TRUE_ID, node)
        return NodeRef(self, node)

    def build_cube(self, literals: Iterable[int]) -> NodeRef:
        """OBDD of a conjunction of signed-integer literals."""
        by_level: dict[int, int] = {}
        for lit in literals:
            lvl = self.order.position(abs(lit))
            sign = 1 if lit > 0 else -1
            if by_level.get(lvl, sign) != sign:
                return self.FALSE
            by_level[lvl] = sign
        node = TRUE_ID
        for lvl in sorted(by_level, reverse=True):
            node = self._mk(lvl, 0, node) if by_level[lvl] > 0 else self._mk(lvl, node, 0)
        return NodeRef(self, node)

    # -------------------------------------------------------------- operations
    def _and(self, a: int, b: int) -> int:
        if a == b:
            return a
        if a < 2 or b < 2:
            if a == 0 or b == 0:
                return 0
            return b if a == 1 else a
        if a > b:
            a, b = b, a
        key = (a << 32) | b
        memo = self._and_memo
        r = memo.get(key)
        if r is not None:
            return r
        lvl, lo, hi = self._lvl, self._lo, self._hi
        la, lb = lvl[a], lvl[b]
        if la == lb:
            r = self._mk(la, self._and(lo[a], lo[b]), self._and(hi[a], hi[b]))
        elif la < lb:
            r = self._mk(la, self._and(lo[a], b), self._and(hi[a], b))
        else:
            r = self._mk(lb, self._and(a, lo[b]), self._and(a, hi[b]))
        memo[key] = r
        return r

    def _or(self, a: int, b: int) -> int:
        if a == b:
            return a
        if a < 2 or b < 2:
            if a == 1 or b == 1:
                return 1
            return b if a == 0 else a
        if a > b:
            a, b = b, a
        key = (a << 32) | b
        memo = self._or_memo
        r = memo.get(key)
        if r is not None:
            return r
        lvl, lo, hi = self._lvl, self._lo, self._hi
        la, lb = lvl[a], lvl[b]
        if la == lb:
            r = self._mk(la, self._or(lo[a], lo[b]), self._or(hi[a], hi[b]))
        elif la < lb:
            r = self._mk(la, self._or(lo[a], b), self._or(hi[a], b))
        else:
            r = self._mk(lb, self._or(a, lo[b]), self._or(a, hi[b]))
        memo[key] = r
        return r

    def _not(self, a: int) -> int:
        if a < 2:
            return 1 - a
        r = self._not_memo.get(a)
        if r is not None:
            return r
        r = self._mk(self._lvl[a], self._not(self._lo[a]), self._not(self._hi[a]))
        self._not_memo[a] = r
        return r

    def _exists(self, f: int, target: int) -> int:
        lvl = self._lvl[f]
        if lvl > target:
            return f
        key = (target, f)
        r = self._ex_memo.get(key)
        if r is not None:
            return r
        if lvl == target:
            r = self._or(self._lo[f], self._hi[f])
        else:
            r = self._mk(lvl, self._exists(self._lo[f], target), self._exists(self._hi[f], target))
        self._ex_memo[key] = r
        return r

    def _restrict(self, f: int, target: int, val: int) -> int:
        lvl = self._lvl[f]
        if lvl > target:
            return f
        if lvl == target:
            return self._hi[f] if val else self._lo[f]
        key = (target, val, f)
        r = self._res_memo.get(key)
        if r is not None:
            return r
        r = self._mk(
            lvl,
            self._restrict(self._lo[f], target, val),
            self._restrict(self._hi[f], target, val),
        )
        self._res_memo[key] = r
        return r

    def _implies(self, a: int, b: int) -> bool:
        # a -> b fails exactly when some path makes a TRUE and b FALSE
        if a == 0 or b == 1 or a == b:
            return True
        if a == 1 or b == 0:
            return False
        key = (a << 32) | b
        r = self._imp_memo.get(key)
        if r is not None:
            return r
        lvl, lo, hi = self._lvl, self._lo, self._hi
        la, lb = lvl[a], lvl[b]
        if la == lb:
            r = self._implies(lo[a], lo[b]) and self._implies(hi[a], hi[b])
        elif la < lb:
            r = self._implies(lo[a], b) and self._implies(hi[a], b)
        else:
            r = self._implies(a, lo[b]) and self._implies(a, hi[b])
        self._imp_memo[key] = r
        return r

    def apply_and(self, a: NodeRef, b: NodeRef) -> NodeRef:
        return NodeRef(self, self._and(self._own(a), self._own(b)))

    def apply_or(self, a: NodeRef, b: NodeRef) -> NodeRef:
        return NodeRef(self, self._or(self._own(a), self._own(b)))

    def apply_not(self, a: NodeRef) -> NodeRef:
        return NodeRef(self, self._not(self._own(a)))

    def exists(self, f: NodeRef, var: int) -> NodeRef:
        return NodeRef(self, self._exists(self._own(f), self.order.position(var)))

    def restrict(self, f: NodeRef, var: int, val: int | bool) -> NodeRef:
        return NodeRef(self, self._restrict(self._own(f), self.order.position(var), 1 if val else 0))

    def implies(self, a: NodeRef, b: NodeRef) -> bool:
        return self._implies(self._own(a), self._own(b))

    def conjoin_all(self, refs: Sequence[NodeRef]) -> NodeRef:
        out = TRUE_ID
        for r in refs:
            out = self._and(out, self._own(r))
        return NodeRef(self, out)

    # ---------------------------------------------------------------- queries
    def eval(self, f: NodeRef, assignment: Mapping[int, int | bool]) -> int:
        """Follow the path selected by ``assignment`` (variable -> bit)."""
        i = self._own(f)
        perm = self.order.perm
        while i >= 2:
            v = perm[self._lvl[i]]
            try:
                bit = assignment[v]
            except KeyError:
                raise UnknownVariable(f"assignment has no value for variable {v}") from None
            i = self._hi[i] if bit else self._lo[i]
        return i

    def _reachable(self, root: int) -> list[int]:
        seen = {root}
        stack = [root]
        out = []
        lo, hi = self._lo, self._hi
        while stack:
            n = stack.pop()
            out.append(n)
            if n >= 2:
                for c in (lo[n], hi[n]):
                    if c not in seen:
                        seen.add(c)
                        stack.append(c)
        return out

    def size(self, f: NodeRef) -> int:
        """Number of nodes reachable from ``f``, reachable terminals included."""
        return len(self._reachable(self._own(f)))

    obdd_size = size

    def support(self, f: NodeRef) -> set[int]:
        perm = self.order.perm
        return {perm[self._lvl[n]] for n in self._reachable(self._own(f)) if n >= 2}

    def sat_count(self, f: NodeRef) -> int:
        """Number of satisfying assignments over the whole order."""
        nlev = self._term_level
        memo: dict[int, int] = {}

        def count(n: int) -> int:
            # assignments to levels [lvl(n), nlev)
            if n < 2:
                return n
            r = memo.get(n)
            if r is None:
                l = self._lvl[n]
                lo, hi = self._lo[n], self._hi[n]
                r = count(lo) << (self._lvl[lo] - l - 1)
                r += count(hi) << (self._lvl[hi] - l - 1)
                memo[n] = r
            return r

        i = self._own(f)
        return count(i) << self._lvl[i] if i >= 2 else (1 << nlev) * i

    # ------------------------------------------------------------ (de)serialize
    def export(self, f: NodeRef) -> SerializedObdd:
        root = self._own(f)
        if root < 2:
            return SerializedObdd((), root)
        index: dict[int, int] = {}
        nodes = array("i")
        perm = self.order.perm
        lvl, lo, hi = self._lvl, self._lo, self._hi
        stack = [(root, False)]
        while stack:
            n, expanded = stack.pop()
            if n < 2 or n in index:
                continue
            if not expanded:
                stack.append((n, True))
                stack.append((hi[n], False))
                stack.append((lo[n], False))
                continue
            a, b = lo[n], hi[n]
            ca = a if a < 2 else index[a] + 2
            cb = b if b < 2 else index[b] + 2
            index[n] = len(index)
            nodes.extend((perm[lvl[n]], ca, cb))
        return SerializedObdd(const=0, data=nodes.tobytes())

    def load(self, ser: SerializedObdd) -> NodeRef:
        """Rebuild a serialized OBDD canonically in this store."""
        if not len(ser):
            if ser.const not in (0, 1):
                raise ObddError("constant must be 0 or 1")
            return NodeRef(self, ser.const)
        built: list[int] = []
        for k, (var, a, b) in enumerate(ser.nodes):
            lvl = self.order.position(var)
            kids = []
            for c in (a, b):
                if c < 2:
                    kids.append(c)
                elif c - 2 < k:
                    kids.append(built[c - 2])
                else:
                    raise ObddError(f"node {k} refers forward to entry {c - 2}")
            if lvl >= self._lvl[kids[0]] or lvl >= self._lvl[kids[1]]:
                raise OrderViolation(f"node {k} on variable {var} breaks the order")
            built.append(self._mk(lvl, kids[0], kids[1]))
        return NodeRef(self, built[-1])

    def transplant(self, f: NodeRef, target: "ObddStore", rename: Mapping[int, int] | None = None) -> NodeRef:
        """Copy ``f`` into ``target``, optionally renaming variables."""
        ser = self.export(f)
        if rename:
            ser = ser.renamed(rename)
        return target.load(ser)


def serialized_size(ser: SerializedObdd) -> int:
    """Node count of a serialized OBDD as listed, terminals included once."""
    if not len(ser):
        return 1
    terms = {c for _, a, b in ser.nodes for c in (a, b) if c < 2}
    return len(ser.nodes) + len(terms)
