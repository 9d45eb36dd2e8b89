"""Tree-like OBDD derivations: recording, text logs, and independent checking.

A derivation is a list of lines.  Each line names its inference rule and
carries the OBDD it asserts, either as a live :class:`NodeRef` in the
producing store or as a :class:`SerializedObdd`.  The checker rebuilds
every asserted OBDD in a private store, so it never relies on the
producer's memo tables.

Text log grammar (one record per line, no blank lines in between)::

    log     := "order" NAME* NEWLINE record*
    record  := rule " | obdd " diagram NEWLINE
    rule    := "a" INT | "c" INT INT | "p" INT NAME | "s" INT
    diagram := "F" | "T" | node (" " node)*
    node    := NAME ":" child ":" child        (lo child first)
    child   := "F" | "T" | INT                 (INT indexes earlier nodes)

Nodes are listed children first; the last node is the root.  Line
numbers are 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, Union

from .cnf import Cnf, VarId, encode_selector, perm_bits, perm_var, vertex_var
from .field import PermFamily
from .obdd import (
    NodeRef,
    ObddError,
    ObddStore,
    SerializedObdd,
    VarOrder,
)


@dataclass(frozen=True)
class Axiom:
    clause: int


@dataclass(frozen=True)
class Conjunction:
    left: int
    right: int


@dataclass(frozen=True)
class Projection:
    ante: int
    var: int


@dataclass(frozen=True)
class Subsumption:
    ante: int


Rule = Union[Axiom, Conjunction, Projection, Subsumption]


def antecedents(rule: Rule) -> tuple[int, ...]:
    if isinstance(rule, Axiom):
        return ()
    if isinstance(rule, Conjunction):
        return (rule.left, rule.right)
    return (rule.ante,)


@dataclass
class Line:
    rule: Rule
    obdd: NodeRef | SerializedObdd


@dataclass
class Derivation:
    order: VarOrder
    lines: list[Line] = field(default_factory=list)

    def add(self, rule: Rule, obdd: NodeRef | SerializedObdd) -> int:
        self.lines.append(Line(rule, obdd))
        return len(self.lines) - 1

    def __len__(self) -> int:
        return len(self.lines)

    def serialized(self, k: int) -> SerializedObdd:
        o = self.lines[k].obdd
        if isinstance(o, SerializedObdd):
            return o
        return o.owner.export(o)

    def frozen(self) -> "Derivation":
        """Copy with every line serialized, detached from producing stores."""
        return Derivation(self.order, [Line(l.rule, self.serialized(k)) for k, l in enumerate(self.lines)])

    def depth(self) -> int:
        """Longest antecedent chain ending at the last line (edges counted)."""
        if not self.lines:
            return 0
        memo: dict[int, int] = {}
        for k, line in enumerate(self.lines):
            ants = antecedents(line.rule)
            memo[k] = 1 + max((memo[a] for a in ants), default=-1)
        return memo[len(self.lines) - 1]


@dataclass(frozen=True)
class Failure:
    line: int
    kind: str  # "structural" or "semantic"
    reason: str


@dataclass(frozen=True)
class Verdict:
    ok: bool
    failure: Failure | None = None

    @staticmethod
    def accept() -> "Verdict":
        return Verdict(True, None)

    @staticmethod
    def reject(line: int, kind: str, reason: str) -> "Verdict":
        return Verdict(False, Failure(line, kind, reason))


def _line_size(store: ObddStore, r: NodeRef) -> int:
    return store.size(r)


def proof_size(deriv: Derivation) -> int:
    """Sum over lines of the canonical node count of each asserted OBDD."""
    total = 0
    scratch: ObddStore | None = None
    for line in deriv.lines:
        o = line.obdd
        if isinstance(o, NodeRef):
            total += o.owner.size(o)
        else:
            if scratch is None or scratch.node_count > 1_000_000:
                scratch = ObddStore(deriv.order, node_cap=1 << 62)
            total += scratch.size(scratch.load(o))
    return total


class CheckCache:
    """Inference steps already verified for one CNF and order.

    A step is keyed by its rule, its parameters and fingerprints of the
    functions involved.  Live lines are fingerprinted by their canonical node
    in the producing store and serialized lines by their content, so a key
    can only repeat when the same functions meet under the same rule.
    Checking many variants of one derivation then re-verifies only the
    steps that changed.
    """

    def __init__(self) -> None:
        self._ok: set[tuple] = set()
        self._owner: tuple[int, ...] | None = None

    def bind(self, cnf: Cnf, order: VarOrder) -> None:
        ident = (id(cnf), hash(order.perm))
        if self._owner is None:
            self._owner = ident
        elif self._owner != ident:
            raise ValueError("a check cache serves a single CNF and order")

    def __contains__(self, key: tuple) -> bool:
        return key in self._ok

    def add(self, key: tuple) -> None:
        self._ok.add(key)

    def __len__(self) -> int:
        return len(self._ok)


def _fingerprint(o: NodeRef | SerializedObdd) -> tuple:
    if isinstance(o, NodeRef):
        return ("ref", id(o.owner), o.id)
    return ("ser", o)


def _structural_pass(cnf: Cnf, deriv: Derivation) -> Verdict | None:
    uses = [0] * len(deriv.lines)
    for k, line in enumerate(deriv.lines):
        rule = line.rule
        if not isinstance(rule, (Axiom, Conjunction, Projection, Subsumption)):
            return Verdict.reject(k, "structural", f"unknown rule {rule!r}")
        for a in antecedents(rule):
            if not isinstance(a, int) or a < 0 or a >= k:
                return Verdict.reject(k, "structural", f"antecedent {a} does not precede line {k}")
            uses[a] += 1
            if uses[a] > 1:
                return Verdict.reject(k, "structural", f"line {a} used twice as an antecedent")
        if isinstance(rule, Axiom) and not (isinstance(rule.clause, int) and 0 <= rule.clause < len(cnf.clauses)):
            return Verdict.reject(k, "structural", f"no clause with index {rule.clause}")
        if isinstance(rule, Projection) and rule.var not in deriv.order:
            return Verdict.reject(k, "structural", f"projected variable {rule.var} not in the order")
    return None


def check_derivation(
    cnf: Cnf, deriv: Derivation, refutation: bool = True, cache: CheckCache | None = None
) -> Verdict:
    """Verify every line against its rule; the first failure is reported.

    Structural faults (indices, tree-likeness, unknown clauses or variables)
    are found in a first pass.  Each line is then rebuilt, together with its
    antecedents, in a private store of its own, so memory stays bounded by
    the largest single step and nothing is taken from the producer's tables.
    """
    order_vars = set(deriv.order.perm)
    if order_vars != set(range(1, cnf.num_vars + 1)) or len(deriv.order) != cnf.num_vars:
        return Verdict.reject(-1, "structural", "order does not list exactly the CNF variables")
    bad = _structural_pass(cnf, deriv)
    if bad is not None:
        return bad
    if cache is not None:
        cache.bind(cnf, deriv.order)
    order = deriv.order
    pending: dict[int, SerializedObdd] = {}

    def serialized(k: int) -> SerializedObdd:
        ser = pending.get(k)
        if ser is None:
            ser = deriv.serialized(k)
        return ser

    for k, line in enumerate(deriv.lines):
        rule = line.rule
        ants = antecedents(rule)
        key = None
        if cache is not None:
            params: tuple
            if isinstance(rule, Axiom):
                params = ("a", cnf.clauses[rule.clause])
            elif isinstance(rule, Projection):
                params = ("p", rule.var)
            elif isinstance(rule, Conjunction):
                params = ("c",)
            else:
                params = ("s",)
            key = params + (_fingerprint(line.obdd),) + tuple(_fingerprint(deriv.lines[a].obdd) for a in ants)
        if key is not None and key in cache:
            verdict = None
            ser = None
            for a in ants:
                pending.pop(a, None)
        else:
            store = ObddStore(order, node_cap=1 << 62)
            try:
                ser = serialized(k)
                got = store.load(ser).id
            except ObddError as exc:
                return Verdict.reject(k, "structural", f"malformed OBDD: {exc}")
            refs = []
            for a in ants:
                refs.append(store.load(serialized(a)).id)
                pending.pop(a, None)
            verdict = _check_step(store, cnf, rule, got, refs, k)
            if verdict is not None:
                return verdict
            if key is not None:
                cache.add(key)
        if ser is not None and k < len(deriv.lines) - 1:
            pending[k] = ser
    if refutation:
        if not deriv.lines:
            return Verdict.reject(0, "semantic", "empty derivation is not a refutation")
        last = ObddStore(order, node_cap=1 << 62).load(serialized(len(deriv.lines) - 1))
        if not last.is_false:
            return Verdict.reject(len(deriv.lines) - 1, "semantic", "final line is not FALSE")
    return Verdict.accept()


def _check_step(store: ObddStore, cnf: Cnf, rule: Rule, got: int, refs: list[int], k: int) -> Verdict | None:
    if isinstance(rule, Axiom):
        if got != store.build_clause(cnf.clauses[rule.clause]).id:
            return Verdict.reject(k, "semantic", f"OBDD differs from clause {rule.clause}")
    elif isinstance(rule, Conjunction):
        if got != store._and(refs[0], refs[1]):
            return Verdict.reject(k, "semantic", "OBDD is not the conjunction of its antecedents")
    elif isinstance(rule, Projection):
        if got != store._exists(refs[0], store.order.position(rule.var)):
            return Verdict.reject(k, "semantic", f"OBDD is not the projection on variable {rule.var}")
    elif not store._implies(refs[0], got):
        return Verdict.reject(k, "semantic", "antecedent does not imply the asserted OBDD")
    return None


# ------------------------------------------------------------------ text log
class ProofParseError(ValueError):
    def __init__(self, line: int, msg: str):
        super().__init__(f"proof log line {line}: {msg}")
        self.line = line


def _encode_obdd(ser: SerializedObdd, names: Mapping[int, str]) -> str:
    if not len(ser):
        return "T" if ser.const else "F"

    def child(c: int) -> str:
        return "F" if c == 0 else "T" if c == 1 else str(c - 2)

    return " ".join(f"{names[v]}:{child(a)}:{child(b)}" for v, a, b in ser.nodes)


def write_proof(deriv: Derivation, cnf: Cnf) -> str:
    names = {v: cnf.name(v) for v in deriv.order.perm}
    out = ["order " + " ".join(names[v] for v in deriv.order.perm)]
    for k, line in enumerate(deriv.lines):
        r = line.rule
        if isinstance(r, Axiom):
            head = f"a {r.clause}"
        elif isinstance(r, Conjunction):
            head = f"c {r.left} {r.right}"
        elif isinstance(r, Projection):
            head = f"p {r.ante} {names[r.var]}"
        else:
            head = f"s {r.ante}"
        out.append(f"{head} | obdd {_encode_obdd(deriv.serialized(k), names)}")
    return "\n".join(out) + "\n"


def _int(tok: str, ln: int) -> int:
    if not tok.isdigit():
        raise ProofParseError(ln, f"expected a non-negative integer, got {tok!r}")
    return int(tok)


def parse_proof(text: str, cnf: Cnf) -> Derivation:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ProofParseError(1, "empty proof log")
    head = lines[0].split(" ")
    if head[0] != "order":
        raise ProofParseError(1, "first line must start with 'order'")
    by_name: dict[str, int] = {}
    for tok in head[1:]:
        try:
            by_name[tok] = cnf.var(VarId.parse(tok))
        except (KeyError, ValueError):
            raise ProofParseError(1, f"unknown variable {tok!r}") from None
    try:
        order = VarOrder(by_name[t] for t in head[1:])
    except ValueError as exc:
        raise ProofParseError(1, str(exc)) from None
    deriv = Derivation(order)
    for ln, raw in enumerate(lines[1:], 2):
        left, sep, right = raw.partition(" | obdd ")
        if not sep:
            raise ProofParseError(ln, "missing ' | obdd ' separator")
        toks = left.split(" ")
        kind = toks[0]
        try:
            if kind == "a" and len(toks) == 2:
                rule: Rule = Axiom(_int(toks[1], ln))
            elif kind == "c" and len(toks) == 3:
                rule = Conjunction(_int(toks[1], ln), _int(toks[2], ln))
            elif kind == "p" and len(toks) == 3:
                if toks[2] not in by_name:
                    raise ProofParseError(ln, f"unknown variable {toks[2]!r}")
                rule = Projection(_int(toks[1], ln), by_name[toks[2]])
            elif kind == "s" and len(toks) == 2:
                rule = Subsumption(_int(toks[1], ln))
            else:
                raise ProofParseError(ln, f"malformed rule {left!r}")
        except ProofParseError:
            raise
        deriv.add(rule, _decode_obdd(right, by_name, ln))
    return deriv


def _decode_obdd(text: str, by_name: Mapping[str, int], ln: int) -> SerializedObdd:
    toks = text.split(" ")
    if toks == ["F"]:
        return SerializedObdd((), 0)
    if toks == ["T"]:
        return SerializedObdd((), 1)
    nodes = []
    for k, tok in enumerate(toks):
        parts = tok.split(":")
        if len(parts) != 3 or parts[0] not in by_name:
            raise ProofParseError(ln, f"malformed node {tok!r}")
        kids = []
        for c in parts[1:]:
            if c == "F":
                kids.append(0)
            elif c == "T":
                kids.append(1)
            else:
                idx = _int(c, ln)
                if idx >= k:
                    raise ProofParseError(ln, f"node {k} refers to later node {idx}")
                kids.append(idx + 2)
        nodes.append((by_name[parts[0]], kids[0], kids[1]))
    return SerializedObdd(tuple(nodes), 0)


# ------------------------------------------------------ restriction + renaming
def _restrict_all(store: ObddStore, f: int, fixed: Mapping[int, int]) -> int:
    """Cofactor ``f`` (a raw node id) by every level -> bit in ``fixed``."""
    memo: dict[int, int] = {}
    lvl, lo, hi = store._lvl, store._lo, store._hi

    def go(n: int) -> int:
        if n < 2:
            return n
        r = memo.get(n)
        if r is not None:
            return r
        l = lvl[n]
        if l in fixed:
            r = go(hi[n] if fixed[l] else lo[n])
        else:
            r = store._mk(l, go(lo[n]), go(hi[n]))
        memo[n] = r
        return r

    return go(f)


def restrict_and_rename(
    deriv: Derivation,
    source: Cnf,
    target: Cnf,
    perm_index: int,
    family=None,
) -> Derivation:
    """Turn a refutation of IndMatch_m into one of Match_m.

    The selector bits are fixed to the smallest encoding of the inverse of
    ``perm_index``; then every vertex variable ``y^j_u`` is renamed to
    ``y^j_{pi(u)}``, in the OBDDs and in the order alike.  Lines that
    become TRUE are dropped.  A conjunction with one dropped antecedent,
    a projection on a selector bit, and a subsumption whose antecedent is
    unchanged turn into subsumption steps (each antecedent implies the
    restricted line), so no line grows.

    Lines are processed one at a time in a scratch store and come out
    serialized, so memory stays bounded by the largest line.
    """
    m = source.m
    fam = family if family is not None else PermFamily(m)
    if not 0 <= perm_index < len(fam):
        raise ValueError(f"permutation index {perm_index} is not in the family")
    pi = fam.maps[perm_index]
    alpha = encode_selector(fam.inverse_index(perm_index), perm_bits(m))
    zvars = [source.var(perm_var(b + 1)) for b in range(len(alpha))]

    def rename(v: int) -> int:
        r = source.role(v)
        if r.role == "y":
            j, u = r.idx
            return target.var(vertex_var(j, pi[u - 1]))
        return target.var(r)

    rename_map = {v: rename(v) for v in deriv.order.perm if source.role(v).role != "z"}
    new_order = VarOrder([rename_map[v] for v in deriv.order.perm if v in rename_map])
    clause_index = {frozenset(c): k for k, c in enumerate(target.clauses)}
    out = Derivation(new_order)
    mapped: list[int | None] = []
    scratch: ObddStore | None = None

    for k, line in enumerate(deriv.lines):
        if scratch is None or scratch.node_count > 1_000_000:
            scratch = ObddStore(deriv.order, node_cap=1 << 62)
        fixed = {scratch.order.position(z): a for z, a in zip(zvars, alpha)}
        raw = _restrict_all(scratch, scratch.load(deriv.serialized(k)).id, fixed)
        if raw == 1:
            mapped.append(None)
            continue
        restricted = scratch.export(NodeRef(scratch, raw)).renamed(rename_map)
        rule = line.rule
        new_rule: Rule
        if isinstance(rule, Axiom):
            lits = []
            for l in source.clauses[rule.clause]:
                if source.role(abs(l)).role == "z":
                    continue
                lits.append(rename(abs(l)) if l > 0 else -rename(abs(l)))
            key = frozenset(lits)
            if key not in clause_index:
                raise ValueError(f"restricted axiom {k} is not a clause of the target CNF")
            new_rule = Axiom(clause_index[key])
        elif isinstance(rule, Conjunction):
            a, b = mapped[rule.left], mapped[rule.right]
            if a is None and b is None:
                raise AssertionError("conjunction of two TRUE lines is not TRUE")
            if a is None or b is None:
                new_rule = Subsumption(b if a is None else a)
            else:
                new_rule = Conjunction(a, b)
        elif isinstance(rule, Projection):
            a = mapped[rule.ante]
            if a is None:
                raise AssertionError("projection of TRUE is not TRUE")
            if source.role(rule.var).role == "z":
                new_rule = Subsumption(a)
            else:
                new_rule = Projection(a, rename(rule.var))
        else:
            a = mapped[rule.ante]
            if a is None:
                raise AssertionError("TRUE implies only TRUE")
            new_rule = Subsumption(a)
        mapped.append(out.add(new_rule, restricted))
    return out


def lift_match_refutation(
    deriv: Derivation,
    match: Cnf,
    indmatch: Cnf,
    perm_index: int,
    family=None,
) -> Derivation:
    """Hand-built IndMatch_m derivation of "the selector is not alpha" from a Match_m refutation.

    ``alpha`` is the selector that :func:`restrict_and_rename` fixes for
    ``perm_index``, and sigma is the permutation it selects.  Every line L
    becomes (selector != alpha) or L', where L' renames ``y^j_u`` to
    ``y^j_{sigma(u)}``; the selector bits go on top of the order.
    Conjunction and projection commute with that disjunction.  A type-5
    axiom lifts to an independence axiom of IndMatch_m directly; the other
    axioms are stated as is and weakened by one subsumption step.
    Restricting the result with the same ``perm_index`` gives back a
    Match_m refutation.
    """
    m = match.m
    fam = family if family is not None else PermFamily(m)
    inv = fam.inverse_index(perm_index)
    sigma = fam.maps[inv]
    alpha = encode_selector(inv, perm_bits(m))
    zvars = [indmatch.var(perm_var(b + 1)) for b in range(len(alpha))]

    def rename(v: int) -> int:
        r = match.role(v)
        if r.role == "y":
            j, u = r.idx
            return indmatch.var(vertex_var(j, sigma[u - 1]))
        return indmatch.var(r)

    rename_map = {v: rename(v) for v in deriv.order.perm}
    order = VarOrder(zvars + [rename_map[v] for v in deriv.order.perm])
    zlits = [-z if a else z for z, a in zip(zvars, alpha)]
    clause_index = {frozenset(c): k for k, c in enumerate(indmatch.clauses)}

    def lifted(ser: SerializedObdd) -> SerializedObdd:
        if ser.is_true:
            raise ValueError("a refutation line is TRUE")
        nodes = list(ser.renamed(rename_map).nodes)
        cont = len(nodes) + 1 if nodes else ser.const
        for z, a in reversed(list(zip(zvars, alpha))):
            # the branch that disagrees with alpha satisfies the disjunction
            nodes.append((z, 1, cont) if a else (z, cont, 1))
            cont = len(nodes) + 1
        return SerializedObdd(nodes)

    out = Derivation(order)
    mapped: list[int] = []
    for k, line in enumerate(deriv.lines):
        rule = line.rule
        obdd = lifted(deriv.serialized(k))
        if isinstance(rule, Axiom):
            lits = [rename(abs(l)) if l > 0 else -rename(abs(l)) for l in match.clauses[rule.clause]]
            with_selector = clause_index.get(frozenset(lits + zlits))
            if with_selector is not None:
                mapped.append(out.add(Axiom(with_selector), obdd))
                continue
            plain = clause_index.get(frozenset(lits))
            if plain is None:
                raise ValueError(f"axiom {k} has no counterpart in the IndMatch formula")
            scratch = ObddStore(order, node_cap=1 << 62)
            ax = out.add(Axiom(plain), scratch.export(scratch.build_clause(indmatch.clauses[plain])))
            mapped.append(out.add(Subsumption(ax), obdd))
        elif isinstance(rule, Conjunction):
            mapped.append(out.add(Conjunction(mapped[rule.left], mapped[rule.right]), obdd))
        elif isinstance(rule, Projection):
            mapped.append(out.add(Projection(mapped[rule.ante], rename(rule.var)), obdd))
        else:
            mapped.append(out.add(Subsumption(mapped[rule.ante]), obdd))
    return out
