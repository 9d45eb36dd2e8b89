"""Clause databases, variable naming, and the CNF families under study.

Variables carry a role tag so that edge, vertex and permutation variables
can be told apart after a DIMACS round trip:

* ``x{i}_{u}_{v}``: edge ``{u, v}`` (u < v) occupies matching slot ``i``
* ``y{j}_{u}``: vertex ``u`` is element ``j`` of the independent set
* ``z{b}``: bit ``b`` of the permutation selector
* ``p{i}_{h}``: pigeon ``i`` sits in hole ``h``
* ``v{n}``: anonymous DIMACS variable

All indices are 1-based.
"""

from __future__ import annotations

import io
import math
import re
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence, TextIO

from .field import PermFamily, family_size

Clause = tuple[int, ...]


@dataclass(frozen=True, order=True)
class VarId:
    role: str
    idx: tuple[int, ...]

    @property
    def name(self) -> str:
        if self.role == "x":
            i, u, v = self.idx
            return f"x{i}_{u}_{v}"
        if self.role == "y":
            j, u = self.idx
            return f"y{j}_{u}"
        if self.role == "p":
            i, h = self.idx
            return f"p{i}_{h}"
        return f"{self.role}{self.idx[0]}"

    def __str__(self) -> str:
        return self.name

    @staticmethod
    def parse(name: str) -> "VarId":
        m = _NAME_RE.fullmatch(name)
        if not m:
            raise ValueError(f"unrecognised variable name {name!r}")
        role = name[0]
        nums = tuple(int(t) for t in name[1:].split("_"))
        expected = {"x": 3, "y": 2, "p": 2, "z": 1, "v": 1}[role]
        if len(nums) != expected:
            raise ValueError(f"variable name {name!r} has the wrong number of indices")
        if role == "x":
            return edge_var(*nums)
        return VarId(role, nums)


_NAME_RE = re.compile(r"[xypzv]\d+(_\d+)*")


def edge_var(i: int, u: int, v: int) -> VarId:
    if u == v:
        raise ValueError("an edge needs two distinct endpoints")
    if u > v:
        u, v = v, u
    return VarId("x", (i, u, v))


def vertex_var(j: int, u: int) -> VarId:
    return VarId("y", (j, u))


def perm_var(b: int) -> VarId:
    return VarId("z", (b,))


def edges_of(m: int) -> list[tuple[int, int]]:
    """Unordered pairs of [3m] in lexicographic order."""
    return list(combinations(range(1, 3 * m + 1), 2))


@dataclass
class Cnf:
    num_vars: int
    clauses: list[Clause]
    roles: list[VarId] = field(default_factory=list)
    family: str = "plain"
    params: dict[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.roles:
            self.roles = [VarId("v", (n,)) for n in range(1, self.num_vars + 1)]
        if len(self.roles) != self.num_vars:
            raise ValueError("role table does not cover every variable")
        self._by_role = {r: k + 1 for k, r in enumerate(self.roles)}
        if len(self._by_role) != self.num_vars:
            raise ValueError("two variables share a role tag")

    def var(self, role: VarId | str) -> int:
        if isinstance(role, str):
            role = VarId.parse(role)
        try:
            return self._by_role[role]
        except KeyError:
            raise KeyError(f"no variable with role {role}") from None

    def role(self, var: int) -> VarId:
        return self.roles[var - 1]

    def name(self, var: int) -> str:
        return self.roles[var - 1].name

    def has_role(self, role: VarId) -> bool:
        return role in self._by_role

    @property
    def m(self) -> int:
        return self.params["m"]

    def structurally_equal(self, other: "Cnf") -> bool:
        return (
            self.num_vars == other.num_vars
            and self.clauses == other.clauses
            and self.roles == other.roles
            and self.family == other.family
            and self.params == other.params
        )

    def is_satisfied_by(self, assignment: Mapping[int, int]) -> bool:
        return all(any((assignment[abs(l)] == 1) == (l > 0) for l in c) for c in self.clauses)


# ---------------------------------------------------------------- generators
def match_roles(m: int) -> list[VarId]:
    roles = [edge_var(i, u, v) for i in range(1, m + 1) for (u, v) in edges_of(m)]
    roles += [vertex_var(j, u) for j in range(1, 2 * m + 2) for u in range(1, 3 * m + 1)]
    return roles


def _match_base_clauses(m: int, var: Mapping[VarId, int]) -> dict[int, list[Clause]]:
    edges = edges_of(m)
    n = 3 * m
    rows = 2 * m + 1
    by_type: dict[int, list[Clause]] = {t: [] for t in range(1, 6)}
    for i in range(1, m + 1):
        by_type[1].append(tuple(var[edge_var(i, u, v)] for u, v in edges))
    # slots i < j; the i != j condition lists each clause twice otherwise
    for i, j in combinations(range(1, m + 1), 2):
        for e in edges:
            for f in edges:
                if set(e) & set(f):
                    by_type[2].append((-var[edge_var(i, *e)], -var[edge_var(j, *f)]))
    for j in range(1, rows + 1):
        by_type[3].append(tuple(var[vertex_var(j, u)] for u in range(1, n + 1)))
    for i, j in combinations(range(1, rows + 1), 2):
        for u in range(1, n + 1):
            by_type[4].append((-var[vertex_var(i, u)], -var[vertex_var(j, u)]))
    return by_type


def gen_match(m: int) -> Cnf:
    if m < 1:
        raise ValueError("m must be at least 1")
    roles = match_roles(m)
    var = {r: k + 1 for k, r in enumerate(roles)}
    by_type = _match_base_clauses(m, var)
    rows = 2 * m + 1
    for u, v in edges_of(m):
        for k in range(1, m + 1):
            xe = var[edge_var(k, u, v)]
            for i in range(1, rows + 1):
                yi = var[vertex_var(i, u)]
                for j in range(1, rows + 1):
                    by_type[5].append((-yi, -var[vertex_var(j, v)], -xe))
    clauses = [c for t in range(1, 6) for c in by_type[t]]
    return Cnf(len(roles), clauses, roles, "match", {"m": m})


def match_clause_counts(m: int) -> dict[int, int]:
    """Closed-form clause counts of each Match_m clause type."""
    c = math.comb(3 * m, 2)
    return {
        1: m,
        2: math.comb(m, 2) * c * (2 * (3 * m - 2) + 1),
        3: 2 * m + 1,
        4: math.comb(2 * m + 1, 2) * 3 * m,
        5: c * m * (2 * m + 1) ** 2,
    }


def match_clause_type(cnf: Cnf, clause: Clause) -> int:
    """Classify a clause of Match_m / IndMatch_m into types 1..5."""
    roles = [cnf.role(abs(l)) for l in clause]
    if all(l > 0 for l in clause):
        return 1 if roles[0].role == "x" else 3
    kinds = sorted(r.role for r in roles)
    if kinds == ["x", "x"]:
        return 2
    if kinds == ["y", "y"]:
        return 4
    return 5


def perm_bits(m: int) -> int:
    return math.ceil(math.log2(family_size(m)))


def decode_selector(alpha: Sequence[int], size: int) -> int:
    """Map a bit vector (z_1 most significant) to a family index, surjectively."""
    t = 0
    for bit in alpha:
        t = (t << 1) | (1 if bit else 0)
    return t % size


def encode_selector(index: int, bits: int) -> tuple[int, ...]:
    """Smallest bit vector that decodes to ``index``."""
    return tuple((index >> (bits - 1 - b)) & 1 for b in range(bits))


def indmatch_roles(m: int) -> list[VarId]:
    return [perm_var(b) for b in range(1, perm_bits(m) + 1)] + match_roles(m)


def gen_indmatch(m: int, family: PermFamily | None = None) -> Cnf:
    """Match_m with the independent set routed through a selected permutation.

    Selector bits are numbered first so that the natural order queries them
    before every matching variable.
    """
    fam = family if family is not None else PermFamily(m)
    ell = perm_bits(m)
    roles = indmatch_roles(m)
    var = {r: k + 1 for k, r in enumerate(roles)}
    by_type = _match_base_clauses(m, var)
    rows = 2 * m + 1
    zvars = [var[perm_var(b)] for b in range(1, ell + 1)]
    yv = [[0] * (3 * m + 1) for _ in range(rows + 1)]
    for j in range(1, rows + 1):
        for u in range(1, 3 * m + 1):
            yv[j][u] = var[vertex_var(j, u)]
    independence: list[Clause] = []
    for t in range(1 << ell):
        alpha = encode_selector(t, ell)
        zlits = tuple(-z if a else z for z, a in zip(zvars, alpha))
        pi = fam.maps[decode_selector(alpha, len(fam))]
        for u, v in edges_of(m):
            pu, pv = pi[u - 1], pi[v - 1]
            for k in range(1, m + 1):
                xe = -var[edge_var(k, u, v)]
                for i in range(1, rows + 1):
                    yi = -yv[i][pu]
                    for j in range(1, rows + 1):
                        independence.append(zlits + (yi, -yv[j][pv], xe))
    clauses = [c for t in range(1, 5) for c in by_type[t]] + independence
    return Cnf(len(roles), clauses, roles, "indmatch", {"m": m})


def indmatch_independence_count(m: int) -> int:
    return (1 << perm_bits(m)) * math.comb(3 * m, 2) * m * (2 * m + 1) ** 2


def gen_php(n: int) -> Cnf:
    """n+1 pigeons into n holes."""
    if n < 1:
        raise ValueError("n must be at least 1")
    roles = [VarId("p", (i, h)) for i in range(1, n + 2) for h in range(1, n + 1)]
    var = {r: k + 1 for k, r in enumerate(roles)}
    clauses: list[Clause] = [
        tuple(var[VarId("p", (i, h))] for h in range(1, n + 1)) for i in range(1, n + 2)
    ]
    for h in range(1, n + 1):
        for i, i2 in combinations(range(1, n + 2), 2):
            clauses.append((-var[VarId("p", (i, h))], -var[VarId("p", (i2, h))]))
    return Cnf(len(roles), clauses, roles, "php", {"n": n})


# --------------------------------------------------------- assignments on MVars
@dataclass(frozen=True)
class MAssignment:
    """Total assignment to MVars_m, stored as the set of variables set to 1."""

    m: int
    ones: frozenset[VarId]

    def value(self, v: VarId) -> int:
        return 1 if v in self.ones else 0

    def slot_edges(self) -> dict[int, set[tuple[int, int]]]:
        out: dict[int, set[tuple[int, int]]] = {i: set() for i in range(1, self.m + 1)}
        for v in self.ones:
            if v.role == "x":
                i, a, b = v.idx
                out[i].add((a, b))
        return out

    def rows(self) -> dict[int, set[int]]:
        out: dict[int, set[int]] = {j: set() for j in range(1, 2 * self.m + 2)}
        for v in self.ones:
            if v.role == "y":
                j, u = v.idx
                out[j].add(u)
        return out

    def to_dimacs(self, cnf: Cnf) -> dict[int, int]:
        return {k + 1: (1 if r in self.ones else 0) for k, r in enumerate(cnf.roles)}

    @staticmethod
    def from_dimacs(cnf: Cnf, values: Mapping[int, int]) -> "MAssignment":
        ones = frozenset(
            cnf.role(v) for v, b in values.items() if b and cnf.role(v).role in ("x", "y")
        )
        return MAssignment(cnf.m, ones)


def is_nondegenerate(a: MAssignment, m: int | None = None) -> bool:
    """True iff the assignment satisfies Match_m clause types 1 to 4."""
    m = a.m if m is None else m
    slots = a.slot_edges()
    if any(not slots[i] for i in range(1, m + 1)):
        return False
    for i, j in combinations(range(1, m + 1), 2):
        for e in slots[i]:
            for f in slots[j]:
                if set(e) & set(f):
                    return False
    rows = a.rows()
    if any(not rows[j] for j in range(1, 2 * m + 2)):
        return False
    seen: set[int] = set()
    for j in range(1, 2 * m + 2):
        if seen & rows[j]:
            return False
        seen |= rows[j]
    return True


def random_nondegenerate(m: int, rng) -> MAssignment:
    """A random assignment satisfying clause types 1 to 4.

    Vertices are shuffled and cut into one private pool of at least two
    vertices per slot; each slot selects a non-empty random set of edges
    inside its pool.  Rows get disjoint non-empty random vertex sets.
    """
    n = 3 * m
    rows = 2 * m + 1
    verts = [int(x) + 1 for x in rng.permutation(n)]
    # pool sizes: 2 each, the leftover m vertices spread at random
    sizes = [2] * m
    for _ in range(int(rng.integers(0, m + 1))):
        sizes[int(rng.integers(m))] += 1
    ones: set[VarId] = set()
    pos = 0
    for i in range(1, m + 1):
        pool = sorted(verts[pos : pos + sizes[i - 1]])
        pos += sizes[i - 1]
        cand = list(combinations(pool, 2))
        pick = rng.random(len(cand)) < 0.5
        if not pick.any():
            pick[int(rng.integers(len(cand)))] = True
        ones.update(edge_var(i, a, b) for (a, b), p in zip(cand, pick) if p)
    chosen = [int(x) + 1 for x in rng.permutation(n)[: int(rng.integers(rows, n + 1))]]
    owner = list(range(1, rows + 1)) + [int(rng.integers(1, rows + 1)) for _ in range(len(chosen) - rows)]
    ones.update(vertex_var(j, u) for j, u in zip(owner, chosen))
    return MAssignment(m, frozenset(ones))


def find_bad_edges(a: MAssignment, m: int | None = None) -> set[tuple[int, int]]:
    """Selected edges whose two endpoints are both selected vertices."""
    verts: set[int] = set()
    for r in a.rows().values():
        verts |= r
    bad = set()
    for edges in a.slot_edges().values():
        for u, v in edges:
            if u in verts and v in verts:
                bad.add((u, v))
    return bad


# ----------------------------------------------------------------- DIMACS I/O
class DimacsError(ValueError):
    def __init__(self, line: int, msg: str):
        super().__init__(f"line {line}: {msg}")
        self.line = line


def write_dimacs(cnf: Cnf, out: TextIO) -> None:
    out.write(f"c family {cnf.family}\n")
    for k, v in sorted(cnf.params.items()):
        out.write(f"c param {k} {v}\n")
    out.write(f"p cnf {cnf.num_vars} {len(cnf.clauses)}\n")
    for c in cnf.clauses:
        out.write(" ".join(map(str, c)))
        out.write(" 0\n")


def dimacs_text(cnf: Cnf) -> str:
    buf = io.StringIO()
    write_dimacs(cnf, buf)
    return buf.getvalue()


def write_name_map(cnf: Cnf, out: TextIO) -> None:
    for k, r in enumerate(cnf.roles):
        out.write(f"{k + 1} {r.name}\n")


def parse_name_map(text: str) -> dict[int, VarId]:
    out: dict[int, VarId] = {}
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2 or not parts[0].isdigit():
            raise DimacsError(ln, f"expected '<int> <role-tag>', got {raw!r}")
        try:
            out[int(parts[0])] = VarId.parse(parts[1])
        except ValueError as exc:
            raise DimacsError(ln, str(exc)) from None
    return out


def parse_dimacs(text: str, names: Mapping[int, VarId] | None = None) -> Cnf:
    family = "plain"
    params: dict[str, int] = {}
    header: tuple[int, int] | None = None
    clauses: list[Clause] = []
    cur: list[int] = []
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("c"):
            parts = line.split()
            if len(parts) == 3 and parts[1] == "family":
                family = parts[2]
            elif len(parts) == 4 and parts[1] == "param":
                try:
                    params[parts[2]] = int(parts[3])
                except ValueError:
                    raise DimacsError(ln, "parameter value is not an integer") from None
            continue
        if line.startswith("p"):
            parts = line.split()
            if header is not None:
                raise DimacsError(ln, "second problem line")
            if len(parts) != 4 or parts[1] != "cnf":
                raise DimacsError(ln, "problem line must read 'p cnf <vars> <clauses>'")
            try:
                header = (int(parts[2]), int(parts[3]))
            except ValueError:
                raise DimacsError(ln, "problem line counts are not integers") from None
            if header[0] < 0 or header[1] < 0:
                raise DimacsError(ln, "negative count in problem line")
            continue
        if header is None:
            raise DimacsError(ln, "clause before the problem line")
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise DimacsError(ln, f"bad literal {tok!r}") from None
            if lit == 0:
                clauses.append(tuple(cur))
                cur = []
            else:
                if abs(lit) > header[0]:
                    raise DimacsError(ln, f"literal {lit} exceeds declared variable count")
                cur.append(lit)
    if header is None:
        raise DimacsError(0, "missing problem line")
    if cur:
        raise DimacsError(len(text.splitlines()), "last clause is not 0-terminated")
    if len(clauses) != header[1]:
        raise DimacsError(0, f"header declares {header[1]} clauses, found {len(clauses)}")
    roles: list[VarId] = []
    if names:
        try:
            roles = [names[v] for v in range(1, header[0] + 1)]
        except KeyError as exc:
            raise DimacsError(0, f"name map lacks variable {exc.args[0]}") from None
    return Cnf(header[0], clauses, roles, family, params)


def read_cnf(path: str | Path, names_path: str | Path | None = None) -> Cnf:
    path = Path(path)
    if names_path is None:
        cand = path.with_suffix(path.suffix + ".names")
        names_path = cand if cand.exists() else None
    names = parse_name_map(Path(names_path).read_text()) if names_path else None
    return parse_dimacs(path.read_text(), names)


def save_cnf(cnf: Cnf, path: str | Path) -> tuple[Path, Path]:
    path = Path(path)
    with open(path, "w") as fh:
        write_dimacs(cnf, fh)
    names = path.with_suffix(path.suffix + ".names")
    with open(names, "w") as fh:
        write_name_map(cnf, fh)
    return path, names


def iter_assignments(nvars: int) -> Iterator[dict[int, int]]:
    for t in range(1 << nvars):
        yield {v: (t >> (v - 1)) & 1 for v in range(1, nvars + 1)}


def brute_force_sat(cnf: Cnf) -> bool:
    """Exhaustive satisfiability check; intended for tiny formulas only."""
    if cnf.num_vars > 24:
        raise ValueError("brute force limited to 24 variables")
    n = cnf.num_vars
    masks = []
    for c in cnf.clauses:
        pos = neg = 0
        for l in c:
            if l > 0:
                pos |= 1 << (l - 1)
            else:
                neg |= 1 << (-l - 1)
        masks.append((pos, neg))
    full = (1 << n) - 1
    for t in range(1 << n):
        nt = full ^ t
        if all((pos & t) or (neg & nt) for pos, neg in masks):
            return True
    return False


def clause_vars(clause: Iterable[int]) -> set[int]:
    return {abs(l) for l in clause}
