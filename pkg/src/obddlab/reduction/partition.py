"""Variable partitions of MVars_m, their density, and the dense index sets.

A partition hands every matching variable to player I or player II.  Player
I's edge variables define ``E_i`` (edges that slot ``i`` may use on side I)
and player II's vertex variables define ``V_j``.  Indices in the public API
are 1-based like the variable names; internal numpy arrays are 0-based.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import permutations
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from ..cnf import VarId, edge_var, edges_of, match_roles, vertex_var

SIDE_I = "I"
SIDE_II = "II"


class PartitionError(ValueError):
    pass


@dataclass(frozen=True)
class Partition:
    """``side_one`` is the set of MVars_m variables held by player I."""

    m: int
    side_one: frozenset[VarId]

    def side(self, v: VarId) -> str:
        return SIDE_I if v in self.side_one else SIDE_II

    @cached_property
    def edges(self) -> list[tuple[int, int]]:
        return edges_of(self.m)

    @cached_property
    def edge_index(self) -> dict[tuple[int, int], int]:
        return {e: k for k, e in enumerate(self.edges)}

    @cached_property
    def emat(self) -> np.ndarray:
        """emat[i-1, e] is True iff x^i_e belongs to player I."""
        out = np.zeros((self.m, len(self.edges)), dtype=bool)
        for v in self.side_one:
            if v.role == "x":
                i, a, b = v.idx
                out[i - 1, self.edge_index[(a, b)]] = True
        return out

    @cached_property
    def vmat(self) -> np.ndarray:
        """vmat[j-1, u-1] is True iff y^j_u belongs to player II."""
        out = np.ones((2 * self.m + 1, 3 * self.m), dtype=bool)
        for v in self.side_one:
            if v.role == "y":
                j, u = v.idx
                out[j - 1, u - 1] = False
        return out

    @cached_property
    def endpoints(self) -> tuple[np.ndarray, np.ndarray]:
        eu = np.array([a - 1 for a, _ in self.edges], dtype=np.intp)
        ev = np.array([b - 1 for _, b in self.edges], dtype=np.intp)
        return eu, ev

    @cached_property
    def inside(self) -> np.ndarray:
        """inside[j-1, e] is True iff both endpoints of e lie in V_j."""
        eu, ev = self.endpoints
        return self.vmat[:, eu] & self.vmat[:, ev]

    @cached_property
    def adjacency(self) -> np.ndarray:
        """adjacency[i-1] is the 0/1 adjacency matrix of E_i over [3m]."""
        n = 3 * self.m
        eu, ev = self.endpoints
        adj = np.zeros((self.m, n, n), dtype=bool)
        adj[:, eu, ev] = self.emat
        adj[:, ev, eu] = self.emat
        return adj

    @cached_property
    def edge_sets(self) -> list[frozenset[tuple[int, int]]]:
        """Index i-1 holds E_i as 1-based (u, v) pairs with u < v."""
        return [frozenset(e for e, k in self.edge_index.items() if self.emat[i, k]) for i in range(self.m)]

    @cached_property
    def vertex_sets(self) -> list[frozenset[int]]:
        """Index j-1 holds V_j as 1-based vertices."""
        return [frozenset(int(u) + 1 for u in np.flatnonzero(row)) for row in self.vmat]

    def edge_set(self, i: int) -> frozenset[tuple[int, int]]:
        return self.edge_sets[i - 1]

    def vertex_set(self, j: int) -> frozenset[int]:
        return self.vertex_sets[j - 1]


def full_partition(m: int) -> Partition:
    """Every edge variable to player I, every vertex variable to player II."""
    return Partition(m, frozenset(v for v in match_roles(m) if v.role == "x"))


def partition_from_sides(m: int, sides: Mapping[VarId, str]) -> Partition:
    roles = match_roles(m)
    missing = [v.name for v in roles if v not in sides]
    if missing:
        raise PartitionError(f"partition leaves {len(missing)} variables unassigned, e.g. {missing[0]}")
    extra = set(sides) - set(roles)
    if extra:
        raise PartitionError(f"{sorted(extra)[0].name} is not a variable of MVars_{m}")
    bad = {s for s in sides.values() if s not in (SIDE_I, SIDE_II)}
    if bad:
        raise PartitionError(f"unknown side label {sorted(bad)[0]!r}")
    return Partition(m, frozenset(v for v, s in sides.items() if s == SIDE_I))


def random_partition(
    m: int, rng: np.random.Generator, p_edge: float | None = None, p_vertex: float | None = None
) -> Partition:
    """Each edge variable goes to I with prob ``p_edge``, each vertex variable to II with ``p_vertex``.

    Missing probabilities are drawn uniformly from [0.5, 1] so that a batch of
    partitions spans a wide range of densities.
    """
    pe = rng.uniform(0.5, 1.0) if p_edge is None else p_edge
    pv = rng.uniform(0.5, 1.0) if p_vertex is None else p_vertex
    ones = []
    for v in match_roles(m):
        if v.role == "x":
            if rng.random() < pe:
                ones.append(v)
        elif rng.random() >= pv:
            ones.append(v)
    return Partition(m, frozenset(ones))


def split_by_order(order: Iterable[VarId], m: int) -> Partition:
    """Cut an order over MVars_m (z-variables are skipped) at the first half-way point.

    Position ``i0`` is the first prefix holding at least half of the edge
    variables or at least half of the vertex variables.  Player I receives the
    side that carries the edge half: the prefix when the edge count tripped
    first, the suffix otherwise.
    """
    mvars = [v for v in order if v.role in ("x", "y")]
    roles = set(match_roles(m))
    if len(mvars) != len(roles) or set(mvars) != roles:
        raise PartitionError("order must list every variable of MVars_m exactly once")
    n_edge = m * math.comb(3 * m, 2)
    n_vert = (2 * m + 1) * 3 * m
    ec = vc = 0
    for pos, v in enumerate(mvars):
        if v.role == "x":
            ec += 1
        else:
            vc += 1
        if 2 * ec >= n_edge:
            return Partition(m, frozenset(mvars[: pos + 1]))
        if 2 * vc >= n_vert:
            return Partition(m, frozenset(mvars[pos + 1 :]))
    raise AssertionError("unreachable: the full order holds every variable")


def prefix_side(order: Sequence[VarId], partition: Partition) -> str | None:
    """Which player holds a prefix of the MVars part of ``order``; None if neither does."""
    mvars = [v for v in order if v.role in ("x", "y")]
    sides = [partition.side(v) for v in mvars]
    changes = sum(1 for a, b in zip(sides, sides[1:]) if a != b)
    if changes > 1:
        return None
    return sides[0] if sides else SIDE_I


# ---------------------------------------------------------------- file format
def write_partition(p: Partition, path: str | Path) -> None:
    lines = [f"{v.name} {p.side(v)}" for v in match_roles(p.m)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_partition(path: str | Path, m: int) -> Partition:
    sides: dict[VarId, str] = {}
    for ln, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        raw = raw.strip()
        if not raw or raw.startswith("#"):
            continue
        toks = raw.split()
        if len(toks) != 2:
            raise PartitionError(f"line {ln}: expected '<variable> <I|II>'")
        try:
            v = VarId.parse(toks[0])
        except ValueError as exc:
            raise PartitionError(f"line {ln}: {exc}") from None
        if v in sides:
            raise PartitionError(f"line {ln}: {v.name} listed twice")
        sides[v] = toks[1]
    return partition_from_sides(m, sides)


# -------------------------------------------------------------------- density
def density_exact(p: Partition) -> Fraction:
    """Exact density, summing the five-fold intersection formula edge by edge.

    An edge e contributes once for every (i1, i2) with e in both slots and
    every (j1..j5) with e inside all five vertex sets, so the tuple sum
    factorises as sum_e d_e^2 c_e^5.
    """
    m = p.m
    d = p.emat.sum(axis=0).astype(object)
    c = p.inside.sum(axis=0).astype(object)
    num = int(sum(d * d * c**5))
    den = m * m * (2 * m + 1) ** 5 * math.comb(3 * m, 2)
    return Fraction(num, den)


@dataclass(frozen=True)
class McEstimate:
    mean: float
    stderr: float
    samples: int


def density_mc(p: Partition, samples: int, rng: np.random.Generator, batch: int = 20000) -> McEstimate:
    """Average of the normalised intersection size over uniform index tuples."""
    m = p.m
    rows = 2 * m + 1
    ce = math.comb(3 * m, 2)
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < samples:
        b = min(batch, samples - done)
        i1 = rng.integers(0, m, size=b)
        i2 = rng.integers(0, m, size=b)
        js = rng.integers(0, rows, size=(b, 5))
        mask = p.emat[i1] & p.emat[i2]
        for k in range(5):
            mask &= p.inside[js[:, k]]
        vals = mask.sum(axis=1) / ce
        total += float(vals.sum())
        total_sq += float((vals * vals).sum())
        done += b
    mean = total / samples
    var = max(total_sq / samples - mean * mean, 0.0)
    se = math.sqrt(var / (samples - 1)) if samples > 1 else float("inf")
    return McEstimate(mean, se, samples)


def density(p: Partition, mode: str = "exact", samples: int = 100_000, seed: int = 0) -> float:
    if mode == "exact":
        return float(density_exact(p))
    if mode == "mc":
        return density_mc(p, samples, np.random.default_rng(seed)).mean
    raise ValueError(f"unknown density mode {mode!r}")


# ------------------------------------------------------------- dense indices
def distinct_triples(rows: int) -> np.ndarray:
    return np.array(list(permutations(range(rows), 3)), dtype=np.intp).reshape(-1, 3)


@dataclass
class DensityProfile:
    """Density-derived index sets; tuples stored 0-based in numpy arrays.

    ``n3[i]`` lists the distinct vertex-slot triples whose common vertex set
    keeps at least a (delta/3) fraction of all edges inside E_i; ``n2[i]`` is
    its projection onto the first two coordinates; ``g`` holds the slots with
    at least (delta/12)(2m+1)^3 such triples.
    """

    partition: Partition
    delta: Fraction
    mode: str
    triple_counts: np.ndarray = field(repr=False)  # [i, a, b, c] edge counts
    n3: list[np.ndarray] = field(repr=False)
    n2: list[np.ndarray] = field(repr=False)
    g: tuple[int, ...]

    @property
    def m(self) -> int:
        return self.partition.m

    @property
    def delta_float(self) -> float:
        return float(self.delta)

    @cached_property
    def n3_sets(self) -> list[set[tuple[int, int, int]]]:
        return [set(map(tuple, a.tolist())) for a in self.n3]

    @cached_property
    def n2_sets(self) -> list[set[tuple[int, int]]]:
        return [set(map(tuple, a.tolist())) for a in self.n2]

    def in_n3(self, i: int, triple: Sequence[int]) -> bool:
        """1-based slot and triple."""
        return tuple(t - 1 for t in triple) in self.n3_sets[i - 1]

    def in_n2(self, i: int, pair: Sequence[int]) -> bool:
        return tuple(t - 1 for t in pair) in self.n2_sets[i - 1]

    @property
    def g_one_based(self) -> tuple[int, ...]:
        return tuple(i + 1 for i in self.g)


def triple_edge_counts(p: Partition) -> np.ndarray:
    """counts[i, a, b, c] = |E_i[V_a ∩ V_b ∩ V_c]| for all slot/row indices (0-based)."""
    m = p.m
    rows = 2 * m + 1
    inside = p.inside.astype(np.int32)
    out = np.zeros((m, rows, rows, rows), dtype=np.int32)
    for i in range(m):
        a_mat = inside * p.emat[i]
        for a in range(rows):
            out[i, a] = (inside * a_mat[a]) @ inside.T
    return out


def density_profile(
    p: Partition,
    delta: Fraction | float | None = None,
    mode: str = "exact",
    samples: int = 100_000,
    seed: int = 0,
) -> DensityProfile:
    """Compute N3, N2 and G against the thresholds.

    Without an explicit ``delta`` the density is computed in ``mode``:
    ``exact`` or ``mc`` (``samples`` draws from a generator seeded with ``seed``).
    """
    if delta is None:
        if mode == "exact":
            delta = density_exact(p)
        elif mode == "mc":
            delta = Fraction(density_mc(p, samples, np.random.default_rng(seed)).mean)
        else:
            raise ValueError(f"unknown density mode {mode!r}")
    else:
        mode = "given"
    frac = Fraction(delta) if not isinstance(delta, Fraction) else delta
    m = p.m
    rows = 2 * m + 1
    ce = math.comb(3 * m, 2)
    counts = triple_edge_counts(p)
    trip = distinct_triples(rows)
    n3: list[np.ndarray] = []
    n2: list[np.ndarray] = []
    g: list[int] = []
    # count >= (delta/3) * C  <=>  3 * count * den >= num * C
    num, den = frac.numerator, frac.denominator
    for i in range(m):
        vals = counts[i, trip[:, 0], trip[:, 1], trip[:, 2]].astype(object)
        keep = np.array([3 * int(v) * den >= num * ce for v in vals], dtype=bool) if len(vals) else np.zeros(0, bool)
        t3 = trip[keep]
        n3.append(t3)
        n2.append(np.unique(t3[:, :2], axis=0) if len(t3) else np.zeros((0, 2), dtype=np.intp))
        # |N3(i)| >= (delta/12)(2m+1)^3
        if 12 * len(t3) * den >= num * rows**3:
            g.append(i)
    return DensityProfile(p, frac, mode, counts, n3, n2, tuple(g))


# --------------------------------------------------------------- helper sets
def k12(edges: Iterable[tuple[int, int]], n: int | None = None) -> set[tuple[int, int, int]]:
    """Ordered triples (u, v, w), v != w, with {u,v} and {u,w} both edges."""
    nbrs: dict[int, set[int]] = {}
    for a, b in edges:
        if a == b:
            continue
        nbrs.setdefault(a, set()).add(b)
        nbrs.setdefault(b, set()).add(a)
    out = set()
    for u, ns in nbrs.items():
        for v in ns:
            for w in ns:
                if v != w:
                    out.add((u, v, w))
    return out


def pm(ground: Iterable[int], meet: Iterable[int]) -> set[tuple[int, int]]:
    """Ordered pairs over ``ground`` with at least one coordinate in ``meet``."""
    xs = list(ground)
    u = set(meet)
    return {(a, b) for a in xs for b in xs if a in u or b in u}


def tm(ground: Iterable[int], meet: Iterable[int]) -> set[tuple[int, int, int]]:
    xs = list(ground)
    u = set(meet)
    return {(a, b, c) for a in xs for b in xs for c in xs if a in u or b in u or c in u}


def pm_size(ground: int, meet: int) -> int:
    return ground**2 - (ground - meet) ** 2


def tm_size(ground: int, meet: int) -> int:
    return ground**3 - (ground - meet) ** 3
