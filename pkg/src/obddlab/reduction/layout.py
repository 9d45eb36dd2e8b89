"""Reduction layouts: sampling, exact masses, validation, assignments, switching.

A layout of length ``n`` places ``n`` set-disjointness gadgets and one
planted gadget.  It is a point of a (3n+3)-coordinate product space, in
this order: the slots ``i_1..i_{n+1}``, the row pairs ``(j_k1, j_k2)`` for
``k <= n``, the planted row triple, and the vertex triples ``(u_k, v_k, w_k)``
for ``k <= n+1``.  The sampler draws each coordinate uniformly from its
allowed set minus its blocked set; :func:`layout_mass` multiplies the
reciprocal sizes of those sets along a given layout.

All public indices are 1-based.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations
from typing import Iterator, Sequence

import numpy as np

from ..cnf import MAssignment, VarId, edge_var, vertex_var
from .partition import DensityProfile, pm_size, tm_size

Triple = tuple[int, int, int]
Pair = tuple[int, int]


class StuckError(RuntimeError):
    """The sampler met an empty candidate set."""

    def __init__(self, step: int, what: str):
        super().__init__(f"empty candidate set at coordinate {step} ({what})")
        self.step = step
        self.what = what


class NotSwitchable(ValueError):
    pass


@dataclass(frozen=True)
class Layout:
    i: tuple[int, ...]
    jpairs: tuple[Pair, ...]
    jtriple: Triple
    uvw: tuple[Triple, ...]

    @property
    def n(self) -> int:
        return len(self.jpairs)

    def coordinates(self) -> tuple:
        return (*self.i, *self.jpairs, self.jtriple, *self.uvw)

    @staticmethod
    def from_coordinates(coords: Sequence, n: int) -> "Layout":
        if len(coords) != 3 * n + 3:
            raise ValueError(f"a layout of length {n} has {3 * n + 3} coordinates")
        i = tuple(coords[: n + 1])
        jp = tuple(tuple(c) for c in coords[n + 1 : 2 * n + 1])
        jt = tuple(coords[2 * n + 1])
        uvw = tuple(tuple(c) for c in coords[2 * n + 2 :])
        return Layout(i, jp, jt, uvw)  # type: ignore[arg-type]

    def to_text(self) -> str:
        def fmt(ts):
            return " ".join(",".join(map(str, t)) for t in ts)

        return "\n".join(
            [
                "i " + " ".join(map(str, self.i)),
                "j " + fmt(self.jpairs + (self.jtriple,)),
                "uvw " + fmt(self.uvw),
            ]
        )

    @staticmethod
    def from_text(text: str) -> "Layout":
        rows = dict(line.split(" ", 1) if " " in line else (line, "") for line in text.strip().splitlines())
        i = tuple(int(t) for t in rows["i"].split())
        js = [tuple(int(x) for x in t.split(",")) for t in rows["j"].split()]
        uvw = tuple(tuple(int(x) for x in t.split(",")) for t in rows["uvw"].split())
        return Layout(i, tuple(js[:-1]), js[-1], uvw)  # type: ignore[arg-type]


# ---------------------------------------------------------------- validation
def layout_violations(layout: Layout, profile: DensityProfile) -> list[int]:
    """Numbers (1..9) of the layout conditions that fail."""
    p = profile.partition
    m = p.m
    n = layout.n
    bad: list[int] = []
    if (
        len(layout.i) != n + 1
        or len(layout.uvw) != n + 1
        or len(layout.jtriple) != 3
        or any(len(t) != 2 for t in layout.jpairs)
        or any(len(t) != 3 for t in layout.uvw)
    ):
        return list(range(1, 10))
    rows = 2 * m + 1
    verts = 3 * m
    if not all(1 <= x <= m for x in layout.i) or not all(
        1 <= x <= rows for t in layout.jpairs + (layout.jtriple,) for x in t
    ) or not all(1 <= x <= verts for t in layout.uvw for x in t):
        return list(range(1, 10))
    if len(set(layout.i)) != n + 1:
        bad.append(1)
    js = [x for t in layout.jpairs for x in t] + list(layout.jtriple)
    if len(set(js)) != len(js):
        bad.append(2)
    vs = [x for t in layout.uvw for x in t]
    if len(set(vs)) != len(vs):
        bad.append(3)
    es = p.edge_sets
    vs_ = p.vertex_sets
    rowpairs = list(layout.jpairs) + [layout.jtriple[:2]]
    c4 = c5 = True
    for k in range(n + 1):
        e = es[layout.i[k] - 1]
        u, v, w = layout.uvw[k]
        if not ((min(u, v), max(u, v)) in e and (min(u, w), max(u, w)) in e):
            c4 = False
        both = vs_[rowpairs[k][0] - 1] & vs_[rowpairs[k][1] - 1]
        if not (u in both and v in both and w in both):
            c5 = False
    if not c4:
        bad.append(4)
    if not c5:
        bad.append(5)
    if not all(set(layout.uvw[n]) <= vs_[j - 1] for j in layout.jtriple):
        bad.append(6)
    g = set(profile.g_one_based)
    if any(i not in g for i in layout.i):
        bad.append(7)
    if not profile.in_n3(layout.i[n], layout.jtriple):
        bad.append(8)
    if any(not profile.in_n2(layout.i[k], layout.jpairs[k]) for k in range(n)):
        bad.append(9)
    return bad


def validate_layout(layout: Layout, profile: DensityProfile) -> bool:
    return not layout_violations(layout, profile)


# ---------------------------------------------------------------- the process
@dataclass
class StepRecord:
    """Sizes seen when choosing one coordinate: allowed, blocked, candidates, space."""

    kind: str
    allowed: int
    blocked: int
    candidates: int
    space: int
    guard_bound: float
    guard_ok: bool


@dataclass
class SampleResult:
    layout: Layout
    steps: list[StepRecord] = field(repr=False)

    @property
    def guards_ok(self) -> bool:
        return all(s.guard_ok for s in self.steps)


class LayoutProcess:
    """Candidate sets of the layout experiment for one partition and length ``n``.

    The same candidate computation backs sampling, mass evaluation and the
    guard certificate, so the three cannot drift apart.
    """

    def __init__(self, profile: DensityProfile, n: int):
        if n < 0:
            raise ValueError("n must be non-negative")
        self.profile = profile
        self.n = n
        p = profile.partition
        self.m = p.m
        self.rows = 2 * self.m + 1
        self.verts = 3 * self.m
        self.adj = p.adjacency
        self.vmat = p.vmat
        self.g = np.array(profile.g, dtype=np.intp)
        self.gamma = (n + 1) / self.m
        self.delta = profile.delta_float
        self._offdiag = ~np.eye(self.verts, dtype=bool)
        self._cache: dict[tuple, object] = {}

    # guard right-hand sides, in the order of the five step guards
    def guard_bounds(self) -> tuple[float, float, float, float, float]:
        d, g, m = self.delta, self.gamma, self.m
        return (
            (d / 12 - g) * m,
            (d / 3 - 2 * g) * self.rows**2,
            (d / 3 - 3 * g) * self.rows**3,
            (d * d / 10 - 3 * g) * self.verts**3,
            (d * d / 10 - 3 * g) * self.verts**3,
        )

    # --- candidate sets (0-based arrays)
    def slot_candidates(self, prev: Sequence[int]) -> np.ndarray:
        return self.g[~np.isin(self.g, np.asarray(prev, dtype=np.intp))]

    def pair_candidates(self, i: int, used_rows: Sequence[int]) -> np.ndarray:
        t = self.profile.n2[i]
        if not len(used_rows):
            return t
        return t[~np.isin(t, np.asarray(used_rows, dtype=np.intp)).any(axis=1)]

    def triple_candidates(self, i: int, used_rows: Sequence[int]) -> np.ndarray:
        t = self.profile.n3[i]
        if not len(used_rows):
            return t
        return t[~np.isin(t, np.asarray(used_rows, dtype=np.intp)).any(axis=1)]

    def _graph(self, i: int, rows: Sequence[int], used_verts: Sequence[int]) -> np.ndarray:
        keep = self.vmat[list(rows)].all(axis=0)
        if len(used_verts):
            keep = keep.copy()
            keep[list(used_verts)] = False
        return self.adj[i] & keep[:, None] & keep[None, :]

    def _k12_size(self, a: np.ndarray) -> int:
        d = a.sum(axis=1).astype(np.int64)
        return int((d * (d - 1)).sum())

    def k12_candidates(self, i: int, rows: Sequence[int], used_verts: Sequence[int]) -> np.ndarray:
        a = self._graph(i, rows, used_verts)
        cube = a[:, :, None] & a[:, None, :] & self._offdiag[None, :, :]
        return np.argwhere(cube)

    def k12_count(self, i: int, rows: Sequence[int], used_verts: Sequence[int]) -> int:
        return self._k12_size(self._graph(i, rows, used_verts))

    def k12_allowed(self, i: int, rows: Sequence[int]) -> int:
        return self._k12_size(self._graph(i, rows, ()))

    def _sample_k12(self, i: int, rows: Sequence[int], used_verts: Sequence[int], rng) -> tuple[Triple, int]:
        """Uniform (u, v, w) from K12 of the restricted graph, plus the candidate count."""
        a = self._graph(i, rows, used_verts)
        d = a.sum(axis=1).astype(np.int64)
        weights = d * (d - 1)
        total = int(weights.sum())
        if total == 0:
            return (-1, -1, -1), 0
        r = int(rng.integers(total))
        u = int(np.searchsorted(np.cumsum(weights), r, side="right"))
        nb = np.flatnonzero(a[u])
        a_idx, b_idx = rng.choice(len(nb), size=2, replace=False)
        return (u, int(nb[a_idx]), int(nb[b_idx])), total

    # --- walking a layout
    def _memo(self, key: tuple, make):
        hit = self._cache.get(key)
        if hit is None:
            hit = self._cache[key] = make()
        return hit

    def walk(self, layout: Layout) -> list[StepRecord] | None:
        """Step records along ``layout``; None if some coordinate is not a candidate.

        Candidate sets are memoized by prefix, since walks over many layouts
        share most of their prefixes.
        """
        n = self.n
        if layout.n != n:
            raise ValueError("layout length does not match the process")
        bounds = self.guard_bounds()
        steps: list[StepRecord] = []
        i0 = [x - 1 for x in layout.i]
        for k in range(n + 1):
            prev = tuple(i0[:k])
            cand = self._memo(("slot", prev), lambda: frozenset(self.slot_candidates(prev).tolist()))
            if i0[k] not in cand:
                return None
            steps.append(self._rec("slot", len(self.g), k, len(cand), self.m, bounds[0], strict=True))
        used: list[int] = []
        for k in range(n):
            pair = tuple(x - 1 for x in layout.jpairs[k])
            key = ("pair", i0[k], tuple(used))
            cand = self._memo(key, lambda: frozenset(map(tuple, self.pair_candidates(i0[k], used).tolist())))
            if pair not in cand:
                return None
            steps.append(
                self._rec("pair", len(self.profile.n2[i0[k]]), pm_size(self.rows, len(used)), len(cand), self.rows**2, bounds[1])
            )
            used += list(pair)
        trip = tuple(x - 1 for x in layout.jtriple)
        cand = self._memo(("triple", i0[n], tuple(used)), lambda: frozenset(map(tuple, self.triple_candidates(i0[n], used).tolist())))
        if trip not in cand:
            return None
        steps.append(
            self._rec("triple", len(self.profile.n3[i0[n]]), tm_size(self.rows, len(used)), len(cand), self.rows**3, bounds[2])
        )
        vstar: list[int] = []
        for k in range(n + 1):
            rows = (
                [x - 1 for x in layout.jpairs[k]] if k < n else [x - 1 for x in layout.jtriple]
            )
            u, v, w = t = tuple(x - 1 for x in layout.uvw[k])

            def graph():
                a = self._graph(i0[k], rows, vstar)
                return a, self._k12_size(a)

            a, count = self._memo(("k12", i0[k], tuple(rows), frozenset(vstar)), graph)
            if not (v != w and a[u, v] and a[u, w]):
                return None
            steps.append(
                self._rec(
                    "gadget" if k < n else "planted",
                    self._memo(("k12-allowed", i0[k], tuple(rows)), lambda: self.k12_allowed(i0[k], rows)),
                    tm_size(self.verts, len(vstar)),
                    count,
                    self.verts**3,
                    bounds[3] if k < n else bounds[4],
                )
            )
            vstar += list(t)
        return steps

    @staticmethod
    def _rec(kind, allowed, blocked, cand, space, bound, strict=False) -> StepRecord:
        ok = cand > bound if strict else cand >= bound
        return StepRecord(kind, allowed, blocked, cand, space, bound, ok)

    def sample(self, rng: np.random.Generator) -> SampleResult:
        """Run the experiment once; raises :class:`StuckError` on an empty candidate set."""
        n = self.n
        bounds = self.guard_bounds()
        steps: list[StepRecord] = []
        islots: list[int] = []
        for k in range(n + 1):
            cand = self.slot_candidates(islots)
            steps.append(self._rec("slot", len(self.g), k, len(cand), self.m, bounds[0], strict=True))
            if not len(cand):
                raise StuckError(len(steps) - 1, "slot")
            islots.append(int(cand[rng.integers(len(cand))]))
        used: list[int] = []
        pairs: list[Pair] = []
        for k in range(n):
            cand = self.pair_candidates(islots[k], used)
            steps.append(
                self._rec("pair", len(self.profile.n2[islots[k]]), pm_size(self.rows, len(used)), len(cand), self.rows**2, bounds[1])
            )
            if not len(cand):
                raise StuckError(len(steps) - 1, "row pair")
            pair = tuple(int(x) for x in cand[rng.integers(len(cand))])
            pairs.append(pair)  # type: ignore[arg-type]
            used += list(pair)
        cand = self.triple_candidates(islots[n], used)
        steps.append(
            self._rec("triple", len(self.profile.n3[islots[n]]), tm_size(self.rows, len(used)), len(cand), self.rows**3, bounds[2])
        )
        if not len(cand):
            raise StuckError(len(steps) - 1, "row triple")
        triple = tuple(int(x) for x in cand[rng.integers(len(cand))])
        vstar: list[int] = []
        uvw: list[Triple] = []
        for k in range(n + 1):
            rows = list(pairs[k]) if k < n else list(triple)
            t, count = self._sample_k12(islots[k], rows, vstar, rng)
            steps.append(
                self._rec(
                    "gadget" if k < n else "planted",
                    self.k12_allowed(islots[k], rows),
                    tm_size(self.verts, len(vstar)),
                    count,
                    self.verts**3,
                    bounds[3] if k < n else bounds[4],
                )
            )
            if count == 0:
                raise StuckError(len(steps) - 1, "vertex triple")
            uvw.append(t)
            vstar += list(t)
        layout = Layout(
            tuple(i + 1 for i in islots),
            tuple((a + 1, b + 1) for a, b in pairs),
            tuple(x + 1 for x in triple),  # type: ignore[arg-type]
            tuple(tuple(x + 1 for x in t) for t in uvw),  # type: ignore[misc]
        )
        return SampleResult(layout, steps)


def _row_in(arr: np.ndarray, row: tuple) -> bool:
    if not len(arr):
        return False
    return bool((arr == np.asarray(row)).all(axis=1).any())


def sample_layout(profile: DensityProfile, n: int, rng: np.random.Generator) -> Layout:
    return LayoutProcess(profile, n).sample(rng).layout


# --------------------------------------------------------------------- masses
def layout_log_mass(layout: Layout, profile: DensityProfile, process: LayoutProcess | None = None) -> float:
    """Natural log of the probability that the experiment outputs ``layout``; -inf if impossible."""
    proc = process or LayoutProcess(profile, layout.n)
    steps = proc.walk(layout)
    if steps is None:
        return -math.inf
    return -sum(math.log(s.candidates) for s in steps)


def layout_mass(layout: Layout, profile: DensityProfile, process: LayoutProcess | None = None) -> float:
    return math.exp(layout_log_mass(layout, profile, process))


def layout_mass_exact(layout: Layout, profile: DensityProfile, process: LayoutProcess | None = None) -> Fraction:
    proc = process or LayoutProcess(profile, layout.n)
    steps = proc.walk(layout)
    if steps is None:
        return Fraction(0)
    den = 1
    for s in steps:
        den *= s.candidates
    return Fraction(1, den)


def enumerate_valid_layouts(profile: DensityProfile, n: int) -> Iterator[Layout]:
    """Every layout of length ``n`` meeting the nine conditions.

    Candidates come from the raw index ranges filtered by distinctness only,
    then :func:`validate_layout` decides; the sampler's candidate sets are
    not consulted.
    """
    m = profile.m
    rows = range(1, 2 * m + 2)
    verts = range(1, 3 * m + 1)
    for islots in permutations(range(1, m + 1), n + 1):
        for js in permutations(rows, 2 * n + 3):
            jpairs = tuple((js[2 * k], js[2 * k + 1]) for k in range(n))
            jt = (js[2 * n], js[2 * n + 1], js[2 * n + 2])
            for vs in permutations(verts, 3 * n + 3):
                uvw = tuple((vs[3 * k], vs[3 * k + 1], vs[3 * k + 2]) for k in range(n + 1))
                lay = Layout(islots, jpairs, jt, uvw)  # type: ignore[arg-type]
                if validate_layout(lay, profile):
                    yield lay


# ----------------------------------------------------------- guard certificate
@dataclass(frozen=True)
class GuardCertificate:
    ok: bool
    reason: str
    worst: tuple[int, ...]  # worst-case candidate lower bound for each of the five steps


def guard_certificate(profile: DensityProfile, n: int) -> GuardCertificate:
    """Certify that no run of the experiment gets stuck or breaks a step guard.

    For every step the candidate count is bounded below by the allowed set
    minus the most it can lose to blocking.  A blocked row or vertex removes
    at most the allowed tuples containing it.  So the loss is at most the sum
    of the largest per-element incidence counts, taken over as many elements
    as can be blocked at that step.  The certificate holds when each such
    bound is positive and meets the step's guard bound.
    """
    proc = LayoutProcess(profile, n)
    bounds = proc.guard_bounds()
    g = list(profile.g)
    worst = [0, 0, 0, 0, 0]
    worst[0] = len(g) - n
    if worst[0] < 1 or not worst[0] > bounds[0]:
        return GuardCertificate(False, "too few dense slots", tuple(worst))
    rows = proc.rows

    def top_loss(inc: np.ndarray, s: int) -> int:
        if s <= 0:
            return 0
        return int(np.sort(inc)[::-1][:s].sum())

    w2 = w3 = w4 = w5 = None
    for i in g:
        if n >= 1:
            t2 = profile.n2[i]
            inc2 = np.bincount(t2.ravel(), minlength=rows)
            lb = len(t2) - top_loss(inc2, 2 * (n - 1))
            w2 = lb if w2 is None else min(w2, lb)
        t3 = profile.n3[i]
        inc3 = np.bincount(t3.ravel(), minlength=rows)
        lb = len(t3) - top_loss(inc3, 2 * n)
        w3 = lb if w3 is None else min(w3, lb)
        graphs = [("gadget", tuple(r)) for r in profile.n2[i].tolist()] if n >= 1 else []
        graphs += [("planted", tuple(r)) for r in t3.tolist()]
        for kind, rws in graphs:
            a = proc._graph(i, rws, ())
            d = a.sum(axis=1).astype(np.int64)
            total = int((d * (d - 1)).sum())
            inc = d * (d - 1) + 2 * (a.astype(np.int64) @ (d - 1))
            if kind == "gadget":
                lb = total - top_loss(inc, 3 * (n - 1))
                w4 = lb if w4 is None else min(w4, lb)
            else:
                lb = total - top_loss(inc, 3 * n)
                w5 = lb if w5 is None else min(w5, lb)
    worst[1] = w2 if w2 is not None else 1 << 30
    worst[2] = w3 if w3 is not None else 0
    worst[3] = w4 if w4 is not None else 1 << 30
    worst[4] = w5 if w5 is not None else 0
    names = ("slot", "row pair", "row triple", "gadget triple", "planted triple")
    for k in range(1, 5):
        if worst[k] < 1 or worst[k] < bounds[k]:
            return GuardCertificate(False, f"{names[k]} step not certified", tuple(worst))
    return GuardCertificate(True, "certified", tuple(worst))


def max_guarded_n(profile: DensityProfile, limit: int | None = None) -> int:
    """Largest n whose guard certificate holds; -1 if even n = 0 fails."""
    best = -1
    top = profile.m - 1 if limit is None else limit
    for n in range(top + 1):
        if guard_certificate(profile, n).ok:
            best = n
        else:
            break
    return best


# --------------------------------------------------------------- assignments
def planted_edge(layout: Layout) -> tuple[int, int]:
    u, _, w = layout.uvw[-1]
    return (min(u, w), max(u, w))


def hamming_distance(a: Layout, b: Layout) -> int:
    ca, cb = a.coordinates(), b.coordinates()
    if len(ca) != len(cb):
        raise ValueError("layouts of different lengths")
    return sum(1 for x, y in zip(ca, cb) if x != y)


def completion(layout: Layout, m: int) -> tuple[dict[int, tuple[int, int]], dict[int, int]]:
    """Deterministic filling of the rows outside the layout.

    Unused slots, in increasing order, take the lexicographically smallest
    disjoint pair of still-free vertices outside the layout.  Unused vertex
    rows, in increasing order, take the smallest free vertex whose partner in
    the completion matching has not been taken, so no completion edge gets
    both endpoints.
    """
    used_i = set(layout.i)
    used_j = {x for t in layout.jpairs for x in t} | set(layout.jtriple)
    used_v = {x for t in layout.uvw for x in t}
    free = [u for u in range(1, 3 * m + 1) if u not in used_v]
    slots = [i for i in range(1, m + 1) if i not in used_i]
    rows = [j for j in range(1, 2 * m + 2) if j not in used_j]
    matching: dict[int, tuple[int, int]] = {}
    partner: dict[int, int] = {}
    for k, i in enumerate(slots):
        a, b = free[2 * k], free[2 * k + 1]
        matching[i] = (a, b)
        partner[a], partner[b] = b, a
    chosen: dict[int, int] = {}
    taken: set[int] = set()
    cursor = 0
    for j in rows:
        while free[cursor] in taken or partner.get(free[cursor]) in taken:
            cursor += 1
        chosen[j] = free[cursor]
        taken.add(free[cursor])
        cursor += 1
    return matching, chosen


def build_assignment(layout: Layout, xs: Sequence[int], ys: Sequence[int], m: int) -> MAssignment:
    n = layout.n
    if len(xs) != n or len(ys) != n:
        raise ValueError("disjointness instance length does not match the layout")
    ones: set[VarId] = set()
    for k in range(n):
        i = layout.i[k]
        u, v, w = layout.uvw[k]
        j1, j2 = layout.jpairs[k]
        ones.add(edge_var(i, u, v) if xs[k] else edge_var(i, u, w))
        ones.add(vertex_var(j1, v))
        ones.add(vertex_var(j2, u) if ys[k] else vertex_var(j2, w))
    u, v, w = layout.uvw[n]
    ones.add(edge_var(layout.i[n], u, w))
    j1, j2, j3 = layout.jtriple
    ones |= {vertex_var(j1, u), vertex_var(j2, v), vertex_var(j3, w)}
    matching, chosen = completion(layout, m)
    for i, (a, b) in matching.items():
        ones.add(edge_var(i, a, b))
    for j, u in chosen.items():
        ones.add(vertex_var(j, u))
    return MAssignment(m, frozenset(ones))


# ------------------------------------------------------------------ switching
def switch_edges(layout: Layout, l: int) -> list[tuple[int, int]]:
    n = layout.n
    ul = layout.uvw[l - 1][0]
    un = layout.uvw[n][0]
    right = (layout.uvw[n][1], layout.uvw[l - 1][1], layout.uvw[n][2], layout.uvw[l - 1][2])
    return [(min(a, b), max(a, b)) for a in (un, ul) for b in right]


def is_switchable(layout: Layout, l: int, profile: DensityProfile) -> bool:
    n = layout.n
    if not 1 <= l <= n:
        return False
    p = profile.partition
    il, ip = layout.i[l - 1], layout.i[n]
    jl1, jl2 = layout.jpairs[l - 1]
    if not profile.in_n3(il, (layout.jtriple[1], jl1, jl2)):
        return False
    vp = p.vmat[[j - 1 for j in layout.jtriple]].all(axis=0)
    vl = p.vmat[[jl1 - 1, jl2 - 1]].all(axis=0)
    adj = p.adjacency
    for a, b in switch_edges(layout, l):
        if a == b:
            return False
        x, y = a - 1, b - 1
        if not (adj[ip - 1, x, y] and vp[x] and vp[y]):
            return False
        if not (adj[il - 1, x, y] and vl[x] and vl[y]):
            return False
    return True


def involution(layout: Layout, l: int, profile: DensityProfile | None = None) -> Layout:
    """Swap gadget ``l`` with the planted gadget so the assignment is unchanged
    whenever X_l = Y_l = 1 but the planted edge moves to {u_l, v_l}."""
    n = layout.n
    if profile is not None and not is_switchable(layout, l, profile):
        raise NotSwitchable(f"layout is not {l}-switchable")
    if not 1 <= l <= n:
        raise NotSwitchable(f"gadget index {l} out of range 1..{n}")
    k = l - 1
    i = list(layout.i)
    i[k], i[n] = layout.i[n], layout.i[k]
    jl1, jl2 = layout.jpairs[k]
    jp1, jp2, jp3 = layout.jtriple
    jpairs = list(layout.jpairs)
    jpairs[k] = (jp3, jp1)
    jtriple = (jl2, jp2, jl1)
    ul, vl, wl = layout.uvw[k]
    up, vp, wp = layout.uvw[n]
    uvw = list(layout.uvw)
    uvw[k] = (up, wp, wl)
    uvw[n] = (ul, vp, vl)
    return Layout(tuple(i), tuple(jpairs), jtriple, tuple(uvw))


# ------------------------------------------------------- process-level bounds
@dataclass(frozen=True)
class ProcessBounds:
    blockage: float  # max |F| / |S| over observed steps
    covering: float  # min |S \ F| / |X| over observed steps
    blockage_claim: float
    covering_claim: float


def observed_bounds(steps_list: Sequence[Sequence[StepRecord]], profile: DensityProfile, n: int) -> ProcessBounds:
    """Blockage and covering ratios seen along sampled runs, next to the claimed values."""
    beta = 0.0
    kappa = 1.0
    for steps in steps_list:
        for s in steps:
            if s.allowed:
                beta = max(beta, s.blocked / s.allowed)
            kappa = min(kappa, s.candidates / s.space)
    d = profile.delta_float
    gamma = (n + 1) / profile.m
    claim_b = 30 * gamma / (d * d) if d > 0 else math.inf
    claim_k = min(d * d / 10 - 3 * gamma, d / 3 - 3 * gamma, d / 12 - gamma)
    return ProcessBounds(beta, kappa, claim_b, claim_k)
