"""Dependent-domain processes with blocking, on small product spaces.

A process over ``X_1 x ... x X_t`` (each ``X_i = range(size_i)``) draws
``u_i`` uniformly from ``S_i(prefix) - F_i(prefix)``.  Everything here is
exact: the distribution is computed by enumerating the product, bounds are
``Fraction`` extremes over *all* prefixes, and the two comparison
inequalities are checked pair by pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Callable, Iterator, Mapping, Sequence

import numpy as np

Point = tuple[int, ...]
SetMap = Callable[[Point], frozenset[int]]


class ProcessError(ValueError):
    pass


@dataclass
class DdwbProcess:
    """``domain(prefix)`` and ``blocked(prefix)`` give S_i and F_i for ``i = len(prefix) + 1``."""

    sizes: tuple[int, ...]
    domain: SetMap
    blocked: SetMap
    _dist: dict[Point, Fraction] | None = field(default=None, repr=False)

    @property
    def t(self) -> int:
        return len(self.sizes)

    def prefixes(self, i: int) -> Iterator[Point]:
        """All points of X_1 x ... x X_{i-1} (1-based ``i``)."""
        return product(*(range(s) for s in self.sizes[: i - 1]))

    def points(self) -> Iterator[Point]:
        return product(*(range(s) for s in self.sizes))

    def choices(self, prefix: Point) -> frozenset[int]:
        return self.domain(prefix) - self.blocked(prefix)

    def validate(self) -> None:
        for i in range(1, self.t + 1):
            for pre in self.prefixes(i):
                s = self.domain(pre)
                if not s <= frozenset(range(self.sizes[i - 1])):
                    raise ProcessError(f"S_{i}{pre} leaves X_{i}")
                if not self.choices(pre):
                    raise ProcessError(f"S_{i}{pre} minus F_{i}{pre} is empty")

    def blockage_bound(self) -> Fraction:
        """Smallest beta with |F_i| <= beta |S_i| at every prefix."""
        beta = Fraction(0)
        for i in range(1, self.t + 1):
            for pre in self.prefixes(i):
                f, s = len(self.blocked(pre)), len(self.domain(pre))
                if f and not s:
                    raise ProcessError(f"F_{i}{pre} is non-empty while S_{i}{pre} is empty")
                if s:
                    beta = max(beta, Fraction(f, s))
        return beta

    def covering_bound(self) -> Fraction:
        """Largest kappa with |S_i - F_i| >= kappa |X_i| at every prefix."""
        kappa = Fraction(1)
        for i in range(1, self.t + 1):
            for pre in self.prefixes(i):
                kappa = min(kappa, Fraction(len(self.choices(pre)), self.sizes[i - 1]))
        return kappa

    def distribution(self) -> dict[Point, Fraction]:
        """Exact probability of every point with positive mass."""
        if self._dist is None:
            out: dict[Point, Fraction] = {}

            def grow(pre: Point, p: Fraction) -> None:
                if len(pre) == self.t:
                    out[pre] = p
                    return
                ch = self.choices(pre)
                q = p / len(ch)
                for a in sorted(ch):
                    grow(pre + (a,), q)

            grow((), Fraction(1))
            self._dist = out
        return self._dist

    def mass(self, point: Point) -> Fraction:
        return self.distribution().get(tuple(point), Fraction(0))

    def sample(self, rng: np.random.Generator) -> Point:
        pre: Point = ()
        for _ in range(self.t):
            ch = sorted(self.choices(pre))
            pre += (ch[int(rng.integers(len(ch)))],)
        return pre


def uniform_process(sizes: Sequence[int]) -> DdwbProcess:
    """S_i = X_i and F_i empty: the uniform distribution."""
    sizes = tuple(sizes)
    full = [frozenset(range(s)) for s in sizes]
    return DdwbProcess(sizes, lambda pre: full[len(pre)], lambda pre: frozenset())


def table_process(sizes: Sequence[int], domain: Mapping[Point, frozenset[int]], blocked: Mapping[Point, frozenset[int]]) -> DdwbProcess:
    """Process defined by explicit tables keyed on the prefix; missing F entries are empty."""
    empty: frozenset[int] = frozenset()
    return DdwbProcess(tuple(sizes), lambda pre: domain[pre], lambda pre: blocked.get(pre, empty))


# ---------------------------------------------------------------- test functions
@dataclass(frozen=True)
class LocalFunction:
    """``f`` with values in [0, 1] that reads only the coordinates ``coords`` (0-based)."""

    coords: tuple[int, ...]
    table: Mapping[tuple[int, ...], Fraction]

    def __call__(self, point: Point) -> Fraction:
        return self.table.get(tuple(point[c] for c in self.coords), Fraction(0))

    @property
    def k(self) -> int:
        return len(self.coords)


@dataclass
class RandomInstance:
    process: DdwbProcess
    f: LocalFunction
    cores: tuple[frozenset[int], ...]


def random_instance(rng: np.random.Generator, max_t: int = 4, max_size: int = 6) -> RandomInstance:
    """A random table process plus a local function supported inside every domain.

    Each coordinate gets a fixed non-empty core contained in every S_i, and
    the function is positive only on points whose read coordinates all lie
    in their cores, so its support condition holds by construction (the
    suite still re-checks it).
    """
    t = int(rng.integers(1, max_t + 1))
    sizes = tuple(int(rng.integers(2, max_size + 1)) for _ in range(t))
    cores = []
    for s in sizes:
        c = frozenset(int(x) for x in np.flatnonzero(rng.random(s) < 0.6))
        cores.append(c or frozenset({int(rng.integers(s))}))
    domain: dict[Point, frozenset[int]] = {}
    blocked: dict[Point, frozenset[int]] = {}
    p_block = float(rng.uniform(0.0, 0.5))
    for i in range(t):
        for pre in product(*(range(s) for s in sizes[:i])):
            extra = frozenset(int(x) for x in np.flatnonzero(rng.random(sizes[i]) < 0.5))
            s_set = cores[i] | extra
            f_set = frozenset(int(x) for x in np.flatnonzero(rng.random(sizes[i]) < p_block))
            if not s_set - f_set:
                # keep one element of S unblocked
                keep = sorted(s_set)[int(rng.integers(len(s_set)))]
                f_set = f_set - {keep}
            domain[pre] = s_set
            blocked[pre] = f_set
    k = int(rng.integers(1, t + 1))
    coords = tuple(sorted(int(c) for c in rng.choice(t, size=k, replace=False)))
    table: dict[tuple[int, ...], Fraction] = {}
    for key in product(*(sorted(cores[c]) for c in coords)):
        table[key] = Fraction(int(rng.integers(0, 9)), 8)
    return RandomInstance(table_process(sizes, domain, blocked), LocalFunction(coords, table), tuple(cores))


# ---------------------------------------------------------------- the two checks
@dataclass(frozen=True)
class ExpectationReport:
    e_pi: Fraction
    e_uniform: Fraction
    k: int
    beta: Fraction
    support_ok: bool
    ok: bool

    @property
    def slack(self) -> Fraction:
        return self.e_pi - (self.e_uniform - self.k * self.beta)


def check_loss_of_expectation(proc: DdwbProcess, f: LocalFunction) -> ExpectationReport:
    """Exact test of E_pi[f] >= E_U[f] - k beta.

    The support premise (f > 0 forces each read coordinate into its S_i)
    is verified over the whole product; ``ok`` needs both.
    """
    dist = proc.distribution()
    e_pi = sum((p * f(pt) for pt, p in dist.items()), Fraction(0))
    total = Fraction(0)
    support_ok = True
    for pt in proc.points():
        v = f(pt)
        total += v
        if v > 0 and support_ok:
            support_ok = all(pt[c] in proc.domain(pt[:c]) for c in f.coords)
    e_u = total / math.prod(proc.sizes)
    beta = proc.blockage_bound()
    return ExpectationReport(e_pi, e_u, f.k, beta, support_ok, support_ok and e_pi >= e_u - f.k * beta)


@dataclass(frozen=True)
class RatioReport:
    pairs: int
    kappa: Fraction
    worst_margin: float
    ok: bool


def _coordinate_tables(proc: DdwbProcess, pts: list[Point]):
    """Per point and coordinate: an id of S_i(prefix), the F_i(prefix) bitmask, and |S_i - F_i|."""
    n, t = len(pts), proc.t
    sid = np.zeros((n, t), dtype=np.int64)
    fmask = np.zeros((n, t), dtype=np.uint64)
    ids: dict[frozenset[int], int] = {}
    for r, pt in enumerate(pts):
        for i in range(t):
            pre = pt[:i]
            sid[r, i] = ids.setdefault(proc.domain(pre), len(ids))
            fmask[r, i] = sum(1 << x for x in proc.blocked(pre))
    return sid, fmask


def check_ratio_bound(proc: DdwbProcess, tol: float = 1e-12) -> RatioReport:
    """Check pi(v) <= kappa^-d e^(c/kappa) pi(u) for every ordered pair of positive-mass points.

    For a pair, ``I_0`` is the set of coordinates where the two S_i
    differ (d = |I_0|), and ``c`` is the least value meeting the F-difference
    premise: t times the largest |F_i(u) xor F_i(v)| / |X_i| outside ``I_0``.
    The comparison is done in log space; equality is accepted because
    u = v gives equality.
    """
    dist = proc.distribution()
    pts = sorted(dist)
    kappa = proc.covering_bound()
    if not pts:
        return RatioReport(0, kappa, math.inf, True)
    if max(proc.sizes) > 63:
        raise ProcessError("coordinate spaces above 63 elements are not supported by the bitmask check")
    sid, fmask = _coordinate_tables(proc, pts)
    logp = np.array([math.log(dist[p]) for p in pts])
    xs = np.array(proc.sizes, dtype=float)
    lk = math.log(float(kappa))
    worst = math.inf
    t = proc.t
    for r in range(len(pts)):
        differ = sid != sid[r]  # (n, t): S_i differs between pts[r] and each v
        d = differ.sum(axis=1)
        sym = np.bitwise_count(fmask ^ fmask[r]).astype(float) / xs
        sym[differ] = 0.0
        c = t * sym.max(axis=1)
        rhs = -d * lk + c / float(kappa) + logp[r]
        margin = float((rhs - logp).min())
        worst = min(worst, margin)
    return RatioReport(len(pts) ** 2, kappa, worst, worst >= -tol)


@dataclass(frozen=True)
class SuiteReport:
    expectation: ExpectationReport
    ratio: RatioReport

    @property
    def ok(self) -> bool:
        return self.expectation.ok and self.ratio.ok


def ddwb_check_suite(proc: DdwbProcess, f: LocalFunction) -> SuiteReport:
    proc.validate()
    return SuiteReport(check_loss_of_expectation(proc, f), check_ratio_bound(proc))
