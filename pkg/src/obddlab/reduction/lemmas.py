"""Exact checkers for the averaging inequalities used by the density arguments."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class ConvexityResult:
    lhs: Fraction
    bound: Fraction
    ok: bool


def check_convexity(ground: Iterable, sets: Sequence[Iterable], k: int) -> ConvexityResult:
    """Average size of a k-fold intersection of the sets, against alpha^k |X|.

    The average over index tuples in [n]^k equals the sum over x of
    (deg(x)/n)^k, where deg(x) counts the sets containing x; that identity
    keeps the check linear in |X| instead of exponential in k.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    xs = set(ground)
    ys = [set(y) for y in sets]
    if not ys:
        raise ValueError("need at least one set")
    if any(not y <= xs for y in ys):
        raise ValueError("every set must lie inside the ground set")
    n = len(ys)
    deg = {x: sum(1 for y in ys if x in y) for x in xs}
    lhs = sum((Fraction(d, n) ** k for d in deg.values()), Fraction(0))
    alpha = Fraction(sum(len(y) for y in ys), n * len(xs)) if xs else Fraction(0)
    bound = alpha**k * len(xs)
    return ConvexityResult(lhs, bound, lhs >= bound)


@dataclass(frozen=True)
class SupersaturationResult:
    alpha: Fraction
    p3: Fraction
    p6: Fraction
    bound3: Fraction
    bound6: Fraction
    ok: bool


def check_supersaturation(adjacency: np.ndarray) -> SupersaturationResult:
    """Star and biclique densities of a simple graph against their lower bounds.

    ``p3`` is the probability that a uniform (u1, u2, u3) has u1 adjacent to
    u2 and u3; ``p6`` that a uniform 6-tuple has both u1 and u2 adjacent to
    each of u3..u6.  Tuples may repeat vertices.  ``alpha`` is the exact
    edge density |E| / C(N, 2).
    """
    a = np.asarray(adjacency, dtype=bool)
    n = a.shape[0]
    if a.shape != (n, n) or n < 2:
        raise ValueError("need a square adjacency matrix with at least two vertices")
    if not (a == a.T).all() or a.diagonal().any():
        raise ValueError("graph must be undirected without loops")
    ai = a.astype(object)
    deg = [int(d) for d in a.sum(axis=1)]
    codeg = (ai @ ai)  # codeg[u, u] = deg(u)
    edges = sum(deg) // 2
    alpha = Fraction(edges, comb(n, 2))
    p3 = Fraction(sum(d * d for d in deg), n**3)
    p6 = Fraction(sum(int(c) ** 4 for c in codeg.flat), n**6)
    b3 = alpha**2 - Fraction(5, n)
    b6 = alpha**8 - Fraction(23, n)
    return SupersaturationResult(alpha, p3, p6, b3, b6, p3 >= b3 and p6 >= b6)


def random_graph(n: int, p: float, rng: np.random.Generator) -> np.ndarray:
    upper = np.triu(rng.random((n, n)) < p, k=1)
    return upper | upper.T
