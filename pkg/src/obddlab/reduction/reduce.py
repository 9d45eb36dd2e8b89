"""Set disjointness solved through a bad-edge search protocol.

Each repetition samples a layout, lets both players build their halves of
the planted assignment from their own inputs, runs the search protocol and
votes 0 when the returned edge is the planted one.  The answer is 0 only if
every repetition votes 0, so disjoint inputs are never misjudged.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .layout import LayoutProcess, build_assignment, planted_edge
from .partition import DensityProfile
from .protocol import SearchProtocol


@dataclass(frozen=True)
class SetDisjInstance:
    x: tuple[int, ...]
    y: tuple[int, ...]

    def __post_init__(self):
        if len(self.x) != len(self.y):
            raise ValueError("X and Y must have the same length")
        if any(b not in (0, 1) for b in self.x + self.y):
            raise ValueError("X and Y are bit vectors")

    @property
    def n(self) -> int:
        return len(self.x)

    @property
    def intersecting(self) -> bool:
        return any(a and b for a, b in zip(self.x, self.y))


def random_disjoint(n: int, rng: np.random.Generator) -> SetDisjInstance:
    x = rng.integers(0, 2, n)
    y = rng.integers(0, 2, n) & (1 - x)
    return SetDisjInstance(tuple(int(b) for b in x), tuple(int(b) for b in y))


def random_intersecting(n: int, rng: np.random.Generator) -> SetDisjInstance:
    if n < 1:
        raise ValueError("an intersecting instance needs n >= 1")
    x = rng.integers(0, 2, n)
    y = rng.integers(0, 2, n)
    k = int(rng.integers(n))
    x[k] = y[k] = 1
    return SetDisjInstance(tuple(int(b) for b in x), tuple(int(b) for b in y))


@dataclass
class ReductionOutcome:
    answer: int
    votes: list[int] = field(default_factory=list)
    bits: int = 0


def run_reduction(
    profile: DensityProfile,
    protocol: SearchProtocol,
    inst: SetDisjInstance,
    rng: np.random.Generator,
    reps: int = 1,
    process: LayoutProcess | None = None,
) -> ReductionOutcome:
    """1 means "the sets intersect"; a sampler stuck event propagates as StuckError."""
    if reps < 1:
        raise ValueError("reps must be positive")
    m = profile.m
    proc = process if process is not None else LayoutProcess(profile, inst.n)
    if proc.n != inst.n:
        raise ValueError("layout process length does not match the instance")
    out = ReductionOutcome(0)
    for _ in range(reps):
        layout = proc.sample(rng).layout
        a = build_assignment(layout, inst.x, inst.y, m)
        run = protocol.run(a)
        out.bits += run.bits
        vote = 0 if run.edge == planted_edge(layout) else 1
        out.votes.append(vote)
    out.answer = 1 if any(out.votes) else 0
    return out
