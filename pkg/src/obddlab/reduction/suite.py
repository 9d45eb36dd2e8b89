"""Batch runner for the inequality checkers on random instances.

Each check returns one summary row: how many instances were tried, how
many passed, and the smallest slack seen (negative slack means a failure).
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .ddwb import check_loss_of_expectation, check_ratio_bound, random_instance
from .layout import LayoutProcess, StuckError, max_guarded_n, validate_layout
from .lemmas import check_convexity, check_supersaturation, random_graph
from .partition import density_profile, full_partition, random_partition


def _row(name: str, margins: list[float]) -> dict:
    return {
        "check": name,
        "instances": len(margins),
        "passed": sum(1 for x in margins if x >= 0),
        "worst_margin": min(margins) if margins else math.nan,
    }


def _convexity(rng: np.random.Generator, count: int) -> list[float]:
    out = []
    for _ in range(count):
        size = int(rng.integers(1, 13))
        sets = [np.flatnonzero(rng.random(size) < rng.random()).tolist() for _ in range(int(rng.integers(1, 8)))]
        r = check_convexity(range(size), sets, int(rng.integers(0, 5)))
        out.append(float(r.lhs - r.bound))
    return out


def _supersaturation(rng: np.random.Generator, count: int) -> list[float]:
    out = []
    for _ in range(count):
        r = check_supersaturation(random_graph(int(rng.integers(2, 21)), float(rng.random()), rng))
        out.append(float(min(r.p3 - r.bound3, r.p6 - r.bound6)))
    return out


def _ddwb(rng: np.random.Generator, count: int) -> tuple[list[float], list[float]]:
    loss, ratio = [], []
    for _ in range(count):
        inst = random_instance(rng)
        inst.process.validate()
        e = check_loss_of_expectation(inst.process, inst.f)
        loss.append(float(e.slack) if e.support_ok else -math.inf)
        ratio.append(check_ratio_bound(inst.process).worst_margin)
    return loss, ratio


def _dense_slots(rng: np.random.Generator, count: int, ms: range) -> list[float]:
    """|G| - (delta/12) m on random partitions that meet delta * m >= 3."""
    out = []
    for m in ms:
        done = tries = 0
        while done < count and tries < 50 * count:
            tries += 1
            prof = density_profile(random_partition(m, rng))
            if prof.delta * m < 3:
                continue
            out.append(float(len(prof.g) - prof.delta * m / 12))
            done += 1
    return out


def _layout_guards(rng: np.random.Generator, count: int, ms: range) -> list[float]:
    """Smallest step slack (candidates minus guard bound) per sampled layout.

    A stuck run or an invalid layout counts as a failure.
    """
    out = []
    for m in ms:
        prof = density_profile(full_partition(m))
        n = max_guarded_n(prof)
        if n < 0:
            continue
        proc = LayoutProcess(prof, n)
        for _ in range(count):
            try:
                res = proc.sample(rng)
            except StuckError:
                out.append(-math.inf)
                continue
            if not validate_layout(res.layout, prof):
                out.append(-math.inf)
                continue
            out.append(min((s.candidates - s.guard_bound for s in res.steps), default=math.inf))
    return out


def run_lemma_suite(seed: int, count: int, scale: str = "small") -> list[dict]:
    """Rows for every checker; ``scale="full"`` widens the partition sizes."""
    rng = np.random.default_rng(seed)
    loss, ratio = _ddwb(rng, count)
    big = scale == "full"
    checks: list[tuple[str, Callable[[], list[float]]]] = [
        ("convexity", lambda: _convexity(rng, count)),
        ("supersaturation", lambda: _supersaturation(rng, count)),
        ("ddwb-loss-of-expectation", lambda: loss),
        ("ddwb-ratio-bound", lambda: ratio),
        ("dense-slots", lambda: _dense_slots(rng, max(1, count // 10), range(2, 7 if big else 5))),
        ("layout-guards", lambda: _layout_guards(rng, count, range(6, 13 if big else 7))),
    ]
    return [_row(name, fn()) for name, fn in checks]
