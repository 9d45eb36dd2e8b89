"""Two-party protocols for finding a bad edge of a non-degenerate assignment.

:class:`ExtractedProtocol` turns a tree-like OBDD refutation of Match_m into
a protocol.  Both players follow the proof from its FALSE root down to an
axiom, keeping a line that the joint assignment falsifies.  Projection and
subsumption steps need no communication: a false projection is false at
both values of the removed variable, and a false consequence has a false
antecedent.  At a conjunction the players evaluate the left antecedent
together.  The player holding the order's prefix walks the OBDD through
its own levels and broadcasts the index of the node where the walk leaves
its variables; the other player finishes the walk and answers with one
bit.  The axiom reached is a falsified clause, which for a non-degenerate
assignment names a bad edge.

:class:`FullExchangeProtocol` is the brute-force reference: player II sends
every one of its bits and player I answers with the lexicographically first
bad edge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from ..cnf import Cnf, MAssignment, find_bad_edges, match_clause_type, match_roles
from ..proof import Axiom, Conjunction, Derivation, Projection, Subsumption, proof_size
from .partition import SIDE_I, SIDE_II, Partition, split_by_order

Edge = tuple[int, int]


class NotSplitCompatible(ValueError):
    """The order interleaves the two players' variables."""


class LocalityError(RuntimeError):
    """A player tried to read a variable it does not hold."""


@dataclass(frozen=True)
class Message:
    speaker: str
    line: int
    payload: int
    bits: int


@dataclass
class ProtocolRun:
    edge: Edge | None
    clause: int | None
    transcript: list[Message] = field(default_factory=list)
    path: list[int] = field(default_factory=list)

    @property
    def bits(self) -> int:
        return sum(msg.bits for msg in self.transcript)


class SearchProtocol:
    """Interface shared by every bad-edge protocol."""

    partition: Partition

    def run(self, a: MAssignment) -> ProtocolRun:
        raise NotImplementedError


def _values(cnf: Cnf, a: MAssignment) -> dict[int, int]:
    return {v: a.value(cnf.role(v)) for v in range(1, cnf.num_vars + 1)}


def _other(side: str) -> str:
    return SIDE_II if side == SIDE_I else SIDE_I


class ExtractedProtocol(SearchProtocol):
    """Bad-edge search protocol read off a tree-like refutation of Match_m."""

    def __init__(self, cnf: Cnf, deriv: Derivation, partition: Partition):
        if cnf.family != "match":
            raise ValueError("protocol extraction expects a Match_m formula")
        self.cnf = cnf
        self.deriv = deriv
        self.partition = partition
        if not deriv.lines:
            raise ValueError("empty derivation")
        roles = [cnf.role(v) for v in deriv.order.perm]
        sides = [partition.side(r) for r in roles]
        cuts = sum(1 for s, t in zip(sides, sides[1:]) if s != t)
        if cuts > 1:
            raise NotSplitCompatible("the order interleaves player I and player II variables")
        self.prefix_owner = sides[0]
        self.owned = {side: frozenset(v for v, s in zip(deriv.order.perm, sides) if s == side) for side in (SIDE_I, SIDE_II)}
        self.nodes: list[tuple[tuple[int, int, int], ...]] = []
        self.consts: list[int] = []
        for k in range(len(deriv.lines)):
            ser = deriv.serialized(k)
            self.nodes.append(ser.nodes)
            self.consts.append(ser.const)
        if self.nodes[-1] or self.consts[-1] != 0:
            raise ValueError("the last line must be FALSE")
        self.proof_size = proof_size(deriv)
        self.depth = deriv.depth()

    def cost_bound(self) -> int:
        """depth x (ceil(log2 S) + 2) with S the proof size."""
        return self.depth * (math.ceil(math.log2(max(self.proof_size, 2))) + 2)

    # a line's OBDD is coded as 0/1 for the constants and k + 2 for node k
    def _root(self, k: int) -> int:
        nodes = self.nodes[k]
        return len(nodes) + 1 if nodes else self.consts[k]

    def _walk(self, k: int, code: int, values: Mapping[int, int], own: frozenset[int]) -> int:
        """Follow the OBDD of line ``k`` from ``code`` while the variables are in ``own``."""
        nodes = self.nodes[k]
        while code >= 2:
            var, lo, hi = nodes[code - 2]
            if var not in own:
                return code
            code = hi if values[var] else lo
        return code

    def first_message(self, k: int, values: Mapping[int, int]) -> Message:
        """Prefix owner's broadcast for evaluating line ``k``."""
        code = self._walk(k, self._root(k), values, self.owned[self.prefix_owner])
        bits = math.ceil(math.log2(len(self.nodes[k]) + 2))
        return Message(self.prefix_owner, k, code, bits)

    def second_message(self, k: int, code: int, values: Mapping[int, int]) -> Message:
        """The other player's one-bit value of line ``k`` from the broadcast node."""
        speaker = _other(self.prefix_owner)
        value = self._walk(k, code, values, self.owned[speaker])
        if value >= 2:
            raise LocalityError(f"line {k}: evaluation needs a variable the answering player does not hold")
        return Message(speaker, k, value, 1)

    def run(self, a: MAssignment) -> ProtocolRun:
        values = _values(self.cnf, a)
        out = ProtocolRun(None, None)
        k = len(self.deriv.lines) - 1
        while True:
            out.path.append(k)
            rule = self.deriv.lines[k].rule
            if isinstance(rule, Axiom):
                out.clause = rule.clause
                clause = self.cnf.clauses[rule.clause]
                if match_clause_type(self.cnf, clause) == 5:
                    x = next(self.cnf.role(abs(l)) for l in clause if self.cnf.role(abs(l)).role == "x")
                    out.edge = (x.idx[1], x.idx[2])
                return out
            if isinstance(rule, (Projection, Subsumption)):
                k = rule.ante
                continue
            assert isinstance(rule, Conjunction)
            left = rule.left
            msg = self.first_message(left, values)
            out.transcript.append(msg)
            value = msg.payload
            if value >= 2:
                reply = self.second_message(left, value, values)
                out.transcript.append(reply)
                value = reply.payload
            k = left if value == 0 else rule.right

    def audit_locality(self, a: MAssignment, rng: np.random.Generator, trials: int = 4) -> bool:
        """Replay every message with the silent player's variables re-randomized.

        Message functions see the whole assignment and are trusted only to
        stay inside their speaker's variables.  Identical replays show that
        each message depends on the speaker's bits and the transcript alone.
        """
        run = self.run(a)
        values = _values(self.cnf, a)
        for _ in range(trials):
            prev: Message | None = None
            for msg in run.transcript:
                silent = sorted(self.owned[_other(msg.speaker)])
                mixed = dict(values)
                mixed.update(zip(silent, (int(b) for b in rng.integers(0, 2, len(silent)))))
                if msg.speaker == self.prefix_owner:
                    again = self.first_message(msg.line, mixed)
                else:
                    assert prev is not None
                    again = self.second_message(msg.line, prev.payload, mixed)
                if again != msg:
                    return False
                prev = msg
        return True


def extract_search_protocol(cnf: Cnf, deriv: Derivation, partition: Partition | None = None) -> ExtractedProtocol:
    """Protocol for the given refutation; the partition defaults to the order's own split."""
    if partition is None:
        m = cnf.m
        partition = split_by_order((cnf.role(v) for v in deriv.order.perm), m)
    return ExtractedProtocol(cnf, deriv, partition)


class FullExchangeProtocol(SearchProtocol):
    """Player II sends all of its bits; player I returns the lexicographically first bad edge."""

    def __init__(self, partition: Partition):
        self.partition = partition
        self._roles_ii = [v for v in match_roles(partition.m) if partition.side(v) == SIDE_II]

    def run(self, a: MAssignment) -> ProtocolRun:
        payload = 0
        for v in self._roles_ii:
            payload = (payload << 1) | a.value(v)
        msg = Message(SIDE_II, -1, payload, len(self._roles_ii))
        bad = sorted(find_bad_edges(a))
        return ProtocolRun(bad[0] if bad else None, None, [msg], [])

