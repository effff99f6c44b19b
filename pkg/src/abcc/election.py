"""Approval profiles, ABC scoring rules and exact committee scores."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple, Union

from abcc.errors import InputFormatError, InvalidElection, InvalidRule, UnknownCandidate

logger = logging.getLogger(__name__)


# -- scoring rules --------------------------------------------------------


class ScoringRule:
    """An ABC scoring rule f(x, y): the score a voter approving ``y``
    candidates gives a committee containing ``x`` of them.

    Subclasses implement :meth:`_value` for ``x <= y``; :meth:`value` caps
    ``x`` at ``y`` so the function is defined (and monotone) everywhere.
    """

    name = "rule"
    thiele = True

    def value(self, x: int, y: int) -> Fraction:
        if x < 0 or y < 0:
            raise ValueError(f"rule arguments must be non-negative, got x={x}, y={y}")
        return Fraction(self._value(min(x, y), y))

    def _value(self, x, y):
        raise NotImplementedError

    def is_concave(self, k: int, ys: Iterable[int]) -> bool:
        """True if marginal gains f(x+1,y)-f(x,y) never increase for x < k."""
        for y in set(ys):
            prev = None
            for x in range(k):
                gain = self.value(x + 1, y) - self.value(x, y)
                if prev is not None and gain > prev:
                    return False
                prev = gain
        return True

    def __eq__(self, other):
        return type(self) is type(other) and self.__dict__ == other.__dict__

    def __hash__(self):
        return hash(str(self))

    def __str__(self):
        return self.name

    __repr__ = __str__


class AV(ScoringRule):
    name = "av"

    def _value(self, x, y):
        return x


class PAV(ScoringRule):
    name = "pav"

    def _value(self, x, y):
        return sum((Fraction(1, i) for i in range(1, x + 1)), Fraction(0))


class CC(ScoringRule):
    name = "cc"

    def _value(self, x, y):
        return min(x, 1)


class SAV(ScoringRule):
    name = "sav"
    thiele = False

    def _value(self, x, y):
        if y == 0:
            raise ZeroDivisionError("SAV is undefined for a voter with no approvals")
        return Fraction(x, y)


class TruncatedAV(ScoringRule):
    def __init__(self, p: int):
        if p < 1:
            raise InvalidRule(f"truncation level must be positive, got {p}")
        self.p = p

    @property
    def name(self):
        return f"trunc:{self.p}"

    def _value(self, x, y):
        return min(self.p, x)


class ThieleTable(ScoringRule):
    """Thiele rule from explicit weights w(0)=0, w(1), w(2), ...

    Beyond the table the last weight repeats.
    """

    def __init__(self, weights: Sequence):
        weights = [Fraction(w) for w in weights]
        if not weights or weights[0] != 0:
            raise InvalidRule("Thiele weights must start with w(0) = 0")
        if any(b < a for a, b in zip(weights, weights[1:])):
            raise InvalidRule(f"Thiele weights must be non-decreasing: {weights}")
        self.weights = tuple(weights)

    @property
    def name(self):
        return "thiele:" + ",".join(str(w) for w in self.weights[1:])

    def _value(self, x, y):
        return self.weights[min(x, len(self.weights) - 1)]


class ScoreTable(ScoringRule):
    """Arbitrary f(x, y) given as a table over ``x <= y``."""

    thiele = False

    def __init__(self, table: Mapping[Tuple[int, int], object]):
        self.table = {(int(x), int(y)): Fraction(v) for (x, y), v in table.items()}
        for (x, y), v in self.table.items():
            if x > 0 and (x - 1, y) in self.table and self.table[(x - 1, y)] > v:
                raise InvalidRule(f"f({x - 1},{y}) > f({x},{y}): scores must not drop as x grows")

    @property
    def name(self):
        return "table"

    def _value(self, x, y):
        try:
            return self.table[(x, y)]
        except KeyError:
            raise InvalidRule(f"score table has no entry for f({x},{y})") from None


def rule_value(rule: ScoringRule, x: int, y: int) -> Fraction:
    return rule.value(x, y)


def parse_rule(spec: str) -> ScoringRule:
    """``av | pav | cc | sav | trunc:<p> | thiele:<w1,w2,...>``."""
    spec = spec.strip().lower()
    simple = {"av": AV, "pav": PAV, "cc": CC, "sav": SAV}
    if spec in simple:
        return simple[spec]()
    kind, _, arg = spec.partition(":")
    try:
        if kind == "trunc" and arg:
            return TruncatedAV(int(arg))
        if kind == "thiele" and arg:
            return ThieleTable([0] + [Fraction(w.strip()) for w in arg.split(",")])
    except (ValueError, ZeroDivisionError) as exc:
        raise InvalidRule(f"bad rule specification {spec!r}: {exc}") from None
    raise InvalidRule(f"unknown rule {spec!r}; expected av, pav, cc, sav, trunc:<p> or thiele:<w1,...>")


# -- elections ------------------------------------------------------------


@dataclass(frozen=True)
class Voter:
    voter_id: str
    approvals: frozenset


@dataclass(frozen=True)
class Election:
    candidates: Tuple[str, ...]
    voters: Tuple[Voter, ...]
    committee_size: int

    def __post_init__(self):
        object.__setattr__(self, "candidates", tuple(self.candidates))
        object.__setattr__(
            self, "voters", tuple(Voter(v.voter_id, frozenset(v.approvals)) for v in self.voters)
        )
        if len(set(self.candidates)) != len(self.candidates):
            raise InvalidElection("candidate ids must be unique")
        ids = [v.voter_id for v in self.voters]
        if len(set(ids)) != len(ids):
            raise InvalidElection("voter ids must be unique")
        known = set(self.candidates)
        for v in self.voters:
            unknown = v.approvals - known
            if unknown:
                raise UnknownCandidate(f"voter {v.voter_id} approves unknown candidate(s) {sorted(unknown)}")
        if not 1 <= self.committee_size <= len(self.candidates):
            raise InvalidElection(
                f"committee size {self.committee_size} must be between 1 and {len(self.candidates)}"
            )

    @property
    def k(self) -> int:
        return self.committee_size

    def position(self, candidate) -> int:
        try:
            return self._positions[candidate]
        except KeyError:
            raise UnknownCandidate(f"unknown candidate {candidate!r}") from None

    @property
    def _positions(self) -> Dict[str, int]:
        cache = self.__dict__.get("_pos_cache")
        if cache is None:
            cache = {c: i for i, c in enumerate(self.candidates)}
            object.__setattr__(self, "_pos_cache", cache)
        return cache

    def ordered(self, members: Iterable[str]) -> Tuple[str, ...]:
        """``members`` in candidate declaration order."""
        return tuple(sorted(set(members), key=self.position))

    def approval_counts(self) -> Dict[str, int]:
        counts = {c: 0 for c in self.candidates}
        for v in self.voters:
            for c in v.approvals:
                counts[c] += 1
        return counts

    def with_committee_size(self, k: int) -> "Election":
        return Election(self.candidates, self.voters, k)


@dataclass(frozen=True)
class Committee:
    members: Tuple[str, ...]  # in candidate declaration order
    score: Fraction

    def __contains__(self, c):
        return c in self.members

    def __len__(self):
        return len(self.members)


def committee_score(election: Election, rule: ScoringRule, members: Iterable[str]) -> Fraction:
    members = set(members)
    for c in members:
        election.position(c)
    total = Fraction(0)
    for v in election.voters:
        total += rule.value(len(members & v.approvals), len(v.approvals))
    return total


def lex_key(election: Election, members: Iterable[str]) -> Tuple[int, ...]:
    """Sort key for tie-breaking: smaller means preferred."""
    return tuple(sorted(election.position(c) for c in members))


def load_approvals(
    path: Union[str, Path],
    k: int,
    candidates: Optional[Sequence[str]] = None,
) -> Election:
    """Read ``voter_id: cand,cand,...`` lines.

    Voters with empty approval sets are dropped. Without an explicit
    candidate list, the candidates are the approved ids in sorted order.
    """
    voters = []
    seen_ids = set()
    dropped = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            voter_id, sep, rest = line.partition(":")
            voter_id = voter_id.strip()
            if not sep or not voter_id:
                raise InputFormatError(f"{path}:{lineno}: expected 'voter_id: cand,cand,...'")
            if voter_id in seen_ids:
                raise InputFormatError(f"{path}:{lineno}: duplicate voter id {voter_id!r}")
            seen_ids.add(voter_id)
            approvals = frozenset(c.strip() for c in rest.split(",") if c.strip())
            if not approvals:
                dropped += 1
                continue
            voters.append(Voter(voter_id, approvals))
    if dropped:
        logger.info("dropped %d voter(s) with empty approval sets", dropped)
    if candidates is None:
        candidates = sorted(set().union(*(v.approvals for v in voters))) if voters else []
    return Election(tuple(candidates), tuple(voters), k)


def load_candidates(path: Union[str, Path]) -> Tuple[str, ...]:
    with open(path, encoding="utf-8") as fh:
        return tuple(line.strip() for line in fh if line.strip() and not line.startswith("#"))
