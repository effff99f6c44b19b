"""Brute-force winning legal committee, straight from the definition."""

from __future__ import annotations

import itertools
import math
from typing import Optional

from abcc.constraints import ConstraintSet, is_legal
from abcc.election import Committee, Election, ScoringRule, committee_score
from abcc.errors import InstanceTooLarge
from abcc.relational import Database

DEFAULT_CAP = 2_000_000


def brute_force_winner(
    election: Election,
    db: Database,
    gamma: ConstraintSet,
    rule: ScoringRule,
    cap: int = DEFAULT_CAP,
) -> Optional[Committee]:
    """Enumerate every k-subset; return the best legal one or ``None``.

    Subsets are scored first and checked for legality in order of decreasing
    score (ties: lexicographically smallest first), so the first legal subset
    is the answer. Nothing is pruned without being proven worse.
    """
    m, k = len(election.candidates), election.k
    total = math.comb(m, k)
    if total > cap:
        raise InstanceTooLarge(f"C({m},{k}) = {total} subsets exceeds the cap of {cap}")
    scored = []
    for n, subset in enumerate(itertools.combinations(election.candidates, k)):
        scored.append((committee_score(election, rule, subset), n, subset))
    # combinations() yields in lexicographic order of positions, so n is the tie-break
    scored.sort(key=lambda t: (-t[0], t[1]))
    for score, _, subset in scored:
        if is_legal(db, subset, gamma, k):
            return Committee(tuple(subset), score)
    return None
