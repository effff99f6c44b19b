"""Exact branch-and-bound over the committee variables, and CPLEX LP export."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Set, Tuple

from abcc.constraints import ConstraintSet, is_legal
from abcc.election import Committee, Election, ScoringRule, committee_score
from abcc.errors import ModelMismatch
from abcc.mip import BINARY, CONTINUOUS, EQ, GE, INTEGER, LE, MipModel, encode, model_stats
from abcc.relational import Database

logger = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
TIMEOUT = "timeout"


@dataclass
class SolveReport:
    status: str
    committee: Optional[Committee] = None
    objective: Optional[Fraction] = None
    nodes_explored: int = 0
    build_time: float = 0.0  # ms
    solve_time: float = 0.0  # ms

    def same_result(self, other: "SolveReport") -> bool:
        return (self.status, self.committee, self.objective, self.nodes_explored) == (
            other.status,
            other.committee,
            other.objective,
            other.nodes_explored,
        )


class _Timeout(Exception):
    pass


class CompletionBound:
    """Upper bound on the best score reachable by adding ``r`` free candidates.

    Two admissible bounds, the smaller one is used:

    * per voter, the score if every free approved candidate (up to ``r``)
      joined the committee, valid for any rule monotone in ``x``;
    * current score plus the ``r`` largest single-candidate marginal gains,
      valid when marginal gains never grow (concave rules such as AV, PAV,
      CC, truncated AV), since the score is then submodular.
    """

    def __init__(self, election: Election, rule: ScoringRule):
        self.election = election
        self.rule = rule
        pos = {c: i for i, c in enumerate(election.candidates)}
        groups: Dict[frozenset, int] = {}
        for v in election.voters:
            groups[v.approvals] = groups.get(v.approvals, 0) + 1
        self.voters = [(frozenset(pos[c] for c in a), len(a), w) for a, w in groups.items()]
        self.concave = rule.is_concave(election.k, (y for _, y, _ in self.voters))
        self._f: Dict[Tuple[int, int], Fraction] = {}

    def f(self, x, y) -> Fraction:
        key = (x, y)
        val = self._f.get(key)
        if val is None:
            val = self._f[key] = self.rule.value(x, y)
        return val

    def score(self, selected: Set[int]) -> Fraction:
        return sum((w * self.f(len(a & selected), y) for a, y, w in self.voters), Fraction(0))

    def __call__(self, selected: Set[int], free: Sequence[int]) -> Fraction:
        r = self.election.k - len(selected)
        free_set = set(free)
        per_voter = Fraction(0)
        current = Fraction(0)
        gains = {j: Fraction(0) for j in free}
        for a, y, w in self.voters:
            x = len(a & selected)
            base = self.f(x, y)
            current += w * base
            reach = min(len(a & free_set), r)
            per_voter += w * self.f(x + reach, y)
            if self.concave and reach:
                gain = w * (self.f(x + 1, y) - base)
                if gain:
                    for j in a & free_set:
                        gains[j] += gain
        if not self.concave:
            return per_voter
        marginal = current + sum(sorted(gains.values(), reverse=True)[:r], Fraction(0))
        return min(per_voter, marginal)


def _conflict_rows(model: MipModel, index_of: Dict[str, int]) -> List[Tuple[Tuple[int, ...], int]]:
    """Rows of the form sum(z_j for j in U) <= cap, used for propagation."""
    rows = []
    for row in model.constraints:
        if row.sense != LE or not row.terms:
            continue
        if all(c == 1 and v in index_of for c, v in row.terms) and row.rhs.denominator == 1:
            rows.append((tuple(index_of[v] for _, v in row.terms), int(row.rhs)))
    return rows


def solve(
    model: MipModel,
    election: Election,
    db: Database,
    gamma: ConstraintSet,
    time_limit_ms: Optional[float] = None,
    check_model: bool = True,
) -> SolveReport:
    """Maximum-score legal committee by depth-first branch and bound.

    Branches on candidates in declaration order, trying "in" before "out",
    so among equal-score committees the lexicographically smallest one is
    found first and kept.
    """
    start = time.perf_counter()
    rule = model.rule
    if check_model:
        fresh = encode(election, db, gamma, rule, model.options)
        if model_stats(fresh) != model_stats(model):
            raise ModelMismatch(
                f"model statistics {model_stats(model)} do not match a fresh encoding {model_stats(fresh)}"
            )
    build_time = model.timings.get("build_ms", 0.0)
    if model.is_trivially_infeasible:
        return SolveReport(INFEASIBLE, build_time=build_time, solve_time=(time.perf_counter() - start) * 1000)

    m = len(election.candidates)
    k = election.k
    index_of = {model.z_vars[c]: j for j, c in enumerate(election.candidates)}
    rows = _conflict_rows(model, index_of)
    rows_of: List[List[int]] = [[] for _ in range(m)]
    for r, (members, _) in enumerate(rows):
        for j in members:
            rows_of[j].append(r)
    bound = CompletionBound(election, rule)
    deadline = None if time_limit_ms is None else start + time_limit_ms / 1000

    best: List = [None, None]  # score, members
    nodes = 0

    def search(pos: int, selected: Set[int], excluded: Set[int], row_load: List[int]):
        nonlocal nodes
        nodes += 1
        if deadline is not None and time.perf_counter() > deadline:
            raise _Timeout
        free = [j for j in range(pos, m) if j not in excluded]
        need = k - len(selected)
        if need < 0 or len(free) < need:
            return
        if need == 0:
            evaluate(selected)
            return
        if len(free) == need:
            if not any(overloaded(row_load, free, r) for r in range(len(rows))):
                evaluate(selected | set(free))
            return
        if best[0] is not None and bound(selected, free) <= best[0]:
            return
        j = free[0]
        # branch z_j = 1
        ok = True
        newly_excluded = set()
        for r in rows_of[j]:
            members, cap = rows[r]
            if row_load[r] + 1 > cap:
                ok = False
                break
        if ok:
            for r in rows_of[j]:
                row_load[r] += 1
            for r in rows_of[j]:
                members, cap = rows[r]
                if row_load[r] == cap:
                    newly_excluded.update(i for i in members if i > j and i not in excluded)
            search(j + 1, selected | {j}, excluded | newly_excluded, row_load)
            for r in rows_of[j]:
                row_load[r] -= 1
        # branch z_j = 0
        search(j + 1, selected, excluded, row_load)

    def overloaded(row_load, forced, r):
        members, cap = rows[r]
        return row_load[r] + sum(1 for i in forced if i in members) > cap

    def evaluate(members: Set[int]):
        names = [election.candidates[i] for i in sorted(members)]
        if not is_legal(db, names, gamma, k):
            return
        score = committee_score(election, rule, names)
        if best[0] is None or score > best[0]:
            best[0], best[1] = score, tuple(names)

    status = OPTIMAL
    try:
        search(0, set(), set(), [0] * len(rows))
    except _Timeout:
        status = TIMEOUT
    elapsed = (time.perf_counter() - start) * 1000
    if best[0] is None:
        return SolveReport(
            TIMEOUT if status == TIMEOUT else INFEASIBLE,
            nodes_explored=nodes,
            build_time=build_time,
            solve_time=elapsed,
        )
    return SolveReport(
        status,
        Committee(best[1], best[0]),
        best[0],
        nodes_explored=nodes,
        build_time=build_time,
        solve_time=elapsed,
    )


# -- LP export ----------------------------------------------------------------


def _num(x: Fraction) -> str:
    if x.denominator == 1:
        return str(x.numerator)
    return f"{float(x):.12g}"


def _linear(terms) -> str:
    parts = []
    for coef, var in terms:
        sign = "-" if coef < 0 else "+"
        mag = abs(coef)
        body = var if mag == 1 else f"{_num(mag)} {var}"
        parts.append(f"{sign} {body}")
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text


def export_lp(model: MipModel) -> str:
    """Render ``model`` in CPLEX LP format."""
    lines = ["Maximize"]
    if model.objective:
        lines.append(f" obj: {_linear(model.objective)}")
    lines.append("Subject To")
    placeholder = model.variables[0].name if model.variables else None
    for row in model.constraints:
        lhs = _linear(row.terms) if row.terms else f"0 {placeholder}"
        lines.append(f" {row.name}: {lhs} {row.sense} {_num(row.rhs)}")
    lines.append("Bounds")
    for v in model.variables:
        if v.kind == BINARY and (v.lower, v.upper) == (0, 1):
            continue
        if v.lower == v.upper:
            lines.append(f" {v.name} = {_num(v.lower)}")
        else:
            lines.append(f" {_num(v.lower)} <= {v.name} <= {_num(v.upper)}")
    lines.append("Generals")
    ints = [v.name for v in model.variables if v.kind == INTEGER]
    if ints:
        lines.append(" " + " ".join(ints))
    lines.append("Binaries")
    bins = [v.name for v in model.variables if v.kind == BINARY]
    if bins:
        lines.append(" " + " ".join(bins))
    lines.append("End")
    return "\n".join(lines) + "\n"
