"""Mixed-integer encoding of constrained ABC elections.

The base program selects ``k`` candidates (binary ``z``), counts each
voter's approved members (integer ``u``) and bounds each voter's score
variable ``s`` by ``f(k', |A(v)|)`` whenever ``u = k'``, the ``|k' - u|``
term linearised with a binary switch and two non-negative parts. TGDs and DCs
are added by grounding them over the database with ``Com`` ranging over the
candidates.
"""

from __future__ import annotations

import itertools
import re
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

from abcc.constraints import ConstraintSet, Dc, Tgd
from abcc.election import Election, ScoringRule, lex_key
from abcc.relational import Database, ground_conjunction

BINARY = "binary"
INTEGER = "integer"
CONTINUOUS = "continuous"

LE, EQ, GE = "<=", "=", ">="


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str
    lower: Fraction
    upper: Fraction


@dataclass(frozen=True)
class LinearConstraint:
    name: str
    terms: Tuple[Tuple[Fraction, str], ...]
    sense: str
    rhs: Fraction

    def lhs(self, values: Mapping[str, object]):
        return sum((c * values[v] for c, v in self.terms), Fraction(0))

    def is_satisfied(self, values: Mapping[str, object]) -> bool:
        lhs = self.lhs(values)
        if self.sense == LE:
            return lhs <= self.rhs
        if self.sense == GE:
            return lhs >= self.rhs
        return lhs == self.rhs


@dataclass(frozen=True)
class EncoderOptions:
    """Toggles for voter grouping (G), score pruning (P) and DC contraction (C)."""

    group_voters: bool = True
    prune_scores: bool = True
    contract_dcs: bool = True

    @classmethod
    def all(cls):
        return cls(True, True, True)

    @classmethod
    def none(cls):
        return cls(False, False, False)

    @classmethod
    def combinations(cls) -> List["EncoderOptions"]:
        return [cls(g, p, c) for g in (False, True) for p in (False, True) for c in (False, True)]

    @property
    def label(self) -> str:
        flags = [n for n, on in zip("GPC", (self.group_voters, self.prune_scores, self.contract_dcs)) if on]
        return "+".join(flags) if flags else "none"

    @property
    def names(self) -> List[str]:
        return [
            n
            for n, on in zip(
                ("group", "prune", "contract"),
                (self.group_voters, self.prune_scores, self.contract_dcs),
            )
            if on
        ]


class MipModel:
    """A maximisation MIP with exact rational data."""

    def __init__(self):
        self.variables: List[Variable] = []
        self.constraints: List[LinearConstraint] = []
        self.objective: List[Tuple[Fraction, str]] = []
        self._by_name: Dict[str, Variable] = {}
        self._constraint_names: set = set()
        # filled in by the encoder
        self.z_vars: Dict[str, str] = {}
        self.rule: Optional[ScoringRule] = None
        self.options: Optional[EncoderOptions] = None
        self.big_m: Optional[Fraction] = None
        self.timings: Dict[str, float] = {}
        self._tgd_count = 0
        self._dc_count = 0

    def __contains__(self, name):
        return name in self._by_name

    def variable(self, name) -> Variable:
        return self._by_name[name]

    def add_variable(self, name: str, kind: str, lower=0, upper=None) -> str:
        if name in self._by_name:
            raise ValueError(f"duplicate variable {name!r}")
        if kind == BINARY:
            lower = 0 if lower is None else lower
            upper = 1 if upper is None else upper
            if not 0 <= lower <= upper <= 1:
                raise ValueError(f"binary {name} needs bounds within [0, 1]")
        var = Variable(name, kind, Fraction(lower), Fraction(upper))
        self.variables.append(var)
        self._by_name[name] = var
        return name

    def add_constraint(self, terms: Iterable[Tuple[object, str]], sense: str, rhs, name: str) -> LinearConstraint:
        terms = tuple((Fraction(c), v) for c, v in terms)
        for _, v in terms:
            if v not in self._by_name:
                raise KeyError(f"constraint {name} references undeclared variable {v!r}")
        if sense not in (LE, EQ, GE):
            raise ValueError(f"bad constraint sense {sense!r}")
        if name in self._constraint_names:
            raise ValueError(f"duplicate constraint name {name!r}")
        row = LinearConstraint(name, terms, sense, Fraction(rhs))
        self.constraints.append(row)
        self._constraint_names.add(name)
        return row

    def set_objective(self, terms: Iterable[Tuple[object, str]]):
        terms = [(Fraction(c), v) for c, v in terms]
        for _, v in terms:
            if v not in self._by_name:
                raise KeyError(f"objective references undeclared variable {v!r}")
        self.objective = terms

    def add_infeasible(self, name: str):
        """Record that no assignment can satisfy the model (0 >= 1)."""
        self.add_constraint((), GE, 1, name)

    @property
    def is_trivially_infeasible(self) -> bool:
        return any(not row.terms and not row.is_satisfied({}) for row in self.constraints)


def model_stats(model: MipModel) -> Dict[str, int]:
    return {
        "num_variables": len(model.variables),
        "num_constraints": len(model.constraints),
        "num_binaries": sum(1 for v in model.variables if v.kind == BINARY),
    }


# -- naming -------------------------------------------------------------------

_UNSAFE = re.compile(r"[^A-Za-z0-9_]")


def _unique_names(prefix: str, ids: Sequence[str]) -> List[str]:
    out, used = [], set()
    for i, raw in enumerate(ids):
        name = f"{prefix}{_UNSAFE.sub('_', str(raw))}"
        if name in used:
            name = f"{name}__{i}"
        used.add(name)
        out.append(name)
    return out


# -- base program -------------------------------------------------------------


@dataclass(frozen=True)
class WeightedVoter:
    approvals: FrozenSet[str]
    weight: int
    label: str


def group_voters(election: Election) -> List[WeightedVoter]:
    """Merge voters with identical ballots, in order of first appearance."""
    weights: Dict[FrozenSet[str], int] = {}
    for v in election.voters:
        weights[v.approvals] = weights.get(v.approvals, 0) + 1
    return [WeightedVoter(a, w, f"g{i}") for i, (a, w) in enumerate(weights.items())]


def big_m(election: Election, rule: ScoringRule) -> Fraction:
    sizes = {len(v.approvals) for v in election.voters} or {0}
    return 1 + max(rule.value(election.k, y) if y or rule.thiele else Fraction(0) for y in sizes)


def add_abs_block(model: MipModel, tag: str, u: str, kprime: int, k: int) -> Tuple[str, str, str]:
    """Variables (b, t+, t-) with t+ - t- = k' - u and t+ + t- = |k' - u|."""
    b = model.add_variable(f"abs_b_{tag}", BINARY)
    tp = model.add_variable(f"abs_tp_{tag}", INTEGER, 0, k + 1)
    tm = model.add_variable(f"abs_tm_{tag}", INTEGER, 0, k + 1)
    model.add_constraint([(1, tp), (-1, tm), (1, u)], EQ, kprime, f"abs_t_{tag}")
    model.add_constraint([(1, tp), (-(k + 1), b)], LE, 0, f"abs_p_{tag}")
    model.add_constraint([(1, tm), (k + 1, b)], LE, k + 1, f"abs_m_{tag}")
    return b, tp, tm


def encode_base(election: Election, rule: ScoringRule, options: EncoderOptions = EncoderOptions()) -> MipModel:
    model = MipModel()
    model.rule = rule
    model.options = options
    k = election.k
    M = big_m(election, rule)
    model.big_m = M

    z_names = _unique_names("z_", election.candidates)
    model.z_vars = dict(zip(election.candidates, z_names))
    for z in z_names:
        model.add_variable(z, BINARY)

    if options.group_voters:
        voters = group_voters(election)
    else:
        labels = _unique_names("", [v.voter_id for v in election.voters])
        voters = [WeightedVoter(v.approvals, 1, lab) for v, lab in zip(election.voters, labels)]

    objective = []
    for voter in voters:
        y = len(voter.approvals)
        u = model.add_variable(f"u_{voter.label}", INTEGER, 0, min(k, y))
        s = model.add_variable(f"s_{voter.label}", CONTINUOUS, 0, M)
        approved = [model.z_vars[c] for c in election.candidates if c in voter.approvals]
        model.add_constraint([(1, z) for z in approved] + [(-1, u)], EQ, 0, f"approve_{voter.label}")
        top = min(k, y) if options.prune_scores else k
        for kprime in range(top + 1):
            tag = f"{voter.label}_{kprime}"
            _, tp, tm = add_abs_block(model, tag, u, kprime, k)
            model.add_constraint(
                [(1, s), (-M, tp), (-M, tm)], LE, rule.value(kprime, y), f"score_{tag}"
            )
        objective.append((voter.weight, s))
    model.add_constraint([(1, z) for z in z_names], EQ, k, "cardinality")
    model.set_objective(objective)
    return model


# -- TGDs ---------------------------------------------------------------------


def _com_values(terms, assignment) -> FrozenSet:
    return frozenset(assignment[t.name] if t.is_variable else t.value for t in terms)


def _z_terms(model: MipModel, election: Election, members, coef=1):
    return [(coef, model.z_vars[c]) for c in election.ordered(members)]


def encode_tgd(model: MipModel, db: Database, election: Election, tgd: Tgd, label: Optional[str] = None) -> None:
    """Add the rows that force ``tgd`` to hold for the selected committee.

    ``Com`` atoms are grounded against the candidate set, so groundings
    binding a non-candidate to ``Com`` never appear.
    """
    if label is None:
        label = f"tgd{model._tgd_count}"
    model._tgd_count += 1
    ext = db.with_committee(election.candidates)
    seen = set()
    n_alpha = n_beta = 0
    for alpha in ground_conjunction(ext, tgd.body, order=tgd.universal_vars):
        b_alpha_set = _com_values(tgd.body_com_terms, alpha)
        heads: List[FrozenSet] = []
        for beta in ground_conjunction(ext, tgd.head, seed=alpha):
            hb = _com_values(tgd.head_com_terms, beta)
            if hb not in heads:
                heads.append(hb)
        signature = (b_alpha_set, frozenset(heads))
        if signature in seen:
            continue
        seen.add(signature)
        a = n_alpha
        n_alpha += 1
        size = len(b_alpha_set)
        if not heads:
            if not b_alpha_set:
                model.add_infeasible(f"{label}_a{a}_unsat")
            else:
                model.add_constraint(
                    _z_terms(model, election, b_alpha_set), LE, size - 1, f"{label}_a{a}_deny"
                )
            continue
        if b_alpha_set:
            b_alpha = model.add_variable(f"{label}_a{a}", BINARY)
            zs = _z_terms(model, election, b_alpha_set)
            model.add_constraint([(size, b_alpha)] + [(-c, z) for c, z in zs], LE, 0, f"{label}_a{a}_lo")
            model.add_constraint(zs + [(-1, b_alpha)], LE, size - 1, f"{label}_a{a}_hi")
        else:
            b_alpha = model.add_variable(f"{label}_a{a}", BINARY, 1, 1)
        cover = [(1, b_alpha)]
        for hb in heads:
            b_beta = f"{label}_b{n_beta}"
            n_beta += 1
            if hb:
                model.add_variable(b_beta, BINARY)
                zs = _z_terms(model, election, hb, coef=-1)
                model.add_constraint([(len(hb), b_beta)] + zs, LE, 0, f"{b_beta}_lo")
            else:
                model.add_variable(b_beta, BINARY, 1, 1)
            cover.append((-1, b_beta))
        model.add_constraint(cover, LE, 0, f"{label}_a{a}_cover")


# -- DCs ----------------------------------------------------------------------


def dc_conflicts(db: Database, election: Election, dc: Dc) -> Optional[List[FrozenSet]]:
    """Distinct candidate sets the DC forbids, in lexicographic order.

    Returns ``None`` if the database alone violates the DC (a grounding with
    no ``Com`` atom).
    """
    ext = db.with_committee(election.candidates)
    conflicts = set()
    for alpha in ground_conjunction(ext, dc.relational_atoms, dc.comparison_atoms, order=dc.universal_vars):
        members = _com_values(dc.com_terms, alpha)
        if not members:
            return None
        conflicts.add(members)
    return sorted(conflicts, key=lambda b: (len(b), lex_key(election, b)))


def hyperclique_cover(edges: Iterable[FrozenSet], order: Sequence) -> List[FrozenSet]:
    """Greedily cover a uniform hypergraph's edges with hypercliques.

    A hyperclique is a vertex set all of whose q-subsets are edges. Vertices
    are tried by descending degree, then by their position in ``order``.
    """
    edges = set(edges)
    if not edges:
        return []
    q = len(next(iter(edges)))
    if any(len(e) != q for e in edges):
        raise ValueError("hypergraph is not uniform")
    position = {v: i for i, v in enumerate(order)}
    degree: Dict = {}
    for e in edges:
        for v in e:
            degree[v] = degree.get(v, 0) + 1
    vertices = sorted(degree, key=lambda v: (-degree[v], position[v]))
    edge_key = lambda e: sorted(position[v] for v in e)  # noqa: E731
    uncovered = set(edges)
    cliques = []
    while uncovered:
        start = next(v for v in vertices if any(v in e for e in uncovered))
        seed_edge = min((e for e in uncovered if start in e), key=edge_key)
        clique = set(seed_edge)
        for w in vertices:
            if w in clique:
                continue
            if all(frozenset(s) | {w} in edges for s in itertools.combinations(clique, q - 1)):
                clique.add(w)
        clique = frozenset(clique)
        cliques.append(clique)
        uncovered = {e for e in uncovered if not e <= clique}
    return cliques


def encode_dc(
    model: MipModel,
    db: Database,
    election: Election,
    dc: Dc,
    contract: bool = False,
    label: Optional[str] = None,
) -> None:
    if label is None:
        label = f"dc{model._dc_count}"
    model._dc_count += 1
    conflicts = dc_conflicts(db, election, dc)
    if conflicts is None:
        model.add_infeasible(f"{label}_unsat")
        return
    if not conflicts:
        return
    singles = conflicts
    if contract:
        q = max(len(b) for b in conflicts)
        top = [b for b in conflicts if len(b) == q]
        singles = [b for b in conflicts if len(b) < q]
        for n, clique in enumerate(hyperclique_cover(top, election.candidates)):
            model.add_constraint(_z_terms(model, election, clique), LE, q - 1, f"{label}_clq{n}")
    for n, members in enumerate(singles):
        model.add_constraint(_z_terms(model, election, members), LE, len(members) - 1, f"{label}_{n}")


# -- full pipeline ------------------------------------------------------------


def encode(
    election: Election,
    db: Database,
    gamma: ConstraintSet,
    rule: ScoringRule,
    options: EncoderOptions = EncoderOptions(),
) -> MipModel:
    """Base program plus every TGD and DC of ``gamma``."""
    start = time.perf_counter()
    model = encode_base(election, rule, options)
    base_done = time.perf_counter()
    for tgd in gamma.tgds:
        encode_tgd(model, db, election, tgd)
    for dc in gamma.dcs:
        encode_dc(model, db, election, dc, contract=options.contract_dcs)
    end = time.perf_counter()
    model.timings = {
        "base_ms": (base_done - start) * 1000,
        "ground_ms": (end - base_done) * 1000,
        "build_ms": (end - start) * 1000,
    }
    return model
