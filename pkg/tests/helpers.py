"""Random instance generators shared by the test modules."""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path

from abcc.constraints import ConstraintSet, parse_constraints
from abcc.election import AV, CC, PAV, SAV, Election, ScoringRule, TruncatedAV, Voter, load_approvals
from abcc.relational import Database, RelationSchema, Schema, load_schema

FIG1 = Path(__file__).parent / "fixtures" / "fig1"


@dataclass
class Instance:
    election: Election
    db: Database
    gamma: ConstraintSet
    rule: ScoringRule = AV()


def fig1(constraints: str, k: int = 3) -> Instance:
    schema = load_schema(FIG1 / "schema.json")
    db = Database.load(schema, FIG1 / "db")
    election = load_approvals(FIG1 / "approvals.txt", k)
    gamma = parse_constraints((FIG1 / constraints).read_text(), schema)
    return Instance(election, db, gamma)


def random_election(rng: random.Random, m: int, n: int, k: int, max_approvals: int = 4) -> Election:
    cands = [f"c{i:02d}" for i in range(m)]
    voters = []
    for i in range(n):
        size = rng.randint(1, min(max_approvals, m))
        voters.append(Voter(f"v{i}", frozenset(rng.sample(cands, size))))
    return Election(tuple(cands), tuple(voters), k)


# -- general instances over R(cand, int) and S(cand, cand) ---------------------

GENERAL_SCHEMA = Schema(
    [
        RelationSchema("R", 2, ("cand", "val"), frozenset(), ("text", "int")),
        RelationSchema("S", 2, ("left", "right"), frozenset(), ("text", "text")),
    ]
)

TGD_TEMPLATES = [
    "TGD: R(c,x) & Com(c) -> EXISTS d . S(c,d) & Com(d)",
    "TGD: true -> EXISTS c . R(c,{v}) & Com(c)",
    "TGD: S(c,d) & Com(c) -> EXISTS x . R(d,x)",
    "TGD: R(c,{v}) -> EXISTS d . R(d,{v}) & Com(d)",
    "TGD: true -> EXISTS c,d . S(c,d) & Com(c) & Com(d)",
    "TGD: S(c,d) & Com(c) & Com(d) -> EXISTS x . R(c,x) & R(d,x)",
]

DC_TEMPLATES = [
    "DC: S(c1,c2) & Com(c1) & Com(c2)",
    "DC: R(c1,x) & R(c2,x) & Com(c1) & Com(c2) & c1 != c2",
    "DC: R(c,x) & Com(c) & x > {v}",
    "DC: S(c1,c2) & S(c2,c3) & Com(c1) & Com(c2) & Com(c3)",
    "DC: R(c1,x) & R(c2,x) & R(c3,x) & Com(c1) & Com(c2) & Com(c3) & c1 != c2 & c1 != c3 & c2 != c3",
]

RULES = [AV(), PAV(), CC(), SAV(), TruncatedAV(2)]


def random_general_db(rng: random.Random, cands, values=4, s_density=0.15) -> Database:
    r = set()
    for c in cands:
        for _ in range(rng.choice((0, 1, 1, 2))):
            r.add((c, rng.randint(1, values)))
    s = {(a, b) for a in cands for b in cands if a != b and rng.random() < s_density}
    return Database(GENERAL_SCHEMA, {"R": r, "S": s})


def random_instance(
    rng: random.Random,
    max_c: int = 12,
    max_v: int = 30,
    max_k: int = 5,
    max_tgds: int = 2,
    max_dcs: int = 2,
    rules=RULES,
) -> Instance:
    m = rng.randint(3, max_c)
    k = rng.randint(1, min(max_k, m))
    election = random_election(rng, m, rng.randint(1, max_v), k)
    db = random_general_db(rng, election.candidates)
    lines = [rng.choice(TGD_TEMPLATES).format(v=rng.randint(1, 4)) for _ in range(rng.randint(0, max_tgds))]
    lines += [rng.choice(DC_TEMPLATES).format(v=rng.randint(1, 4)) for _ in range(rng.randint(0, max_dcs))]
    gamma = parse_constraints("\n".join(lines), GENERAL_SCHEMA)
    return Instance(election, db, gamma, rng.choice(rules))


def random_dc_instance(rng: random.Random, max_c: int = 10) -> Instance:
    """DCs only, at least one, usually producing conflicts of mixed sizes."""
    m = rng.randint(3, max_c)
    k = rng.randint(1, min(5, m))
    election = random_election(rng, m, rng.randint(1, 20), k)
    db = random_general_db(rng, election.candidates, values=rng.randint(1, 3), s_density=rng.uniform(0.1, 0.5))
    lines = [rng.choice(DC_TEMPLATES).format(v=rng.randint(1, 3)) for _ in range(rng.randint(1, 3))]
    return Instance(election, db, parse_constraints("\n".join(lines), GENERAL_SCHEMA))


# -- tractable shapes -----------------------------------------------------------


def _keyed_map(rng, cands, values, coverage=0.8):
    """candidate -> value for a random subset of candidates (so the key holds)."""
    return {(c, rng.choice(values)) for c in cands if rng.random() < coverage}


def single_tgd_instance(rng: random.Random, max_c: int = 10) -> Instance:
    m = rng.randint(2, max_c)
    k = rng.randint(1, min(5, m))
    election = random_election(rng, m, rng.randint(1, 20), k)
    values = list(range(1, rng.randint(1, 6) + 1))
    schema = Schema(
        [
            RelationSchema("Need", 1, ("val",), frozenset(), ("int",)),
            RelationSchema("Has", 2, ("cand", "val"), frozenset({1}), ("text", "int")),
        ]
    )
    need = {(v,) for v in values if rng.random() < 0.6}
    db = Database(schema, {"Need": need, "Has": _keyed_map(rng, election.candidates, values)})
    gamma = parse_constraints("TGD: Need(x) -> EXISTS c . Has(c,x) & Com(c)", schema)
    return Instance(election, db, gamma)


def double_tgd_instance(rng: random.Random, max_c: int = 10) -> Instance:
    m = rng.randint(2, max_c)
    k = rng.randint(1, min(5, m))
    election = random_election(rng, m, rng.randint(1, 20), k)
    schema = Schema(
        [
            RelationSchema("Need1", 1, ("val",), frozenset(), ("int",)),
            RelationSchema("Has1", 2, ("cand", "val"), frozenset({1}), ("text", "int")),
            RelationSchema("Need2", 1, ("val",), frozenset(), ("text",)),
            RelationSchema("Has2", 2, ("cand", "val"), frozenset({1}), ("text", "text")),
        ]
    )
    v1 = list(range(1, rng.randint(1, 4) + 1))
    v2 = ["p", "q", "r", "s"][: rng.randint(1, 4)]
    db = Database(
        schema,
        {
            "Need1": {(v,) for v in v1 if rng.random() < 0.6},
            "Has1": _keyed_map(rng, election.candidates, v1),
            "Need2": {(v,) for v in v2 if rng.random() < 0.6},
            "Has2": _keyed_map(rng, election.candidates, v2),
        },
    )
    gamma = parse_constraints(
        "TGD: Need1(x) -> EXISTS c . Has1(c,x) & Com(c)\nTGD: Need2(y) -> EXISTS d . Has2(d,y) & Com(d)",
        schema,
    )
    return Instance(election, db, gamma)


def dc_key_instance(rng: random.Random, max_c: int = 10) -> Instance:
    m = rng.randint(2, max_c)
    k = rng.randint(1, min(5, m))
    election = random_election(rng, m, rng.randint(1, 20), k)
    schema = Schema([RelationSchema("Aff", 2, ("cand", "org"), frozenset({1}), ("text", "text"))])
    orgs = ["o1", "o2", "o3", "o4"][: rng.randint(1, 4)]
    db = Database(schema, {"Aff": _keyed_map(rng, election.candidates, orgs, rng.uniform(0.3, 1.0))})
    gamma = parse_constraints("DC: Com(c1) & Com(c2) & Aff(c1,x) & Aff(c2,x) & c1 != c2", schema)
    return Instance(election, db, gamma)
