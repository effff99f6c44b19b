import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from abcc.constraints import (
    CmpAtom,
    Const,
    ConstraintSet,
    Dc,
    RelAtom,
    Tgd,
    Var,
    check_constraint,
    is_legal,
    parse_constraint,
    parse_constraints,
    pretty_print,
)
from abcc.errors import ArityMismatch, ConstraintSyntaxError, UnknownRelation, UnsafeVariable
from abcc.relational import Database, RelationSchema, Schema, ground_conjunction
from helpers import GENERAL_SCHEMA, fig1, random_general_db, DC_TEMPLATES, TGD_TEMPLATES

SUPERVISE_DC = "DC: Supervise(c1,c2) & Com(c1) & Com(c2)"


@pytest.fixture(scope="module")
def dc_inst():
    return fig1("supervise_dc.txt")


@pytest.fixture(scope="module")
def tgd_inst():
    return fig1("three_tgds.txt")


# -- parsing ------------------------------------------------------------------


def test_parse_supervise_dc(dc_inst):
    (dc,) = dc_inst.gamma.dcs
    assert len(dc.com_terms) == 2
    assert dc == parse_constraint(SUPERVISE_DC, dc_inst.db.schema)


def test_parse_topic_tgd(tgd_inst):
    tgd = tgd_inst.gamma.tgds[0]
    assert tgd.existential_vars == ("c", "p")
    assert tgd.body_com_terms == [] and len(tgd.head_com_terms) == 1


def test_parse_true_body(tgd_inst):
    tgd = tgd_inst.gamma.tgds[1]
    assert tgd.body == ()
    assert RelAtom("Pub", (Var("f"), Const("ML"))) in tgd.head


def test_comments_and_blank_lines(dc_inst):
    text = '# header\n\nDC: Supervise(c1,c2) & Com(c1) & Com(c2)  # trailing\n'
    assert len(parse_constraints(text, dc_inst.db.schema)) == 1


def test_hash_inside_string_is_not_a_comment():
    schema = Schema([RelationSchema("T", 1)])
    (dc,) = parse_constraints('DC: T("a#b")', schema).dcs
    assert dc.relational_atoms[0].terms == (Const("a#b"),)


@pytest.mark.parametrize(
    "line, error",
    [
        ("DC: Nope(x) & Com(x)", UnknownRelation),
        ("DC: Topic(x,y)", ArityMismatch),
        ("DC: Com(x,y)", ArityMismatch),
        ("DC: Topic(x) & y != x", UnsafeVariable),
        ("TGD: Topic(t) -> Author(c,t)", UnsafeVariable),
        ("TGD: Topic(t) & t != \"AI\" -> Com(t)", ConstraintSyntaxError),
        ("DC Topic(x)", ConstraintSyntaxError),
        ("TGD: Topic(t) Com(t)", ConstraintSyntaxError),
        ("DC: Topic(x) &", ConstraintSyntaxError),
    ],
)
def test_parse_errors(dc_inst, line, error):
    with pytest.raises(error):
        parse_constraint(line, dc_inst.db.schema)


def test_syntax_error_reports_position(dc_inst):
    with pytest.raises(ConstraintSyntaxError) as info:
        parse_constraints("DC: Topic(x)\nDC: Topic(x) Topic(y)", dc_inst.db.schema)
    assert info.value.lineno == 2
    assert "line 2" in str(info.value)


ROUND_TRIP_SCHEMA = Schema(
    [
        RelationSchema("P", 1, types=("text",)),
        RelationSchema("Q", 2, types=("text", "int")),
        RelationSchema("R3", 3),
    ]
)
names = st.sampled_from(["x", "y", "z", "c1", "c_2", "w"])
consts = st.one_of(st.integers(-5, 50), st.text(alphabet='ab "\\#-', max_size=4))


@st.composite
def rel_atoms(draw, variables):
    rel = draw(st.sampled_from(["P", "Q", "R3", "Com"]))
    arity = 1 if rel == "Com" else ROUND_TRIP_SCHEMA[rel].arity
    terms = tuple(
        draw(st.one_of(st.sampled_from(variables).map(Var), consts.map(Const))) for _ in range(arity)
    )
    return RelAtom(rel, terms)


@st.composite
def constraints(draw):
    variables = draw(st.lists(names, min_size=1, max_size=4, unique=True))
    body = tuple(draw(st.lists(rel_atoms(variables), min_size=0 if draw(st.booleans()) else 1, max_size=3)))
    bound = sorted({t.name for a in body for t in a.terms if isinstance(t, Var)})
    if draw(st.booleans()) and body:
        cmps = []
        if bound:
            for _ in range(draw(st.integers(0, 2))):
                cmps.append(
                    CmpAtom(
                        Var(draw(st.sampled_from(bound))),
                        draw(st.sampled_from(["=", "!=", "<", "<=", ">", ">="])),
                        draw(st.one_of(st.sampled_from(bound).map(Var), st.integers(0, 9).map(Const))),
                    )
                )
        return Dc(body, tuple(cmps))
    exist = tuple(v for v in draw(st.lists(st.sampled_from(["e1", "e2", "e3"]), max_size=2, unique=True)))
    head = tuple(draw(st.lists(rel_atoms(bound + list(exist) or list(exist) or ["e1"]), min_size=1, max_size=3)))
    used = {t.name for a in head for t in a.terms if isinstance(t, Var)}
    if not used <= set(bound) | set(exist):
        exist = tuple(sorted(used - set(bound)))
    return Tgd(body, exist, head)


@settings(max_examples=300, deadline=None)
@given(st.lists(constraints(), min_size=1, max_size=4))
def test_pretty_print_round_trip(cs):
    gamma = ConstraintSet.of(cs)
    assert parse_constraints(pretty_print(gamma), ROUND_TRIP_SCHEMA) == gamma


# -- satisfaction -------------------------------------------------------------


def test_supervise_dc(dc_inst):
    (dc,) = dc_inst.gamma.dcs
    assert not check_constraint(dc_inst.db, {"Ann", "Bob", "Dave"}, dc)
    assert check_constraint(dc_inst.db, {"Ann", "Cale", "Dave"}, dc)
    assert check_constraint(dc_inst.db, set(), dc)


def test_is_legal_dc(dc_inst):
    assert is_legal(dc_inst.db, {"Ann", "Cale", "Dave"}, dc_inst.gamma, 3)
    assert not is_legal(dc_inst.db, {"Ann", "Cale"}, dc_inst.gamma, 3)
    # Cale supervises Eva
    assert not is_legal(dc_inst.db, {"Ann", "Cale", "Eva"}, dc_inst.gamma, 3)


def test_is_legal_three_tgds(tgd_inst):
    # Topic AI is covered only by Cale's publication, so every committee
    # without Cale breaks the coverage TGD; {Ann, Bob, Dave} is therefore
    # illegal even though it has the highest unconstrained score.
    db, gamma = tgd_inst.db, tgd_inst.gamma
    assert not is_legal(db, {"Ann", "Bob", "Dave"}, gamma, 3)
    assert not check_constraint(db, {"Ann", "Bob", "Dave"}, gamma.tgds[0])
    assert check_constraint(db, {"Ann", "Bob", "Dave"}, gamma.tgds[1])
    assert check_constraint(db, {"Ann", "Bob", "Dave"}, gamma.tgds[2])
    assert is_legal(db, {"Ann", "Cale", "Dave"}, gamma, 3)
    legal = [b for b in itertools.combinations(tgd_inst.election.candidates, 3) if is_legal(db, b, gamma, 3)]
    assert sorted(map(sorted, legal)) == [["Ann", "Bob", "Cale"], ["Ann", "Cale", "Dave"]]


def test_empty_body_tgd_with_unsatisfiable_head():
    schema = Schema([RelationSchema("T", 1)])
    gamma = parse_constraints('TGD: true -> EXISTS c . T(c) & Com(c)', schema)
    db = Database(schema, {"T": [("a",)]})
    assert is_legal(db, {"a"}, gamma, 1)
    assert not is_legal(db, {"b"}, gamma, 1)


def _materialized(constraint):
    """Replace Com by an ordinary relation named Member."""
    def swap(atoms):
        return tuple(RelAtom("Member", a.terms) if a.is_com else a for a in atoms)

    if isinstance(constraint, Dc):
        return Dc(swap(constraint.relational_atoms), constraint.comparison_atoms)
    return Tgd(swap(constraint.body), constraint.existential_vars, swap(constraint.head))


def test_com_cross_validation():
    schema = Schema(list(GENERAL_SCHEMA) + [RelationSchema("Member", 1)])
    rng = random.Random(11)
    for _ in range(150):
        cands = [f"c{i:02d}" for i in range(rng.randint(2, 7))]
        base = random_general_db(rng, cands)
        committee = set(rng.sample(cands, rng.randint(0, len(cands))))
        db = Database(schema, {"R": base["R"], "S": base["S"], "Member": [(c,) for c in committee]})
        template = rng.choice(DC_TEMPLATES + TGD_TEMPLATES).format(v=rng.randint(1, 4))
        c = parse_constraint(template, GENERAL_SCHEMA)
        m = _materialized(c)
        if isinstance(c, Dc):
            expected = next(ground_conjunction(db, m.relational_atoms, m.comparison_atoms), None) is None
        else:
            expected = all(
                next(ground_conjunction(db, m.head, seed=a), None) is not None
                for a in ground_conjunction(db, m.body)
            )
        assert check_constraint(base, committee, c) == expected, template
