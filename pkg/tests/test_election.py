from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from abcc.election import (
    AV,
    CC,
    PAV,
    SAV,
    Election,
    ScoreTable,
    ThieleTable,
    TruncatedAV,
    Voter,
    committee_score,
    load_approvals,
    parse_rule,
    rule_value,
)
from abcc.errors import InputFormatError, InvalidElection, InvalidRule, UnknownCandidate
from helpers import FIG1

RULES = [AV(), PAV(), CC(), SAV(), TruncatedAV(2), ThieleTable([0, 1, Fraction(3, 2), 2])]


@pytest.fixture(scope="module")
def fig1_election():
    return load_approvals(FIG1 / "approvals.txt", 3)


@pytest.mark.parametrize(
    "rule, x, y, expected",
    [
        (PAV(), 2, 5, Fraction(3, 2)),
        (PAV(), 3, 3, Fraction(11, 6)),
        (CC(), 3, 4, 1),
        (CC(), 0, 4, 0),
        (SAV(), 1, 2, Fraction(1, 2)),
        (SAV(), 2, 4, Fraction(1, 2)),
        (TruncatedAV(2), 3, 3, 2),
        (AV(), 4, 9, 4),
        (ThieleTable([0, 1, Fraction(3, 2)]), 5, 5, Fraction(3, 2)),
    ],
)
def test_spot_values(rule, x, y, expected):
    value = rule_value(rule, x, y)
    assert isinstance(value, Fraction) and value == expected


def test_x_capped_at_y():
    assert AV().value(5, 2) == 2
    assert SAV().value(3, 2) == 1


@pytest.mark.parametrize("rule", RULES, ids=str)
@given(y=st.integers(1, 12))
def test_monotone_in_x(rule, y):
    values = [rule.value(x, y) for x in range(0, 14)]
    assert values == sorted(values)
    assert values[0] == 0


def test_parse_rule():
    assert parse_rule("trunc:2") == TruncatedAV(2)
    assert parse_rule("PAV") == PAV()
    assert parse_rule("thiele:1,2").weights == (0, 1, 2)
    for bad in ("borda", "trunc:", "trunc:x", "thiele:2,1"):
        with pytest.raises(InvalidRule):
            parse_rule(bad)


def test_thiele_rejects_bad_weights():
    with pytest.raises(InvalidRule):
        ThieleTable([1, 2])
    with pytest.raises(InvalidRule):
        ThieleTable([0, 2, 1])


def test_score_table():
    rule = ScoreTable({(0, 2): 0, (1, 2): 3, (2, 2): 4})
    assert rule.value(2, 2) == 4
    with pytest.raises(InvalidRule):
        rule.value(1, 3)
    with pytest.raises(InvalidRule):
        ScoreTable({(0, 1): 2, (1, 1): 1})


def test_concavity():
    assert PAV().is_concave(5, [1, 3, 5])
    assert ThieleTable([0, 1, 3]).is_concave(2, [2]) is False


# -- elections ----------------------------------------------------------------


def test_fig1_scores(fig1_election):
    assert committee_score(fig1_election, AV(), {"Ann", "Cale", "Dave"}) == 7
    assert committee_score(fig1_election, AV(), {"Ann", "Bob", "Dave"}) == 8
    for rule in RULES:
        assert committee_score(fig1_election, rule, set()) == 0


def test_unknown_member(fig1_election):
    with pytest.raises(UnknownCandidate):
        committee_score(fig1_election, AV(), {"Zed"})


def test_election_validation():
    with pytest.raises(InvalidElection):
        Election(("a",), (Voter("v", frozenset({"a"})),), 2)
    with pytest.raises(InvalidElection):
        Election(("a", "a"), (), 1)
    with pytest.raises(UnknownCandidate):
        Election(("a",), (Voter("v", frozenset({"b"})),), 1)


def test_load_approvals(tmp_path, fig1_election):
    assert fig1_election.candidates == ("Ann", "Bob", "Cale", "Dave", "Eva")
    assert fig1_election.approval_counts() == {"Ann": 3, "Bob": 2, "Cale": 1, "Dave": 3, "Eva": 1}
    path = tmp_path / "a.txt"
    path.write_text("v1: a, b\nv2:\n# note\nv3: b\n")
    e = load_approvals(path, 1, candidates=("b", "a", "c"))
    assert [v.voter_id for v in e.voters] == ["v1", "v3"]
    assert e.candidates == ("b", "a", "c")
    path.write_text("v1: a\nv1: b\n")
    with pytest.raises(InputFormatError):
        load_approvals(path, 1)
    path.write_text("no colon here\n")
    with pytest.raises(InputFormatError):
        load_approvals(path, 1)
