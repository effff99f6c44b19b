"""Approval-based committee voting constrained by relational database dependencies."""

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
    parse_constraints,
    pretty_print,
)
from abcc.election import (
    AV,
    CC,
    PAV,
    SAV,
    Committee,
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
from abcc.mip import EncoderOptions, MipModel, encode, encode_base, encode_dc, encode_tgd, group_voters, model_stats
from abcc.oracle import brute_force_winner
from abcc.poly import dc_key_greedy, detect_pattern, greedy_single_tgd, mcmf_two_tgds, min_cost_max_flow
from abcc.relational import Database, RelationSchema, Schema, ground_conjunction, load_schema, validate_keys
from abcc.solver import SolveReport, export_lp, solve

__version__ = "0.1.0"
