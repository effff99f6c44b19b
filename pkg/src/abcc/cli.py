"""Command-line entry point: ``abcc solve`` and ``abcc ablation``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional

from abcc.constraints import ConstraintSet, parse_constraints
from abcc.election import AV, Election, ScoringRule, load_approvals, load_candidates, parse_rule
from abcc.errors import AbccError, PatternViolation
from abcc.mip import EncoderOptions, encode, model_stats
from abcc.oracle import brute_force_winner
from abcc.poly import (
    DcKeyPattern,
    DoubleTgdPattern,
    SingleTgdPattern,
    dc_key_greedy,
    detect_pattern,
    greedy_single_tgd,
    mcmf_two_tgds,
)
from abcc.relational import Database, load_schema, validate_keys
from abcc.solver import INFEASIBLE, OPTIMAL, TIMEOUT, export_lp, solve

logger = logging.getLogger("abcc")

SOLVERS = ("auto", "bnb", "oracle", "greedy-tgd", "mcmf", "greedy-dc", "lp-export")
EXIT_CODES = {OPTIMAL: 0, "exported": 0, INFEASIBLE: 2, TIMEOUT: 3}
EXIT_INPUT_ERROR = 1
REPORT_SCHEMA_VERSION = 1


def parse_opt(spec: str) -> EncoderOptions:
    """``all``, ``none`` or a comma list of ``group,prune,contract``."""
    spec = spec.strip().lower()
    if spec == "all":
        return EncoderOptions.all()
    if spec in ("none", ""):
        return EncoderOptions.none()
    parts = {p.strip() for p in spec.split(",") if p.strip()}
    unknown = parts - {"group", "prune", "contract"}
    if unknown:
        raise ValueError(f"unknown optimization(s): {', '.join(sorted(unknown))}")
    return EncoderOptions("group" in parts, "prune" in parts, "contract" in parts)


@dataclass
class RunConfig:
    schema: Path
    db_dir: Path
    approvals: Path
    k: int
    constraints: Optional[Path] = None
    candidates: Optional[Path] = None
    rule: str = "av"
    solver: str = "auto"
    options: EncoderOptions = field(default_factory=EncoderOptions.all)
    time_limit_ms: Optional[float] = None
    output: Optional[Path] = None
    lp_output: Optional[Path] = None
    jobs: int = 1

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.solver not in SOLVERS:
            raise ValueError(f"unknown solver {self.solver!r}")


@dataclass
class RunReport:
    status: str
    solver: str
    rule: str
    k: int
    committee: List[str]
    approvals: Dict[str, int]
    objective: Optional[str]
    objective_decimal: Optional[float]
    model_stats: Optional[Dict[str, int]]
    timings_ms: Dict[str, float]
    optimizations: List[str]
    nodes_explored: Optional[int] = None
    lp_file: Optional[str] = None
    schema_version: int = REPORT_SCHEMA_VERSION

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.status]


class InputError(AbccError):
    pass


@dataclass
class Instance:
    election: Election
    db: Database
    gamma: ConstraintSet
    rule: ScoringRule


def load_instance(config: RunConfig) -> Instance:
    schema = load_schema(config.schema)
    db = Database.load(schema, config.db_dir)
    violations = validate_keys(db, schema)
    if violations:
        raise InputError(
            "key violations in the database:\n" + "\n".join(f"  {v}" for v in violations)
        )
    candidates = load_candidates(config.candidates) if config.candidates else None
    election = load_approvals(config.approvals, config.k, candidates)
    if config.constraints:
        gamma = parse_constraints(Path(config.constraints).read_text(encoding="utf-8"), schema)
    else:
        gamma = ConstraintSet()
    return Instance(election, db, gamma, parse_rule(config.rule))


def _fast_path(name, inst: Instance):
    pattern = detect_pattern(inst.db.schema, inst.gamma, inst.db)
    wanted = {"greedy-tgd": SingleTgdPattern, "mcmf": DoubleTgdPattern, "greedy-dc": DcKeyPattern}[name]
    if not isinstance(pattern, wanted):
        raise PatternViolation(f"solver {name} does not apply: constraints do not have the required shape")
    if inst.rule != AV():
        raise PatternViolation(f"solver {name} requires --rule av")
    algo = {"greedy-tgd": greedy_single_tgd, "mcmf": mcmf_two_tgds, "greedy-dc": dc_key_greedy}[name]
    return algo(inst.election, inst.db, pattern)


def _auto_solver(inst: Instance) -> str:
    if inst.rule == AV():
        pattern = detect_pattern(inst.db.schema, inst.gamma, inst.db)
        if isinstance(pattern, SingleTgdPattern):
            return "greedy-tgd"
        if isinstance(pattern, DoubleTgdPattern):
            return "mcmf"
        if isinstance(pattern, DcKeyPattern):
            return "greedy-dc"
    return "bnb"


def run(config: RunConfig) -> RunReport:
    """Load, validate, solve (or export) and write the JSON report."""
    t0 = time.perf_counter()
    inst = load_instance(config)
    timings = {"load": (time.perf_counter() - t0) * 1000, "ground": 0.0, "build": 0.0, "solve": 0.0}
    election = inst.election
    solver = _auto_solver(inst) if config.solver == "auto" else config.solver
    logger.info("solver: %s", solver)

    stats = None
    nodes = None
    lp_file = None
    committee = None
    status = OPTIMAL

    if solver in ("bnb", "lp-export"):
        model = encode(election, inst.db, inst.gamma, inst.rule, config.options)
        stats = model_stats(model)
        timings["ground"] = model.timings["ground_ms"]
        timings["build"] = model.timings["build_ms"]
        if solver == "lp-export":
            lp_path = config.lp_output or (
                config.output.with_suffix(".lp") if config.output else Path("model.lp")
            )
            lp_path.write_text(export_lp(model), encoding="utf-8")
            lp_file = str(lp_path)
            status = "exported"
        else:
            report = solve(model, election, inst.db, inst.gamma, config.time_limit_ms, check_model=False)
            timings["solve"] = report.solve_time
            status, committee, nodes = report.status, report.committee, report.nodes_explored
    else:
        t1 = time.perf_counter()
        if solver == "oracle":
            committee = brute_force_winner(election, inst.db, inst.gamma, inst.rule)
        else:
            committee = _fast_path(solver, inst)
        timings["solve"] = (time.perf_counter() - t1) * 1000
        status = OPTIMAL if committee is not None else INFEASIBLE

    counts = election.approval_counts()
    members = list(committee.members) if committee else []
    objective = committee.score if committee else None
    report = RunReport(
        status=status,
        solver=solver,
        rule=str(inst.rule),
        k=election.k,
        committee=members,
        approvals={c: counts[c] for c in members},
        objective=str(objective) if objective is not None else None,
        objective_decimal=float(objective) if objective is not None else None,
        model_stats=stats,
        timings_ms=timings,
        optimizations=config.options.names,
        nodes_explored=nodes,
        lp_file=lp_file,
    )
    if config.output:
        config.output.write_text(report.to_json() + "\n", encoding="utf-8")
    return report


def ablation(config: RunConfig, out_dir: Path, solve_models: bool = True, plot: bool = True) -> List[dict]:
    """Encode the instance under all eight option combinations.

    Writes ``ablation.csv`` and, with ``plot``, ``ablation.png`` to ``out_dir``.
    """
    inst = load_instance(config)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for options in EncoderOptions.combinations():
        model = encode(inst.election, inst.db, inst.gamma, inst.rule, options)
        row = {
            "label": options.label,
            "group": int(options.group_voters),
            "prune": int(options.prune_scores),
            "contract": int(options.contract_dcs),
            **model_stats(model),
            "build_ms": round(model.timings["build_ms"], 3),
        }
        if solve_models:
            report = solve(model, inst.election, inst.db, inst.gamma, config.time_limit_ms, check_model=False)
            row["status"] = report.status
            row["objective"] = str(report.objective) if report.objective is not None else ""
            row["solve_ms"] = round(report.solve_time, 3)
        rows.append(row)
    with open(out_dir / "ablation.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
    if plot:
        from abcc.plotting import plot_ablation

        plot_ablation(rows, out_dir / "ablation.png")
    return rows


def _add_instance_args(p: argparse.ArgumentParser):
    p.add_argument("--schema", required=True, type=Path, help="schema JSON file")
    p.add_argument("--db", required=True, type=Path, dest="db_dir", help="directory of <relation>.csv files")
    p.add_argument("--approvals", required=True, type=Path, help="approval profile, 'voter: cand,cand' per line")
    p.add_argument("--constraints", type=Path, help="TGD/DC file")
    p.add_argument("--candidates", type=Path, help="candidate ids, one per line (fixes the tie-break order)")
    p.add_argument("--rule", default="av", help="av | pav | cc | sav | trunc:<p> | thiele:<w1,w2,...>")
    p.add_argument("--k", required=True, type=int, help="committee size")
    p.add_argument("--opt", default="all", help="all | none | comma list of group,prune,contract")
    p.add_argument("--time-limit-ms", type=float, default=None)
    p.add_argument("--jobs", type=int, default=1, help="worker count (currently runs sequentially)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="abcc", description="Approval-based committee voting under database constraints")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="find a winning legal committee")
    _add_instance_args(p_solve)
    p_solve.add_argument("--solver", default="auto", choices=SOLVERS)
    p_solve.add_argument("--out", type=Path, help="write the JSON report here (default: stdout)")
    p_solve.add_argument("--lp-out", type=Path, help="LP file path for --solver lp-export")

    p_abl = sub.add_parser("ablation", help="model size per optimization combination, as CSV and a figure")
    _add_instance_args(p_abl)
    p_abl.add_argument("--out-dir", type=Path, required=True)
    p_abl.add_argument("--no-solve", action="store_true", help="only build the models")
    p_abl.add_argument("--no-plot", action="store_true")
    return parser


def _configure_logging(verbosity: int):
    level = os.environ.get("ABCC_LOG")
    if level is None:
        level = ("WARNING", "INFO", "DEBUG")[min(verbosity, 2)]
    logging.basicConfig(level=level.upper(), format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose)
    try:
        config = RunConfig(
            schema=args.schema,
            db_dir=args.db_dir,
            approvals=args.approvals,
            k=args.k,
            constraints=args.constraints,
            candidates=args.candidates,
            rule=args.rule,
            solver=getattr(args, "solver", "bnb"),
            options=parse_opt(args.opt),
            time_limit_ms=args.time_limit_ms,
            output=getattr(args, "out", None),
            lp_output=getattr(args, "lp_out", None),
            jobs=args.jobs,
        )
        if args.command == "ablation":
            rows = ablation(config, args.out_dir, solve_models=not args.no_solve, plot=not args.no_plot)
            writer = csv.DictWriter(sys.stdout, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)
            return 0
        report = run(config)
    except (AbccError, OSError, ValueError) as exc:
        print(f"abcc: error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    if config.output is None:
        print(report.to_json())
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
