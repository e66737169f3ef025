"""
stability-lab command line.

Subcommands: dims, gamevalue, boost, audit, pipeline.
Exit codes: 0 success, 1 a stability check failed its budget, 2 config error,
3 a theorem check failed.
"""

import argparse
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from loguru import logger

from backend.cli.experiment import PIPELINES, ExperimentConfig, load_budgets, load_experiment
from backend.cli.reporting import ReportWriter, dumps, run_metadata
from backend.components.audit.reports import DEFINITIONS
from backend.components.dimensions.game import UNIVERSES, fractional_clique_value
from backend.components.primitives.domain import parse_class_spec
from backend.core.errors import BudgetFailure, ConfigError, StabilityLabError, TheoremViolationError
from backend.core.lab_pipeline import PipelineResult, lab_pipeline
from backend.core.logging import configure_logging

EXIT_OK, EXIT_BUDGET_FAILURE, EXIT_CONFIG, EXIT_THEOREM = 0, 1, 2, 3


def _int_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _name_list(text: str) -> List[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="base seed (default: config or 0)")
    common.add_argument("--workers", type=int, default=None, help="Monte Carlo worker processes")
    common.add_argument("--mode", choices=("exact", "mc"), default=None, help="exact enumeration or Monte Carlo")
    common.add_argument("--out", type=Path, default=None, help="output directory")
    common.add_argument("--log-level", default=None, help="loguru level (default: settings)")

    parser = argparse.ArgumentParser(prog="stability-lab", description="Finite-domain stability workbench")
    sub = parser.add_subparsers(dest="command", required=True)

    dims = sub.add_parser("dims", parents=[common], help="dimensions of hypothesis classes")
    dims.add_argument("--class", dest="classes", action="append", required=True, help="class spec (repeatable)")
    dims.add_argument("--m", type=_int_list, default=[1, 2, 3], help="game m grid")
    dims.add_argument("--method", choices=("exact", "mw"), default="exact")
    dims.add_argument("--universe", choices=UNIVERSES, default="class")

    game = sub.add_parser("gamevalue", parents=[common], help="consistency game value and C_m")
    game.add_argument("--class", dest="class_spec", required=True)
    game.add_argument("--m", type=_int_list, default=[1, 2, 3])
    game.add_argument("--method", choices=("exact", "mw"), default="exact")
    game.add_argument("--universe", choices=UNIVERSES, default="class")

    boost = sub.add_parser("boost", parents=[common], help="boost-sweep on a class")
    boost.add_argument("--class", dest="class_spec", required=True)
    boost.add_argument("--k", type=int, default=1, help="weak-learner subsample size")
    boost.add_argument("--m", type=_int_list, default=[8, 16])
    boost.add_argument("--pop", default="members", help="population battery spec")
    boost.add_argument("--trials", type=int, default=200, help="certification and PAC-Bayes trials")
    boost.add_argument("--boost-trials", type=int, default=20, help="boosting runs per m")

    audit = sub.add_parser("audit", parents=[common], help="stability audit of one rule")
    audit.add_argument("--class", dest="class_spec", required=True)
    audit.add_argument("--rule", required=True, help="rule spec, e.g. rejection:game or rr:ratio=2")
    audit.add_argument("--pop", default="members", help="population battery spec")
    audit.add_argument("--m", type=_int_list, default=[1, 2])
    audit.add_argument("--defs", type=_name_list, default=["dp", "rep", "gs", "mi", "tv", "pg", "maxinfo", "pacbayes"])
    audit.add_argument("--budget", type=Path, default=None, help="budget file (TOML or JSON)")
    audit.add_argument("--trials", type=int, default=200)
    audit.add_argument("--cross-check", action="store_true", help="re-decide dp/pg/maxinfo by event enumeration")

    pipeline = sub.add_parser("pipeline", parents=[common], help="run a named pipeline from a config file")
    pipeline.add_argument("name", choices=PIPELINES)
    pipeline.add_argument("--config", type=Path, default=None, help="experiment config (TOML or JSON)")
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    out: Dict[str, Any] = {}
    if args.seed is not None:
        out["seed"] = args.seed
    if args.workers is not None:
        out["workers"] = args.workers
    if args.mode is not None:
        out["mode"] = args.mode
    return out


def _config(fields: Dict[str, Any], args: argparse.Namespace) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate({**fields, **_overrides(args)})
    except ValueError as e:
        raise ConfigError(str(e)) from e


def _report(result: PipelineResult) -> int:
    print(dumps({"pipeline": result.name, "files": [str(p) for p in result.files], "failures": result.failures}))
    if not result.passed:
        raise BudgetFailure(f"{result.name}: {result.failures} checks failed their budgets")
    return EXIT_OK


def _run_dims(args: argparse.Namespace) -> int:
    config = _config(
        {"classes": args.classes, "m_grid": args.m, "game_method": args.method, "universe": args.universe}, args
    )
    return _report(lab_pipeline.run("dims-sweep", config, args.out))


def _run_gamevalue(args: argparse.Namespace) -> int:
    config = _config({"class": args.class_spec, "m_grid": args.m, "game_method": args.method}, args)
    hclass = parse_class_spec(args.class_spec)
    results = [fractional_clique_value(hclass, m, args.method, args.universe) for m in config.m_grid]
    if args.out is not None:
        writer = ReportWriter(args.out, run_metadata(config))
        writer.csv("gamevalue.csv", [r.to_dict() for r in results])
    print(dumps({"class": hclass.name, "games": [r.to_dict() for r in results]}))
    return EXIT_OK


def _run_boost(args: argparse.Namespace) -> int:
    config = _config(
        {
            "class": args.class_spec,
            "weak_k": args.k,
            "m_grid": args.m,
            "population": args.pop,
            "trials": args.trials,
            "boost_trials": args.boost_trials,
        },
        args,
    )
    return _report(lab_pipeline.run("boost-sweep", config, args.out))


def _run_audit(args: argparse.Namespace) -> int:
    unknown = [d for d in args.defs if d not in DEFINITIONS]
    if unknown:
        raise ConfigError(f"unknown definitions {unknown}")
    config = _config(
        {
            "class": args.class_spec,
            "rule": args.rule,
            "population": args.pop,
            "m_grid": args.m,
            "definitions": args.defs,
            "trials": args.trials,
            "cross_check": args.cross_check,
        },
        args,
    )
    if args.budget is not None:
        config = config.model_copy(update={"budgets": load_budgets(args.budget)})
    return _report(lab_pipeline.run("dd-audit", config, args.out))


def _run_pipeline(args: argparse.Namespace) -> int:
    config = load_experiment(args.config) if args.config is not None else ExperimentConfig()
    overrides = _overrides(args)
    if overrides:
        config = config.model_copy(update=overrides)
    return _report(lab_pipeline.run(args.name, config, args.out))


COMMANDS = {
    "dims": _run_dims,
    "gamevalue": _run_gamevalue,
    "boost": _run_boost,
    "audit": _run_audit,
    "pipeline": _run_pipeline,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        return COMMANDS[args.command](args)
    except TheoremViolationError as e:
        logger.error(f"{e}")
        return EXIT_THEOREM
    except BudgetFailure as e:
        logger.error(f"{e}")
        return EXIT_BUDGET_FAILURE
    except ConfigError as e:
        logger.error(f"Config error: {e}")
        return EXIT_CONFIG
    except StabilityLabError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
