"""
Stability Lab Pipeline - main orchestrator for the end-to-end experiments.

di-equivalence: game value -> mixture prior -> rejection sampler -> Renyi certificates -> subsample witness
dd-audit:       every requested stability definition on one rule over a population battery
boost-sweep:    certified weak learner -> boosted learner -> KL ledger and PAC-Bayes violation rate
dims-sweep:     Littlestone, clique and threshold dimensions plus game values per class
"""
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np
from loguru import logger

from backend.cli.experiment import PIPELINES, ExperimentConfig, parse_population_spec
from backend.cli.reporting import ReportWriter, run_metadata
from backend.components.audit.checkers import kl_stability, perfect_generalization, renyi_stability
from backend.components.audit.manager import AuditManager
from backend.components.audit.pac_bayes import pac_bayes_certificate
from backend.components.audit.sample_space import realizable_samples
from backend.components.audit.witness import subsample_witness
from backend.components.boosting.booster import BoostConfig, boost
from backend.components.boosting.learner import BoostedLearner
from backend.components.boosting.ledger import BoostedLaw, boosted_law, kl_ledger
from backend.components.dimensions.manager import DIMENSIONS, dimension_manager
from backend.components.divergences.exact import log_of
from backend.components.learners.game_prior import game_mixture_prior
from backend.components.learners.registry import build_rule
from backend.components.learners.rejection import finite_class_weak_learner
from backend.components.learners.weak import certify_weak_learner
from backend.components.primitives.domain import parse_class_spec
from backend.core.errors import BudgetExceededError, ConfigError, TheoremViolationError


@dataclass
class PipelineResult:
    """Files written by one pipeline run and a summary for the console."""
    name: str
    files: List[Path] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)
    failures: int = 0

    @property
    def passed(self) -> bool:
        return self.failures == 0


class StabilityLabPipeline:
    """Runs the named pipelines; outputs depend on the config and its seed only."""

    def __init__(self):
        self._pipelines: Dict[str, Callable[[ExperimentConfig, ReportWriter], PipelineResult]] = {
            "di-equivalence": self.di_equivalence,
            "dd-audit": self.dd_audit,
            "boost-sweep": self.boost_sweep,
            "dims-sweep": self.dims_sweep,
        }

    def run(self, name: Optional[str], config: ExperimentConfig, out_dir: Optional[Path] = None) -> PipelineResult:
        """
        Run a pipeline.

        Args:
            name: pipeline name (defaults to the config's ``pipeline``)
            config: validated experiment config
            out_dir: output directory (defaults to the config's output directory)

        Returns:
            PipelineResult with the written files
        """
        name = name or config.pipeline
        if name not in PIPELINES:
            raise ConfigError(f"unknown pipeline {name!r}; choose from {', '.join(PIPELINES)}")
        directory = Path(out_dir) if out_dir is not None else Path(config.output.directory)
        writer = ReportWriter(directory, run_metadata(config), config.output.prefix)
        logger.info(f"Running {name} pipeline '{config.name}' (seed={config.seed}) into {directory}")
        result = self._pipelines[name](config, writer)
        result.files = list(writer.written)
        logger.info(f"{name} finished: {len(result.files)} files, {result.failures} budget failures")
        return result

    def di_equivalence(self, config: ExperimentConfig, writer: ReportWriter) -> PipelineResult:
        hclass = config.hypothesis_class()
        L = config.truncation
        game_prior = game_mixture_prior(hclass, L, config.game_method)
        sampler = game_prior.rejection_sampler()
        prior = game_prior.prior

        clique_rows, certificate_rows, witness_rows = [], [], []
        for m in config.m_grid:
            if m > L:
                logger.warning(f"m={m} lies beyond the truncation L={L}; skipped")
                continue
            C_m = game_prior.clique_numbers[m]
            q = game_prior.consistency_bound(m)
            eps = log_of(q)
            clique_rows.append(
                {"m": m, "game_value": 1 / C_m, "clique_number": C_m, "two_to_m": 2 ** m, "q": q, "eps": float(eps)}
            )

            pure = perfect_generalization(sampler, m, prior, eps, hclass=hclass)
            chain = [
                ("renyi_inf", pure),
                ("renyi_2", renyi_stability(sampler, m, 2, eps, prior, hclass=hclass)),
                ("kl", kl_stability(sampler, m, eps, prior, hclass=hclass)),
            ]
            for label, report in chain:
                if not report.passed:
                    raise TheoremViolationError(
                        f"{label}(Q_S || P) <= ln q(m) on every realizable sample", {"m": m, "mass": str(report.estimate)}
                    )

            samples = realizable_samples(hclass, m)[: config.witness_samples]
            witnesses = [subsample_witness(sampler, prior, sample, kl_bound=eps) for sample in samples]
            for sample, w in zip(samples, witnesses):
                witness_rows.append({"m": m, "sample": str(sample), **w.to_dict()})
            certificate_rows.append(
                {
                    "m": m,
                    "eps": float(eps),
                    "pure_pg_mass": pure.estimate,
                    "renyi_2_mass": chain[1][1].estimate,
                    "kl_mass": chain[2][1].estimate,
                    "witness_samples": len(witnesses),
                    "witness_holds": all(w.holds for w in witnesses),
                    "witness_min_slack": min((w.slack for w in witnesses), default=None),
                }
            )

        writer.csv("di_equivalence_cliques.csv", clique_rows)
        writer.csv("di_equivalence_certificates.csv", certificate_rows)
        writer.csv("di_equivalence_witness.csv", [{k: v for k, v in r.items() if k != "checks"} for r in witness_rows])
        summary = {
            "class": hclass.name,
            "rule": sampler.name,
            "mixture": game_prior.mixture.report(),
            "cliques": clique_rows,
            "certificates": certificate_rows,
        }
        writer.json("di_equivalence.json", summary)
        failures = sum(1 for row in certificate_rows if not row["witness_holds"])
        return PipelineResult("di-equivalence", summary=summary, failures=failures)

    def dd_audit(self, config: ExperimentConfig, writer: ReportWriter) -> PipelineResult:
        hclass = config.hypothesis_class()
        rule = build_rule(config.rule, hclass, trials=config.trials, seed=config.seed, truncation=config.truncation)
        pops = parse_population_spec(config.population, hclass, config.seed)
        manager = AuditManager(cross_check=config.cross_check)

        records, documents, failures = [], [], 0
        for index, pop in enumerate(pops):
            result = manager.audit(
                rule, pop, config.m_grid, config.definitions, config.mode, config.budgets,
                config.trials, config.seed, hclass=hclass, workers=config.workers,
            )
            records.extend({"population": index, **record} for record in result.to_records())
            documents.append({"population": index, "support": [list(a) for a in pop.support()], **result.to_dict()})
            failures += len(result.failures)

        writer.csv("dd_audit.csv", records)
        summary = {"class": hclass.name, "rule": rule.name, "populations": documents}
        writer.json("dd_audit.json", summary)
        return PipelineResult("dd-audit", summary={"rule": rule.name, "reports": len(records)}, failures=failures)

    def boost_sweep(self, config: ExperimentConfig, writer: ReportWriter) -> PipelineResult:
        hclass = config.hypothesis_class()
        weak = finite_class_weak_learner(hclass, k=config.weak_k)
        certificate = certify_weak_learner(weak, trials=config.trials, seed=config.seed)
        boost_config = BoostConfig.from_params(weak.weak_params)
        learner = BoostedLearner(weak, boost_config, m_range=config.m_grid)
        pops = parse_population_spec(config.population, hclass, config.seed)

        rows, ledger_rows, failures = [], [], 0
        for m in config.m_grid:
            mixture = self._within_budget(learner.boosted_prior, m, what=f"boosted prior at m={m}")
            laws: Dict[object, Optional[BoostedLaw]] = {}
            interpolated, law_runs, kl_totals, frequencies = 0, 0, [], []
            for trial in range(config.boost_trials):
                rng = np.random.default_rng([config.seed, m, trial])
                sample = pops[trial % len(pops)].draw(m, rng)
                _, transcript = boost(weak, sample, boost_config, rng)
                key = sample.pairs
                if key not in laws:
                    laws[key] = self._within_budget(boosted_law, weak, sample, boost_config, what=f"boosted law on {sample}")
                ledger = kl_ledger(transcript, weak, mixture=mixture, law=laws[key])
                interpolated += transcript.interpolates
                law_runs += ledger.law_tier
                kl_totals.append(float(transcript.kl_total))
                frequencies.append(transcript.resample_frequency)
                ledger_rows.extend(
                    {"m": m, "trial": trial, "law_tier": ledger.law_tier, **check} for check in ledger.to_records()
                )

            row = {
                "m": m,
                "T": boost_config.rounds(m),
                "trials": config.boost_trials,
                "interpolation_rate": interpolated / config.boost_trials,
                "law_tier_rate": law_runs / config.boost_trials,
                "kl_total_mean": float(np.mean(kl_totals)),
                "kl_total_max": max(kl_totals),
                "kl_certificate": float(learner.kl_certificate(m)),
                "resample_frequency": float(np.mean(frequencies)),
                "pacbayes_violation_rate": None,
                "pacbayes_radius": None,
            }
            if m >= 2:
                report = pac_bayes_certificate(
                    None, learner, pops[0], m, Fraction(1, m), mode="mc",
                    trials=config.trials, seed=config.seed, workers=config.workers,
                )
                row["pacbayes_violation_rate"] = report.estimate
                row["pacbayes_radius"] = report.radius
                failures += report.failed
            rows.append(row)
            logger.info(f"boost-sweep m={m}: {row}")

        writer.csv("boost_sweep.csv", rows)
        writer.csv("boost_ledger.csv", ledger_rows)
        summary = {
            "class": hclass.name,
            "weak": certificate.to_dict(),
            "boost": boost_config.to_dict(),
            "sweep": rows,
        }
        writer.json("boost_sweep.json", summary)
        return PipelineResult("boost-sweep", summary=summary, failures=failures)

    @staticmethod
    def _within_budget(build: Callable[..., Any], *args, what: str) -> Optional[Any]:
        """Law-tier inputs; None (transcript tier only) when an enumeration cap is hit."""
        try:
            return build(*args)
        except BudgetExceededError as e:
            logger.info(f"Law tier skipped for {what}: {e}")
            return None

    def dims_sweep(self, config: ExperimentConfig, writer: ReportWriter) -> PipelineResult:
        reports = []
        for spec in config.class_specs():
            hclass = parse_class_spec(spec)
            reports.append(
                dimension_manager.compute(hclass, DIMENSIONS, config.m_grid, config.game_method, config.universe)
            )
        writer.csv("dims_sweep.csv", [r.to_record() for r in reports])
        summary = {"classes": [r.to_dict() for r in reports]}
        writer.json("dims_sweep.json", summary)
        return PipelineResult("dims-sweep", summary=summary)


# Global pipeline instance
lab_pipeline = StabilityLabPipeline()


def run_pipeline(name: str, config: ExperimentConfig, out_dir: Optional[Path] = None) -> PipelineResult:
    return lab_pipeline.run(name, config, out_dir)
