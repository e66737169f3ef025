"""
Audit Manager - runs a battery of stability definitions on one rule over an
m grid, maps declared budgets onto the checkers and optionally cross-checks
event-quantified verdicts by brute-force event enumeration.
"""
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Mapping, Optional, Sequence

from loguru import logger

from backend.components.audit import checkers
from backend.components.audit.event_enumeration import (
    dp_check_by_events,
    max_information_by_events,
    pg_check_by_events,
)
from backend.components.audit.information import dd_kl_stability_check, max_information_check, mutual_information_check
from backend.components.audit.pac_bayes import pac_bayes_certificate
from backend.components.audit.reports import DEFAULT_BUDGETS, DEFINITIONS, StabilityBudget, StabilityReport
from backend.components.audit.witness import subsample_witness
from backend.components.distributions.finite import FiniteDistribution
from backend.components.divergences.measures import at_most
from backend.components.learners.base import LearningRule
from backend.components.primitives.domain import HypothesisClass, PopulationDistribution
from backend.core.errors import BudgetFailure, StabilityLabError, TheoremViolationError
from config.environment import env_center


@dataclass
class AuditResult:
    """Every report of one audit run plus the (definition, m) cells that were skipped."""
    rule: str
    reports: List[StabilityReport] = field(default_factory=list)
    skipped: Dict[str, str] = field(default_factory=dict)

    @property
    def failures(self) -> List[StabilityReport]:
        return [r for r in self.reports if r.failed]

    def raise_for_failures(self) -> None:
        if self.failures:
            names = ", ".join(f"{r.definition}@m={r.m}" for r in self.failures)
            raise BudgetFailure(f"{self.rule} failed its declared budget on {names}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "rule": self.rule,
            "reports": [r.to_dict() for r in self.reports],
            "skipped": dict(sorted(self.skipped.items())),
        }

    def to_records(self) -> List[Dict[str, Any]]:
        return [r.to_record() for r in self.reports]


def resolve_budgets(budgets: Optional[Mapping[str, StabilityBudget]] = None) -> Dict[str, StabilityBudget]:
    """Declared budgets over the defaults, keyed by definition."""
    resolved = dict(DEFAULT_BUDGETS)
    for name, budget in (budgets or {}).items():
        if budget.definition != name:
            raise StabilityLabError(f"budget under {name!r} declares definition {budget.definition!r}")
        resolved[name] = budget
    return resolved


class AuditManager:
    """Dispatches stability definitions to the checkers."""

    def __init__(self, cross_check: bool = False):
        self.cross_check = cross_check

    def audit(
        self,
        rule: LearningRule,
        pop: Optional[PopulationDistribution],
        m_grid: Sequence[int],
        definitions: Sequence[str] = DEFINITIONS,
        mode: str = checkers.EXACT,
        budgets: Optional[Mapping[str, StabilityBudget]] = None,
        trials: Optional[int] = None,
        seed: int = 0,
        hclass: Optional[HypothesisClass] = None,
        prior: Optional[FiniteDistribution] = None,
        workers: Optional[int] = None,
    ) -> AuditResult:
        """
        Audit a rule.

        Args:
            rule: rule under audit
            pop: population (DD definitions and sample-drawing checks need one)
            m_grid: sample sizes
            definitions: subset of DEFINITIONS
            mode: "exact" or "mc"
            budgets: declared budgets per definition (defaults fill the rest)
            trials, seed, workers: Monte Carlo controls
            hclass: realizable-sample source when no population is given
            prior: data-independent prior (DI definitions); the marginal prior otherwise

        Returns:
            AuditResult; over-budget and inapplicable cells are listed in ``skipped``

        Raises:
            TheoremViolationError: when a checked theorem fails or cross-checks disagree
        """
        unknown = set(definitions) - set(DEFINITIONS)
        if unknown:
            raise StabilityLabError(f"unknown definitions: {sorted(unknown)}")
        if mode not in (checkers.EXACT, checkers.MONTE_CARLO):
            raise StabilityLabError(f"unknown audit mode {mode!r}; use exact or mc")
        resolved = resolve_budgets(budgets)
        workers = env_center.run_config.workers if workers is None else workers
        result = AuditResult(rule.name)

        for definition in definitions:
            budget = resolved[definition]
            for m in m_grid:
                key = f"{definition}:m={m}"
                try:
                    report = self._check(definition, rule, pop, m, budget, mode, trials, seed, hclass, prior, workers)
                except TheoremViolationError:
                    raise
                except StabilityLabError as e:
                    logger.warning(f"Skipping {key} for {rule.name}: {e}")
                    result.skipped[key] = str(e)
                    continue
                if report.budget is None:
                    report.budget = budget
                if self.cross_check and report.exact:
                    self._cross_check(report, rule, pop, m, budget, hclass, prior)
                result.reports.append(report)
                logger.info(
                    f"{definition} m={m} {rule.name}: estimate={float(report.estimate):.6g} passed={report.passed}"
                )
        return result

    def _check(
        self, definition, rule, pop, m, budget: StabilityBudget, mode, trials, seed, hclass, prior, workers
    ) -> StabilityReport:
        if definition in ("rep", "gs", "mi", "maxinfo", "pacbayes", "witness") and pop is None:
            raise StabilityLabError(f"{definition} needs a population")

        if definition == "dp":
            dp_mode = "auto" if mode == checkers.EXACT else checkers.SEARCH
            return checkers.dp_check(
                rule, m, budget.value("eps", Fraction(0)), budget.value("delta", Fraction(0)), dp_mode, trials, seed
            )
        if definition == "rep":
            if budget.eta is not None:
                return checkers.two_param_replicability(
                    rule, pop, m, budget.value("eta"), mode, trials, seed=seed, nu=budget.value("nu"), workers=workers
                )
            return checkers.replicability(rule, pop, m, mode, trials, seed, budget.value("rho"), workers)
        if definition == "gs":
            return checkers.global_stability(rule, pop, m, mode, trials, seed, budget.value("eta"), workers)
        if definition == "mi":
            return mutual_information_check(rule, pop, m, budget)
        if definition == "tv":
            return checkers.tv_stability(rule, m, prior, pop, hclass, mode, trials, seed, budget.f_at(m), workers)
        if definition == "pg":
            delta = budget.value("delta", Fraction(0))
            return checkers.perfect_generalization(
                rule, m, prior, budget.value("eps", Fraction(0)), delta,
                "pure" if delta == 0 else "approx", pop, hclass, budget.beta_at(m),
            )
        if definition == "maxinfo":
            return max_information_check(rule, pop, m, budget)
        if definition == "pacbayes":
            reference = prior if prior is not None else getattr(rule, "prior", None)
            return pac_bayes_certificate(
                reference, rule, pop, m, budget.beta_at(m), mode, trials, seed, workers=workers
            )
        if definition == "renyi":
            return checkers.renyi_stability(
                rule, m, budget.value("alpha", Fraction(2)), _bound(budget, m), prior, pop, hclass, budget.beta_at(m)
            )
        if definition == "kl":
            if prior is None and pop is not None:
                return dd_kl_stability_check(rule, pop, m, budget)
            return checkers.kl_stability(rule, m, _bound(budget, m), prior, pop, hclass, budget.beta_at(m))
        return self._witness(rule, pop, m, budget, mode, trials, seed, prior)

    def _witness(self, rule, pop, m, budget: StabilityBudget, mode, trials, seed, prior) -> StabilityReport:
        if prior is not None:
            reference = prior
        elif hasattr(rule, "boosted_prior"):
            reference = rule.boosted_prior(m).flatten()
        else:
            reference = getattr(rule, "prior", None)
        if reference is None:
            raise StabilityLabError(f"witness for {rule.name} needs a prior")
        sample = pop.draw(m, seed)
        witness_mode = "exact" if mode == checkers.EXACT else "mc"
        outcome = subsample_witness(
            rule, reference, sample, kl_bound=budget.f_at(m), mode=witness_mode, trials=trials, seed=seed
        )
        return StabilityReport(
            definition="witness",
            rule=rule.name,
            m=m,
            estimate=outcome.prior_mass,
            exact=outcome.exact,
            radius=outcome.radius,
            passed=outcome.holds,
            budget=budget,
            witness={"sample": str(sample)},
            details=outcome.to_dict(),
            trials=outcome.trials,
            mode=witness_mode if outcome.exact or witness_mode == "mc" else "float",
        )

    def _cross_check(self, report: StabilityReport, rule, pop, m, budget: StabilityBudget, hclass, prior) -> None:
        """Re-decide dp / pg / maxinfo by event enumeration; disagreement is a theorem failure."""
        try:
            if report.definition == "dp":
                agree = dp_check_by_events(
                    rule, m, budget.value("eps", Fraction(0)), budget.value("delta", Fraction(0))
                ) == report.passed
            elif report.definition == "pg":
                agree = pg_check_by_events(
                    rule, m, prior, budget.value("eps", Fraction(0)), budget.value("delta", Fraction(0)),
                    pop, hclass, budget.beta_at(m),
                ) == report.passed
            elif report.definition == "maxinfo":
                by_events = max_information_by_events(rule, pop, m, budget.value("eps", Fraction(0)))
                agree = at_most(by_events, report.estimate) and at_most(report.estimate, by_events)
            else:
                return
        except TheoremViolationError:
            raise
        except StabilityLabError as e:
            logger.debug(f"No event cross-check for {report.definition} at m={m}: {e}")
            return
        report.details["event_cross_check"] = agree
        if not agree:
            raise TheoremViolationError(
                "hockey-stick and event-enumeration verdicts agree", {"definition": report.definition, "m": m}
            )


def _bound(budget: StabilityBudget, m: int):
    bound = budget.f_at(m)
    return math.inf if bound is None else bound


# Global audit manager instance
audit_manager = AuditManager()
