"""
PAC-Bayes certificate: L_D(Q) <= L_S(Q) + sqrt((KL(Q || P) + ln(m / beta)) / (2 (m - 1)))
with probability at least 1 - beta over S.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import partial
from typing import Optional

import numpy as np
from loguru import logger

from backend.components.audit.information import sample_posteriors
from backend.components.audit.montecarlo import run_trials
from backend.components.audit.reports import StabilityReport
from backend.components.distributions.finite import FiniteDistribution
from backend.components.divergences.exact import LogSum, Number, compare, log_of
from backend.components.divergences.measures import kl
from backend.components.learners.base import LearningRule
from backend.components.primitives.domain import LabeledSample, PopulationDistribution
from backend.components.primitives.losses import empirical_loss, population_loss
from backend.core.confidence import interval_verdict, wilson_interval
from backend.core.errors import StabilityLabError, TheoremViolationError
from backend.core.settings import settings


@dataclass
class PacBayesEvaluation:
    empirical: float
    population: float
    kl: float
    bound: float
    violated: bool


def _inner(kl_value, m: int, beta: Number):
    """KL + ln(m / beta), exact when both parts are."""
    if isinstance(kl_value, LogSum) and isinstance(beta, Fraction):
        return kl_value + log_of(Fraction(m) / beta)
    return float(kl_value) + math.log(m / float(beta))


def _violated(gap, inner, m: int) -> bool:
    """gap > sqrt(inner / (2 (m - 1))), decided without square roots."""
    if gap <= 0:
        return False
    if isinstance(gap, Fraction) and isinstance(inner, LogSum):
        return compare(2 * (m - 1) * gap * gap, inner) > 0
    return 2 * (m - 1) * float(gap) ** 2 > float(inner) + settings.comparison_tolerance


def evaluate_posterior(
    prior: FiniteDistribution,
    posterior: FiniteDistribution,
    sample: LabeledSample,
    pop: PopulationDistribution,
    beta: Number,
) -> PacBayesEvaluation:
    """Both sides of the bound for one sample with an exact posterior."""
    m = len(sample)
    empirical = posterior.expectation(lambda h: empirical_loss(sample, h))
    population = posterior.expectation(lambda h: population_loss(pop, h))
    divergence = kl(posterior, prior)
    if divergence.infinite:
        return PacBayesEvaluation(float(empirical), float(population), math.inf, math.inf, False)
    inner = _inner(divergence.value, m, beta)
    bound = float(empirical) + math.sqrt(max(float(inner), 0.0) / (2 * (m - 1)))
    violated = _violated(population - empirical, inner, m)
    return PacBayesEvaluation(float(empirical), float(population), float(divergence), bound, violated)


def _certificate_trial(
    rule: LearningRule, pop: PopulationDistribution, m: int, beta: Number, draws: int, rng: np.random.Generator
) -> PacBayesEvaluation:
    sample = pop.draw(m, rng)
    outputs = [rule.draw(sample, int(rng.integers(0, 2 ** 63 - 1))) for _ in range(draws)]
    empirical = math.fsum(float(empirical_loss(sample, h)) for h in outputs) / draws
    population = math.fsum(float(population_loss(pop, h)) for h in outputs) / draws
    certificate = rule.kl_certificate(m)
    inner = float(certificate) + math.log(m / float(beta))
    bound = empirical + math.sqrt(inner / (2 * (m - 1)))
    violated = _violated(population - empirical, inner, m)
    return PacBayesEvaluation(empirical, population, float(certificate), bound, violated)


def _posterior_trial(
    rule: LearningRule, prior: FiniteDistribution, pop: PopulationDistribution, m: int, beta: Number,
    rng: np.random.Generator,
) -> PacBayesEvaluation:
    sample = pop.draw(m, rng)
    return evaluate_posterior(prior, rule.posterior(sample), sample, pop, beta)


def pac_bayes_certificate(
    prior: Optional[FiniteDistribution],
    rule: LearningRule,
    pop: PopulationDistribution,
    m: int,
    beta: Optional[Number] = None,
    mode: str = "exact",
    trials: Optional[int] = None,
    seed: int = 0,
    draws: int = 8,
    workers: Optional[int] = None,
) -> StabilityReport:
    """
    Evaluate the PAC-Bayes bound and its violation rate.

    Args:
        prior: data-independent prior P (unused by certified rules, which carry their own)
        rule: learner whose output law is the posterior Q = A(S)
        pop: population
        m: sample size (at least 2)
        beta: confidence (default 1/m)
        mode: "exact" sums over the sample law; "mc" draws ``trials`` samples.
            Rules exposing ``kl_certificate`` (the boosted learner) always run in
            Monte Carlo with the certificate in place of KL and L_D(Q) estimated
            from ``draws`` outputs per sample.
        trials, seed, workers: Monte Carlo controls

    Returns:
        StabilityReport with the violation rate as estimate

    Raises:
        TheoremViolationError: when the exact violation rate exceeds beta
    """
    if m < 2:
        raise StabilityLabError("PAC-Bayes bound needs m >= 2")
    beta = Fraction(1, m) if beta is None else beta
    if not 0 < float(beta) <= 1:
        raise StabilityLabError("beta must be in (0, 1]")

    certified = hasattr(rule, "kl_certificate")
    if prior is None and not certified:
        raise StabilityLabError(f"PAC-Bayes for {rule.name} needs a prior")
    if mode == "exact" and not certified:
        zero = Fraction(0) if pop.weights.is_exact else 0.0
        rate, gap_max, bound_mean = zero, -math.inf, 0.0
        for sample, ps, post in sample_posteriors(rule, pop, m):
            result = evaluate_posterior(prior, post, sample, pop, beta)
            if result.violated:
                rate += ps
            gap_max = max(gap_max, result.population - result.empirical)
            bound_mean += float(ps) * result.bound
        if compare(rate, beta) > 0:
            raise TheoremViolationError("PAC-Bayes violation rate <= beta", {"rate": float(rate), "beta": float(beta)})
        return StabilityReport(
            definition="pacbayes",
            rule=rule.name,
            m=m,
            estimate=rate,
            exact=isinstance(rate, Fraction),
            passed=True,
            details={"beta": beta, "mean_bound": bound_mean, "max_gap": gap_max, "kl_source": "exact"},
        )

    if mode not in ("exact", "mc"):
        raise StabilityLabError(f"unknown PAC-Bayes mode {mode!r}")
    trials = settings.default_trials if trials is None else trials
    if certified:
        trial = partial(_certificate_trial, rule, pop, m, beta, draws)
        source = "certificate"
    else:
        trial = partial(_posterior_trial, rule, prior, pop, m, beta)
        source = "exact"
    results = run_trials(trial, trials, seed, workers)
    violations = sum(r.violated for r in results)
    low, high = wilson_interval(violations, trials)
    rate = violations / trials
    radius = max(high - rate, rate - low)
    passed = interval_verdict(low, high, float(beta))
    if passed is False:
        logger.warning(f"PAC-Bayes violation rate {rate:.4f} above beta={float(beta):.4f} beyond the MC radius")
    elif passed is None:
        logger.info(f"PAC-Bayes violation rate {rate:.4f} within the MC radius of beta={float(beta):.4f}; inconclusive")
    return StabilityReport(
        definition="pacbayes",
        rule=rule.name,
        m=m,
        estimate=rate,
        exact=False,
        radius=radius,
        passed=passed,
        details={
            "beta": beta,
            "interval": [low, high],
            "mean_bound": math.fsum(r.bound for r in results) / trials,
            "max_gap": max(r.population - r.empirical for r in results),
            "mean_kl": math.fsum(r.kl for r in results) / trials,
            "kl_source": source,
            "draws": draws if certified else None,
        },
        trials=trials,
        mode="mc",
    )
