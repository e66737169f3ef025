"""
Rejection sampler: draw from the prior until the draw is consistent with the sample.
"""

import math
from fractions import Fraction
from typing import Callable, Optional, Union

import numpy as np
from loguru import logger

from backend.components.distributions.finite import FiniteDistribution, make_rng
from backend.components.divergences.measures import DivergenceValue, kl
from backend.components.learners.base import LearningRule, Universe, WeakParams
from backend.components.primitives.domain import Domain, Hypothesis, HypothesisClass, LabeledSample, all_functions
from backend.core.budgets import check_budget
from backend.core.errors import (
    DistributionError,
    PriorNeverConsistentError,
    RejectionCapExceededError,
    StabilityLabError,
)
from backend.core.settings import settings

ConsistencyBound = Callable[[int], Optional[float]]


def uniform_prior(universe: Universe) -> FiniteDistribution:
    """Uniform prior over a class or over every function on a domain."""
    if isinstance(universe, HypothesisClass):
        return FiniteDistribution.uniform(universe.members)
    check_budget("class_members", 1 << universe.size, hint="uniform prior over all functions")
    return FiniteDistribution.uniform(tuple(all_functions(universe)))


class RejectionSampler(LearningRule):
    """
    posterior(S) = prior conditioned on cons(S); ``draw`` runs the do-while loop.

    The native coupling shares the prior stream: both runs return the first
    prior draw lying in their consistency set, so they agree exactly when that
    draw falls in cons(S1) and cons(S2).
    """
    is_interpolating = True
    depends_on_distinct = True

    def __init__(
        self,
        prior: FiniteDistribution,
        universe: Optional[Universe] = None,
        consistency_bound: Optional[ConsistencyBound] = None,
        name: str = "rejection",
    ):
        atoms = [a for a in prior.atoms if not isinstance(a, Hypothesis)]
        if atoms or not prior.atoms:
            raise DistributionError("rejection prior must be over hypotheses")
        if universe is None:
            universe = Domain(prior.atoms[0].size)
        super().__init__(universe if isinstance(universe, Domain) else universe.domain)
        self.prior = prior
        self.universe = universe
        self.consistency_bound = consistency_bound
        self.name = name

    def consistency_mass(self, sample: LabeledSample):
        pattern = sample.pattern()
        if pattern is None:
            return Fraction(0) if self.prior.is_exact else 0.0
        mask, labels = pattern
        return self.prior.prob_of(lambda h: h.agrees(mask, labels))

    def _posterior(self, sample: LabeledSample) -> FiniteDistribution:
        pattern = sample.pattern()
        if pattern is None or self.consistency_mass(sample) == 0:
            raise PriorNeverConsistentError()
        mask, labels = pattern
        return self.prior.condition(lambda h: h.agrees(mask, labels))

    def draw_cap(self, sample: LabeledSample) -> int:
        q = None if self.consistency_bound is None else self.consistency_bound(max(1, len(sample)))
        if q is None:
            return settings.rejection_draw_cap
        return max(1, math.ceil(settings.rejection_cap_factor * q))

    def draw(self, sample: LabeledSample, seed: Union[int, np.random.Generator, None] = None) -> Hypothesis:
        """Sample h from the prior until L_S(h) = 0, up to the draw cap."""
        pattern = sample.pattern()
        if pattern is None:
            raise PriorNeverConsistentError()
        mask, labels = pattern
        rng = make_rng(seed)
        cap = self.draw_cap(sample)
        for attempt in range(1, cap + 1):
            h = self.prior.atoms[self.prior.inverse_cdf(rng.random())]
            if h.agrees(mask, labels):
                return h
        logger.warning(f"{self.name}: no consistent draw in {cap} attempts on {sample}")
        raise RejectionCapExceededError(cap)

    def agreement(self, first: LabeledSample, second: LabeledSample):
        p1, p2 = first.pattern(), second.pattern()
        if p1 is None or p2 is None:
            raise PriorNeverConsistentError()
        both = self.prior.prob_of(lambda h: h.agrees(*p1) and h.agrees(*p2))
        either = self.prior.prob_of(lambda h: h.agrees(*p1) or h.agrees(*p2))
        if either == 0:
            raise PriorNeverConsistentError()
        return both / either

    def max_ratio_bound(self, sample: LabeledSample):
        """1 / prior mass of cons(S): the posterior never exceeds this multiple of the prior."""
        return 1 / self.consistency_mass(sample)


def rejection_sampler(
    prior: FiniteDistribution,
    universe: Optional[Universe] = None,
    consistency_bound: Optional[ConsistencyBound] = None,
) -> RejectionSampler:
    return RejectionSampler(prior, universe, consistency_bound)


class FiniteClassWeakLearner(RejectionSampler):
    """Rejection sampler restricted to a class, run on k-example subsamples."""

    def __init__(self, hclass: HypothesisClass, prior: FiniteDistribution, k: int):
        if k < 0:
            raise StabilityLabError("k must be nonnegative")
        members = set(hclass.members)
        if set(prior.atoms) - members:
            raise DistributionError("weak-learner prior has atoms outside the class")
        if any(prior.mass(h) <= 0 for h in hclass.members):
            raise DistributionError("weak-learner prior must give every member positive mass")
        super().__init__(prior, hclass, name=f"weak:k={k}")
        self.hclass = hclass
        self.k = k

    @property
    def kl_ceiling(self):
        """ln(1 / smallest prior mass): bounds KL(posterior || prior) on every sample."""
        return -math.log(float(min(self.prior.probs)))

    def certify(self, params: WeakParams) -> "FiniteClassWeakLearner":
        self.weak_params = params
        return self


def finite_class_weak_learner(
    hclass: HypothesisClass, prior: Optional[FiniteDistribution] = None, k: int = 1
) -> FiniteClassWeakLearner:
    prior = FiniteDistribution.uniform(hclass.members) if prior is None else prior
    return FiniteClassWeakLearner(hclass, prior, k)


def exact_posterior_kl(
    rule: LearningRule, sample: LabeledSample, prior: Optional[FiniteDistribution] = None
) -> DivergenceValue:
    """KL(rule.posterior(sample) || prior); the prior defaults to the rule's own."""
    if prior is None:
        prior = getattr(rule, "prior", None)
        if prior is None:
            raise StabilityLabError(f"{rule.name} has no prior; pass one explicitly")
    return kl(rule.posterior(sample), prior)
