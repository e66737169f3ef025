"""
Baseline rules used as audit fixtures.

Expected verdicts:
- ConstantRule: sample-independent, so every stability definition holds with zero budget.
- ERMRule: deterministic, so it fails DP for any eps with delta < 1 on a shattered class
  and has small replicability at small m.
- RandomizedResponse: exactly (eps, 0)-DP on the first label.
- MemorizeRule: deterministic identity-style output; maximal information about the sample.
- CallableRule: black box with private randomness; Monte Carlo only.
"""

import math
from collections import Counter
from fractions import Fraction
from typing import Callable, Optional, Union

import numpy as np
from loguru import logger

from backend.components.distributions.finite import FiniteDistribution, make_rng
from backend.components.learners.base import LearningRule
from backend.components.learners.rejection import uniform_prior
from backend.components.primitives.domain import Domain, Hypothesis, HypothesisClass, LabeledSample
from backend.components.primitives.losses import empirical_loss
from backend.core.errors import StabilityLabError
from backend.core.settings import settings

CONSTANT_KINDS = ("zeros", "ones", "uniform")


class ConstantRule(LearningRule):
    """Ignores the sample."""
    depends_on_distinct = True

    def __init__(self, domain: Domain, kind: str = "zeros"):
        if kind not in CONSTANT_KINDS:
            raise StabilityLabError(f"constant rule kind must be one of {CONSTANT_KINDS}")
        super().__init__(domain)
        self.kind = kind
        self.name = f"constant:{kind}"
        if kind == "uniform":
            self.output = uniform_prior(domain)
        else:
            self.output = FiniteDistribution.point_mass(Hypothesis.constant(domain.size, int(kind == "ones")))

    def _posterior(self, sample: LabeledSample) -> FiniteDistribution:
        return self.output

    def _key(self, sample: LabeledSample):
        return ()


class ERMRule(LearningRule):
    """Deterministic ERM over a class, ties broken by the lexicographically smallest label string."""

    def __init__(self, hclass: HypothesisClass):
        super().__init__(hclass.domain)
        self.hclass = hclass
        self.name = "erm"
        self.is_interpolating = True

    def select(self, sample: LabeledSample) -> Hypothesis:
        if len(sample) == 0:
            return min(self.hclass.members, key=lambda h: h.to_string())
        return min(self.hclass.members, key=lambda h: (empirical_loss(sample, h), h.to_string()))

    def _posterior(self, sample: LabeledSample) -> FiniteDistribution:
        return FiniteDistribution.point_mass(self.select(sample))


class MemorizeRule(LearningRule):
    """Labels each sample point with its first label and every other point with 0."""
    is_interpolating = True

    def __init__(self, domain: Domain):
        super().__init__(domain)
        self.name = "memorize"

    def _posterior(self, sample: LabeledSample) -> FiniteDistribution:
        bits = 0
        seen = set()
        for x, y in sample:
            if x in seen:
                continue
            seen.add(x)
            bits |= y << x
        return FiniteDistribution.point_mass(Hypothesis(bits, self.domain.size))


class RandomizedResponse(LearningRule):
    """
    Outputs the constant function of the first label with probability
    r / (1 + r) and the opposite constant otherwise, r = e^eps.

    Pass ``ratio`` (a rational e^eps) for exact posteriors; ``eps`` gives floats.
    """

    def __init__(self, domain: Domain, eps: Optional[float] = None, ratio: Optional[Fraction] = None):
        if (eps is None) == (ratio is None):
            raise StabilityLabError("randomized response takes exactly one of eps or ratio")
        super().__init__(domain)
        if ratio is not None:
            ratio = Fraction(ratio)
            if ratio < 1:
                raise StabilityLabError("ratio e^eps must be at least 1")
            self.keep = ratio / (1 + ratio)
            self.eps = math.log(ratio)
            self.name = f"rr:ratio={ratio}"
        else:
            if eps < 0:
                raise StabilityLabError("eps must be nonnegative")
            self.keep = math.exp(eps) / (1 + math.exp(eps))
            self.eps = float(eps)
            self.name = f"rr:eps={eps}"
        self.zeros = Hypothesis.constant(domain.size, 0)
        self.ones = Hypothesis.constant(domain.size, 1)

    def _posterior(self, sample: LabeledSample) -> FiniteDistribution:
        if len(sample) == 0:
            return FiniteDistribution.uniform((self.zeros, self.ones))
        label = sample.pairs[0][1]
        kept, flipped = (self.ones, self.zeros) if label else (self.zeros, self.ones)
        return FiniteDistribution((kept, flipped), (self.keep, 1 - self.keep))


class CallableRule(LearningRule):
    """
    Black-box sampler with private randomness.

    Not seed-splittable; ``posterior`` is a Monte Carlo histogram (float mode).
    """
    seed_splittable = False

    def __init__(
        self,
        domain: Domain,
        sampler: Callable[[LabeledSample, np.random.Generator], Hypothesis],
        name: str = "callable",
        trials: Optional[int] = None,
        seed: int = 0,
    ):
        super().__init__(domain)
        self.sampler = sampler
        self.name = name
        self.trials = settings.default_trials if trials is None else trials
        self.seed = seed

    def draw(self, sample: LabeledSample, seed: Union[int, np.random.Generator, None] = None) -> Hypothesis:
        return self.sampler(sample, make_rng(seed))

    def _posterior(self, sample: LabeledSample) -> FiniteDistribution:
        logger.debug(f"{self.name}: Monte Carlo posterior with {self.trials} draws")
        rng = make_rng(self.seed)
        counts = Counter(self.sampler(sample, rng) for _ in range(self.trials))
        atoms = sorted(counts)
        return FiniteDistribution.from_weights(atoms, [float(counts[h]) for h in atoms])


def baseline_rules(hclass: HypothesisClass, eps_ratio: Fraction = Fraction(2)) -> dict:
    """Catalog of baseline rules on a class's domain."""
    domain = hclass.domain
    return {
        "constant:zeros": ConstantRule(domain, "zeros"),
        "constant:ones": ConstantRule(domain, "ones"),
        "erm": ERMRule(hclass),
        "memorize": MemorizeRule(domain),
        f"rr:ratio={eps_ratio}": RandomizedResponse(domain, ratio=eps_ratio),
    }
