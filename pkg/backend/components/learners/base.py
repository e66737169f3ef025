"""
Learning rules as exact posterior maps plus samplers.

A rule maps a labeled sample to a distribution over hypotheses. Exact rules
also expose a shared-randomness form A(S; r): r is a uniform number and the
output is the inverse-CDF pick over the posterior's support in canonical
hypothesis order. Two runs that share r agree with probability equal to the
overlap of their CDF cells.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Hashable, Optional, Tuple, Union

import numpy as np

from backend.components.distributions.finite import FiniteDistribution, make_rng
from backend.components.primitives.domain import Domain, Hypothesis, HypothesisClass, LabeledSample
from backend.core.errors import NotSeedSplittableError

Universe = Union[Domain, HypothesisClass]


@dataclass(frozen=True)
class WeakParams:
    """Declared weak-learner parameters: expected loss <= 1/2 - gamma, expected KL <= b on k examples."""
    k: int
    gamma: Fraction
    b: Fraction


class LearningRule(ABC):
    name: str = "rule"
    seed_splittable: bool = True
    is_interpolating: bool = False
    # Posterior depends on the set of distinct pairs only.
    depends_on_distinct: bool = False
    weak_params: Optional[WeakParams] = None

    def __init__(self, domain: Domain):
        self.domain = domain
        self._cache: Dict[Hashable, FiniteDistribution] = {}

    @abstractmethod
    def _posterior(self, sample: LabeledSample) -> FiniteDistribution:
        """Exact output distribution on a sample."""

    def _key(self, sample: LabeledSample) -> Hashable:
        return tuple(sorted(sample.distinct())) if self.depends_on_distinct else sample.pairs

    def posterior(self, sample: LabeledSample) -> FiniteDistribution:
        key = self._key(sample)
        cached = self._cache.get(key)
        if cached is None:
            cached = self._canonical(self._posterior(sample))
            self._cache[key] = cached
        return cached

    @staticmethod
    def _canonical(dist: FiniteDistribution) -> FiniteDistribution:
        """Support only, sorted by hypothesis."""
        items = sorted((h, p) for h, p in dist.items() if p > 0)
        return FiniteDistribution(tuple(h for h, _ in items), tuple(p for _, p in items))

    def draw(self, sample: LabeledSample, seed: Union[int, np.random.Generator, None] = None) -> Hypothesis:
        """A(S; r) with r the first uniform of the seed's stream."""
        u = make_rng(seed).random()
        return self.draw_with(sample, u)

    def draw_with(self, sample: LabeledSample, u: float) -> Hypothesis:
        if not self.seed_splittable:
            raise NotSeedSplittableError(self.name)
        posterior = self.posterior(sample)
        return posterior.atoms[posterior.inverse_cdf(u)]

    def cells(self, sample: LabeledSample) -> Dict[Hypothesis, Tuple[Fraction, Fraction]]:
        """CDF cell [F(h-), F(h)) of every supported hypothesis."""
        posterior = self.posterior(sample)
        cells = {}
        low = Fraction(0) if posterior.is_exact else 0.0
        for h, p in posterior.items():
            cells[h] = (low, low + p)
            low = low + p
        return cells

    def agreement(self, first: LabeledSample, second: LabeledSample):
        """Pr_r[A(S1; r) = A(S2; r)] under the inverse-CDF coupling."""
        if not self.seed_splittable:
            raise NotSeedSplittableError(self.name)
        a, b = self.cells(first), self.cells(second)
        total = Fraction(0)
        for h, (lo1, hi1) in a.items():
            if h in b:
                lo2, hi2 = b[h]
                overlap = min(hi1, hi2) - max(lo1, lo2)
                if overlap > 0:
                    total += overlap
        return total

    def describe(self) -> Dict[str, object]:
        return {
            "name": self.name,
            "seed_splittable": self.seed_splittable,
            "interpolating": self.is_interpolating,
            "weak": None
            if self.weak_params is None
            else {"k": self.weak_params.k, "gamma": str(self.weak_params.gamma), "b": str(self.weak_params.b)},
        }

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name!r})"
