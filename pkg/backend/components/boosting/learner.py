"""
The boosted rule as a LearningRule.
"""

from typing import Sequence, Tuple, Union

import numpy as np

from backend.components.boosting.booster import BoostConfig, boost, boosted_prior, kl_certificate_value
from backend.components.boosting.ledger import boosted_law
from backend.components.distributions.finite import FiniteDistribution
from backend.components.distributions.mixtures import TruncatedHarmonicMixture
from backend.components.learners.base import LearningRule
from backend.components.learners.rejection import RejectionSampler
from backend.components.primitives.domain import Hypothesis, LabeledSample
from backend.core.errors import StabilityLabError


class BoostedLearner(LearningRule):
    """
    ``draw`` runs the booster; ``posterior`` is the enumerated law and is only
    available under the ``joint_atoms`` budget. The KL certificate is always
    available.
    """
    is_interpolating = True

    def __init__(self, weak: RejectionSampler, config: BoostConfig, m_range: Sequence[int] = ()):
        super().__init__(weak.domain)
        self.weak = weak
        self.config = config
        self.prior = weak.prior
        self.universe = weak.universe
        self.m_range = tuple(m_range)
        self.name = f"boosted:k={config.k}"
        self.weak_params = weak.weak_params

    def draw(self, sample: LabeledSample, seed: Union[int, np.random.Generator, None] = None) -> Hypothesis:
        h, _ = boost(self.weak, sample, self.config, seed)
        return h

    def agreement(self, first: LabeledSample, second: LabeledSample):
        # Runs sharing a seed are coupled through the whole boosting loop, not a CDF cell.
        raise StabilityLabError(f"{self.name}: exact agreement is unavailable; use Monte Carlo replicability")

    def _posterior(self, sample: LabeledSample) -> FiniteDistribution:
        return boosted_law(self.weak, sample, self.config).majority_law

    def mixture_sizes(self, m: int) -> Tuple[int, ...]:
        return tuple(sorted(set(self.m_range) | {m}))

    def mixture_indices(self, m: int) -> Tuple[int, ...]:
        return tuple(sorted({self.config.rounds(x) for x in self.mixture_sizes(m)}))

    def kl_certificate(self, m: int):
        """Certified KL(A*(S) || P*) for samples of size m: T * 2b/gamma + ln(z T^2)."""
        return kl_certificate_value(self.config, m, self.mixture_indices(m))

    def boosted_prior(self, m: int, dense: bool = False) -> TruncatedHarmonicMixture:
        return boosted_prior(self.prior, self.mixture_sizes(m), self.config, dense)
