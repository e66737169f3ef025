"""
Mixture prior built from per-m optimal priors of the consistency game.

P = sum_{m=1..L} P_m / (z_L m^2) with P_m the optimal prior over all functions
at sample size m. Any class-realizable sample of size m <= L then has
P(cons S) >= 1 / (z_L m^2 C_m), so the rejection sampler on P is
ln(z_L m^2 C_m)-pure perfectly generalizing.
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict

from loguru import logger

from backend.components.dimensions.game import fractional_clique_value
from backend.components.distributions.finite import FiniteDistribution
from backend.components.distributions.mixtures import TruncatedHarmonicMixture, harmonic_mixture
from backend.components.learners.rejection import RejectionSampler
from backend.components.primitives.domain import HypothesisClass, all_functions
from backend.core.errors import StabilityLabError


@dataclass
class GamePrior:
    hclass: HypothesisClass
    mixture: TruncatedHarmonicMixture
    clique_numbers: Dict[int, Fraction]

    @property
    def prior(self) -> FiniteDistribution:
        return self.mixture.flatten()

    @property
    def truncation(self) -> int:
        return self.mixture.truncation

    def consistency_bound(self, m: int) -> Fraction:
        """q(m) = z_L m^2 C_m: 1/q(m) lower-bounds the prior mass of cons(S) for |S| = m <= L."""
        if m not in self.clique_numbers:
            raise StabilityLabError(f"game prior covers m <= {self.truncation}, got {m}")
        return self.mixture.normalizer * m * m * self.clique_numbers[m]

    def rejection_sampler(self) -> RejectionSampler:
        top = self.truncation
        bound = lambda m: float(self.consistency_bound(m)) if m <= top else None
        return RejectionSampler(self.prior, self.hclass.domain, bound, name=f"rejection:game:L={top}")


def game_mixture_prior(hclass: HypothesisClass, L: int = 3, method: str = "exact") -> GamePrior:
    """
    Build the mixture prior over all functions on the class's domain.

    Args:
        hclass: class whose realizable samples the prior must cover
        L: truncation (sample sizes 1..L)
        method: game solver

    Returns:
        GamePrior with the mixture and the C_m used for the consistency bounds
    """
    if L < 1:
        raise StabilityLabError("truncation L must be at least 1")
    functions = tuple(all_functions(hclass.domain))
    components: Dict[int, FiniteDistribution] = {}
    clique_numbers: Dict[int, Fraction] = {}
    for m in range(1, L + 1):
        result = fractional_clique_value(hclass, m, method=method, universe="all")
        components[m] = FiniteDistribution(functions, tuple(result.optimal_prior.mass(h) for h in functions))
        clique_numbers[m] = result.clique_number
        logger.debug(f"Game prior component m={m}: C_m={result.clique_number}")
    mixture = harmonic_mixture(components)
    return GamePrior(hclass, mixture, clique_numbers)
