"""
Harmonic mixtures: sum over an index set of components weighted 1/(z * l^2).

The infinite mixture normalizes by z = pi^2/6. Every mixture built here keeps
a finite index set and renormalizes by z over that set, which only increases
each component's weight.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Hashable, Mapping, Optional, Sequence, Tuple

from loguru import logger

from backend.components.distributions.finite import FiniteDistribution
from backend.core.errors import DistributionError

ZETA_TWO = math.pi ** 2 / 6


def harmonic_normalizer(indices: Sequence[int]) -> Fraction:
    """z over an index set: the sum of 1/l^2."""
    return sum((Fraction(1, l * l) for l in indices), Fraction(0))


@dataclass(frozen=True)
class TruncatedHarmonicMixture:
    components: Tuple[Tuple[int, FiniteDistribution], ...]
    normalizer: Fraction

    @property
    def indices(self) -> Tuple[int, ...]:
        return tuple(l for l, _ in self.components)

    @property
    def truncation(self) -> int:
        """Largest index present (L for a dense truncation)."""
        return max(self.indices)

    @property
    def is_dense(self) -> bool:
        return self.indices == tuple(range(1, self.truncation + 1))

    def weight(self, index: int) -> Fraction:
        if index not in self.indices:
            return Fraction(0)
        return Fraction(1, index * index) / self.normalizer

    @property
    def mass_deficit(self) -> float:
        """1 - z_L / z: mass the infinite mixture puts outside the kept indices."""
        return 1.0 - float(self.normalizer) / ZETA_TWO

    def component(self, index: int) -> FiniteDistribution:
        for l, dist in self.components:
            if l == index:
                return dist
        raise DistributionError(f"mixture has no component {index}")

    def flatten(self) -> FiniteDistribution:
        atoms: Dict[Hashable, object] = {}
        for l, dist in self.components:
            w = self.weight(l)
            if not dist.is_exact:
                w = float(w)
            for atom, p in dist.items():
                atoms[atom] = atoms.get(atom, 0) + w * p
        return FiniteDistribution(tuple(atoms.keys()), tuple(atoms.values()))

    def report(self) -> Dict[str, object]:
        return {
            "indices": list(self.indices),
            "truncation": self.truncation,
            "normalizer": f"{self.normalizer.numerator}/{self.normalizer.denominator}",
            "mass_deficit": self.mass_deficit,
        }


def harmonic_mixture(
    components: Mapping[int, FiniteDistribution], shared_universe: bool = True
) -> TruncatedHarmonicMixture:
    """
    Mixture over the given index set.

    Args:
        components: index l >= 1 mapped to its component distribution
        shared_universe: require every component to list the same atoms

    Returns:
        TruncatedHarmonicMixture with normalizer z over the index set
    """
    if not components:
        raise DistributionError("mixture needs at least one component")
    if any(l < 1 for l in components):
        raise DistributionError("mixture indices start at 1")
    ordered = tuple(sorted(components.items()))
    if shared_universe:
        universe = frozenset(ordered[0][1].atoms)
        for l, dist in ordered[1:]:
            if frozenset(dist.atoms) != universe:
                raise DistributionError(f"mismatched atom universes at component {l}")
    z = harmonic_normalizer([l for l, _ in ordered])
    logger.debug(f"Harmonic mixture over {len(ordered)} components, z={float(z):.6f}")
    return TruncatedHarmonicMixture(ordered, z)


def truncated_prior_mixture(components: Sequence[FiniteDistribution], L: Optional[int] = None) -> FiniteDistribution:
    """Flattened dense mixture of components 1..L with weights 1/(z_L l^2)."""
    L = len(components) if L is None else L
    if L < 1:
        raise DistributionError("truncation L must be at least 1")
    if len(components) < L:
        raise DistributionError(f"need {L} components, got {len(components)}")
    mixture = harmonic_mixture({l: components[l - 1] for l in range(1, L + 1)})
    return mixture.flatten()


def dense_mixture(components: Sequence[FiniteDistribution], L: Optional[int] = None) -> TruncatedHarmonicMixture:
    """Like truncated_prior_mixture but keeps the mixture record for reporting."""
    L = len(components) if L is None else L
    if L < 1:
        raise DistributionError("truncation L must be at least 1")
    return harmonic_mixture({l: components[l - 1] for l in range(1, L + 1)})
