"""
Losses, realizability and consistency sets.
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional, Tuple, Union

from backend.components.primitives.domain import (
    Domain,
    Hypothesis,
    HypothesisClass,
    LabeledSample,
    PopulationDistribution,
)
from backend.core.budgets import budget_limit
from backend.core.errors import DomainTooLargeError, EmptySampleError

Universe = Union[Domain, HypothesisClass]


def empirical_loss(sample: LabeledSample, h: Hypothesis) -> Fraction:
    """Fraction of examples in the sample that h mislabels."""
    if sample.m == 0:
        raise EmptySampleError()
    mistakes = sum(1 for x, y in sample.pairs if h.label(x) != y)
    return Fraction(mistakes, sample.m)


def is_consistent(sample: LabeledSample, h: Hypothesis) -> bool:
    return all(h.label(x) == y for x, y in sample.pairs)


def population_loss(pop: PopulationDistribution, h: Hypothesis):
    """Total weight of the examples h mislabels (exact for rational populations)."""
    return pop.weights.prob_of(lambda atom: h.label(atom[0]) != atom[1])


@dataclass(frozen=True)
class RealizabilityResult:
    realizable: bool
    witness: Optional[Hypothesis] = None

    def __bool__(self) -> bool:
        return self.realizable


def is_realizable(pop: PopulationDistribution, hclass: HypothesisClass) -> RealizabilityResult:
    """Realizable iff some member has zero population loss; witness is the first such member."""
    for h in hclass.members:
        if population_loss(pop, h) == 0:
            return RealizabilityResult(True, h)
    return RealizabilityResult(False, None)


@dataclass(frozen=True)
class ConsistentSet:
    """
    Consistency set of a sample.

    Over the full function universe the set is a product: ``fixed_mask`` points
    carry ``fixed_labels`` and the remaining points are free. Over a class the
    members are listed explicitly.
    """
    domain: Domain
    fixed_mask: int
    fixed_labels: int
    contradictory: bool
    explicit: Optional[Tuple[Hypothesis, ...]] = None

    @property
    def free_mask(self) -> int:
        return self.domain.full_mask & ~self.fixed_mask

    @property
    def free_points(self) -> Tuple[int, ...]:
        return tuple(x for x in self.domain.points if (self.free_mask >> x) & 1)

    def __contains__(self, h: Hypothesis) -> bool:
        if self.contradictory:
            return False
        if self.explicit is not None:
            return h in set(self.explicit)
        return h.agrees(self.fixed_mask, self.fixed_labels)

    def __len__(self) -> int:
        if self.contradictory:
            return 0
        if self.explicit is not None:
            return len(self.explicit)
        return 1 << bin(self.free_mask).count("1")

    def __iter__(self) -> Iterator[Hypothesis]:
        return iter(self.members())

    def members(self) -> Tuple[Hypothesis, ...]:
        """All members in bit-vector order (class order for class universes)."""
        if self.contradictory:
            return ()
        if self.explicit is not None:
            return self.explicit
        free = self.free_points
        out = []
        for combo in range(1 << len(free)):
            bits = self.fixed_labels
            for i, x in enumerate(free):
                if (combo >> i) & 1:
                    bits |= 1 << x
            out.append(Hypothesis(bits, self.domain.size))
        return tuple(sorted(out))


def consistent_set(sample: LabeledSample, universe: Universe) -> ConsistentSet:
    """cons(S) within all functions on a domain, or within a hypothesis class."""
    domain = universe if isinstance(universe, Domain) else universe.domain
    pattern = sample.pattern()
    if isinstance(universe, Domain):
        limit = budget_limit("universe_points")
        if domain.size > limit:
            raise DomainTooLargeError(domain.size, limit)
        if pattern is None:
            return ConsistentSet(domain, 0, 0, True)
        return ConsistentSet(domain, pattern[0], pattern[1], False)

    if pattern is None:
        return ConsistentSet(domain, 0, 0, True, ())
    mask, labels = pattern
    members = tuple(h for h in universe.members if h.agrees(mask, labels))
    return ConsistentSet(domain, mask, labels, not members, members)
