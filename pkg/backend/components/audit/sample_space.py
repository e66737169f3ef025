"""
Enumerable sample spaces for exact audits.

Every enumeration is guarded by the ``sample_space`` budget.
"""

from fractions import Fraction
from itertools import product
from typing import Iterator, List, Optional, Tuple

from loguru import logger

from backend.components.distributions.finite import FiniteDistribution
from backend.components.primitives.domain import Domain, HypothesisClass, LabeledSample, PopulationDistribution
from backend.core.budgets import check_budget, within_budget
from backend.core.errors import StabilityLabError


def sample_count(domain: Domain, m: int) -> int:
    return (2 * domain.size) ** m


def all_samples(domain: Domain, m: int) -> Iterator[LabeledSample]:
    """Every ordered sample of size m over the domain's labeled examples."""
    check_budget("sample_space", sample_count(domain, m), hint=f"all samples of size {m}")
    for pairs in product(domain.all_pairs(), repeat=m):
        yield LabeledSample(domain, pairs)


def realizable_samples(hclass: HypothesisClass, m: int) -> List[LabeledSample]:
    """Samples of size m labeled consistently with some member of the class."""
    out = []
    for sample in all_samples(hclass.domain, m):
        pattern = sample.pattern()
        if pattern is not None and any(h.agrees(*pattern) for h in hclass.members):
            out.append(sample)
    return out


def neighbors(sample: LabeledSample) -> Iterator[Tuple[int, LabeledSample]]:
    """(index, S') for every S' differing from S in exactly one example."""
    for index, current in enumerate(sample.pairs):
        for pair in sample.domain.all_pairs():
            if pair != current:
                yield index, sample.replace(index, pair)


def neighbor_pairs(domain: Domain, m: int) -> Iterator[Tuple[LabeledSample, LabeledSample]]:
    """Each unordered neighbouring pair once."""
    for sample in all_samples(domain, m):
        for index, other in neighbors(sample):
            if other.pairs[index] > sample.pairs[index]:
                yield sample, other


def sample_law(pop: PopulationDistribution, m: int) -> FiniteDistribution:
    """Exact law of S ~ pop^m with LabeledSample atoms."""
    support = len(pop.support())
    check_budget("sample_space", support ** m, hint=f"population support {support}, m={m}")
    law = pop.sample_distribution(m)
    return FiniteDistribution(tuple(LabeledSample(pop.domain, atom) for atom in law.atoms), law.probs)


def sample_source(
    domain: Domain,
    m: int,
    pop: Optional[PopulationDistribution] = None,
    hclass: Optional[HypothesisClass] = None,
) -> FiniteDistribution:
    """
    Distribution over samples used by the per-sample checks.

    Args:
        domain: domain of the samples
        m: sample size
        pop: population; when given, the exact law of S ~ pop^m
        hclass: without a population, uniform over the class-realizable samples

    Returns:
        FiniteDistribution over LabeledSample (uniform over all samples when
        neither a population nor a class is given)
    """
    if pop is not None:
        return sample_law(pop, m)
    samples = realizable_samples(hclass, m) if hclass is not None else list(all_samples(domain, m))
    if not samples:
        raise StabilityLabError(f"no samples of size {m} to audit")
    logger.debug(f"Sample source: {len(samples)} samples of size {m}")
    return FiniteDistribution(tuple(samples), tuple(Fraction(1, len(samples)) for _ in samples))


def law_is_enumerable(pop: PopulationDistribution, m: int) -> bool:
    return within_budget("sample_space", len(pop.support()) ** m)
