"""
Coordinate-wise majority and the pushforward of P^l under it.

Ties (possible for even l) go to label 1 on every coordinate.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterator, Sequence, Tuple

import numpy as np
from loguru import logger

from backend.components.distributions.finite import FiniteDistribution, make_rng
from backend.components.primitives.domain import Hypothesis
from backend.core.budgets import check_budget
from backend.core.errors import DistributionError
from backend.core.settings import settings

TIE_RULE = "ties-to-1"


def majority(hypotheses: Sequence[Hypothesis]) -> Hypothesis:
    """Coordinate-wise majority vote; a tied coordinate gets label 1."""
    if not hypotheses:
        raise DistributionError("majority of an empty list")
    size = hypotheses[0].size
    ell = len(hypotheses)
    bits = 0
    for x in range(size):
        ones = sum((h.bits >> x) & 1 for h in hypotheses)
        if 2 * ones >= ell:
            bits |= 1 << x
    return Hypothesis(bits, size)


def _majority_of_counts(bit_rows: Sequence[int], counts: Sequence[int], size: int, ell: int) -> int:
    bits = 0
    for x in range(size):
        ones = sum(c for row, c in zip(bit_rows, counts) if (row >> x) & 1)
        if 2 * ones >= ell:
            bits |= 1 << x
    return bits


def _compositions(total: int, parts: int) -> Iterator[Tuple[int, ...]]:
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def composition_count(ell: int, support_size: int) -> int:
    return math.comb(ell + support_size - 1, support_size - 1)


def majority_push(prior: FiniteDistribution, ell: int) -> FiniteDistribution:
    """
    Exact law of maj(g_1..g_l) for g_i drawn i.i.d. from the prior.

    Enumerates multinomial count vectors over the prior's support instead of
    ordered l-tuples; each count vector has probability
    l! / prod(c_i!) * prod(p_i^c_i).
    """
    if ell < 1:
        raise DistributionError("majority needs at least one vote")
    support = [(h, p) for h, p in prior.items() if p > 0]
    if ell == 1 or len(support) == 1:
        return prior.restrict_to_support()

    check_budget(
        "majority_compositions",
        composition_count(ell, len(support)),
        hint="use estimate_majority_push for Monte Carlo",
    )
    size = support[0][0].size
    rows = [h.bits for h, _ in support]
    probs = [p for _, p in support]
    exact = prior.is_exact
    factorial = math.factorial(ell)

    out: Dict[int, object] = {}
    for counts in _compositions(ell, len(support)):
        coefficient = factorial
        for c in counts:
            coefficient //= math.factorial(c)
        weight = Fraction(coefficient) if exact else float(coefficient)
        for p, c in zip(probs, counts):
            if c:
                weight *= p ** c
        bits = _majority_of_counts(rows, counts, size, ell)
        out[bits] = out.get(bits, 0) + weight

    ordered = sorted(out.items())
    return FiniteDistribution(tuple(Hypothesis(b, size) for b, _ in ordered), tuple(w for _, w in ordered))


@dataclass(frozen=True)
class MajorityEstimate:
    distribution: FiniteDistribution
    trials: int
    tv_radius: float


def estimate_majority_push(prior: FiniteDistribution, ell: int, trials: int, seed: int = 0) -> MajorityEstimate:
    """Monte Carlo majority pushforward with a DKW-style TV radius at the configured level."""
    rng = make_rng(seed)
    support = [(h, p) for h, p in prior.items() if p > 0]
    rows = np.array([h.bits for h, _ in support], dtype=np.uint64)
    size = support[0][0].size
    weights = np.array([float(p) for _, p in support], dtype=float)
    weights /= weights.sum()

    draws = rng.choice(len(support), size=(trials, ell), p=weights)
    chosen = rows[draws]
    labels = np.zeros(trials, dtype=np.uint64)
    for x in range(size):
        ones = ((chosen >> np.uint64(x)) & np.uint64(1)).sum(axis=1)
        labels |= (2 * ones >= ell).astype(np.uint64) << np.uint64(x)

    values, counts = np.unique(labels, return_counts=True)
    dist = FiniteDistribution(
        tuple(Hypothesis(int(v), size) for v in values),
        tuple((counts / trials).tolist()),
    )
    # TV over k observed atoms is at most (1/2) sum of per-atom deviations; Hoeffding per atom with a union bound.
    failure = 1.0 - settings.confidence_level
    k = max(1, len(values))
    radius = 0.5 * k * math.sqrt(math.log(2 * k / failure) / (2 * trials))
    logger.debug(f"Majority push estimated over {trials} trials, TV radius {radius:.4f}")
    return MajorityEstimate(dist, trials, min(1.0, radius))
