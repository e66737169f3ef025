"""
Brute-force event checks.

Every event O over the joint support (at most ``MAX_EVENT_ATOMS`` atoms) is
visited directly. This path shares nothing with the hockey-stick reduction
beyond the distributions themselves, so the two verdicts cross-check each other.
"""

import math
from fractions import Fraction
from typing import List, Optional

from loguru import logger

from backend.components.audit.checkers import _posterior, _resolve_prior
from backend.components.audit.information import output_sample_joints
from backend.components.audit.sample_space import neighbor_pairs, sample_source
from backend.components.distributions.finite import FiniteDistribution, align
from backend.components.divergences.exact import Number
from backend.components.divergences.measures import at_most, exp_of
from backend.components.learners.base import LearningRule
from backend.components.primitives.domain import HypothesisClass, PopulationDistribution
from backend.core.errors import StabilityLabError

MAX_EVENT_ATOMS = 12


def event_delta(eps: Number, p: FiniteDistribution, q: FiniteDistribution):
    """
    max over events O of p(O) - e^eps q(O), visiting all 2^K events.

    Raises:
        StabilityLabError: when the joint support has more than 12 atoms
    """
    atoms, pv, qv = align(p, q)
    if len(atoms) > MAX_EVENT_ATOMS:
        raise StabilityLabError(f"event enumeration supports at most {MAX_EVENT_ATOMS} atoms, got {len(atoms)}")
    factor = exp_of(eps)
    if factor is not None and p.is_exact and q.is_exact:
        weights: List = [pi - factor * qi for pi, qi in zip(pv, qv)]
        best = Fraction(0)
    else:
        e = math.exp(float(eps))
        weights = [float(pi) - e * float(qi) for pi, qi in zip(pv, qv)]
        best = 0.0
    for mask in range(1, 1 << len(atoms)):
        value = sum(w for i, w in enumerate(weights) if mask >> i & 1)
        if value > best:
            best = value
    return best


def dp_check_by_events(rule: LearningRule, m: int, eps: Number, delta: Number) -> bool:
    """(eps, delta)-DP verdict by direct event enumeration on every neighbouring pair."""
    for first, second in neighbor_pairs(rule.domain, m):
        p, q = _posterior(rule, first), _posterior(rule, second)
        if p is None or q is None:
            continue
        if not at_most(event_delta(eps, p, q), delta) or not at_most(event_delta(eps, q, p), delta):
            logger.debug(f"Event enumeration: {rule.name} breaks ({float(eps)}, {float(delta)})-DP on {first} / {second}")
            return False
    return True


def pg_check_by_events(
    rule: LearningRule,
    m: int,
    prior: Optional[FiniteDistribution],
    eps: Number,
    delta: Number = Fraction(0),
    pop: Optional[PopulationDistribution] = None,
    hclass: Optional[HypothesisClass] = None,
    beta: Number = Fraction(0),
) -> bool:
    """
    Perfect-generalization verdict: the mass of samples on which A(S)(O) <= e^eps P(O) + delta
    for every event O is at least 1 - beta. Pure mode is delta = 0.
    """
    prior, _ = _resolve_prior(rule, m, prior, pop)
    source = sample_source(rule.domain, m, pop, hclass)
    held = 0
    for sample, ps in source.items():
        if ps == 0:
            continue
        post = _posterior(rule, sample)
        # undefined outputs never generalize
        if post is None:
            continue
        if math.isinf(float(eps)) or at_most(event_delta(eps, post, prior), delta):
            held += ps
    return at_most(1 - held, beta)


def max_information_by_events(rule: LearningRule, pop: PopulationDistribution, m: int, eps: Number):
    """Max-information delta by enumerating events of the (output, sample) joint."""
    joint, independent = output_sample_joints(rule, pop, m)
    return event_delta(eps, joint, independent)
