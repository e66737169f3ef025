"""
KL ledger of the boosted learner.

Two tiers:
- transcript tier (exact): every accepted round has KL(A(S_t) || P) under the
  gate and the total stays within T * 2b/gamma.
- law tier (enumerable fixtures): the full law of (f_1..f_T) is enumerated,
  merging histories with equal cumulative gains and vote counts since w_t is a
  function of the past outputs only. The chain
      KL(maj law || P*_T) <= KL(joint || P^T) = sum_t E KL(q_t || P)
                         <= sum_t E_{S_t | gate} KL(A(S_t) || P) <= T * 2b/gamma
  and KL(A*(S) || P*) <= KL(A*(S) || P*_T) + ln(z T^2) are re-evaluated.
  Weights are floating point here, so the tier runs in float mode.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

import numpy as np
from loguru import logger

from backend.components.boosting.booster import BoostConfig, BoostTranscript
from backend.components.distributions.finite import FiniteDistribution
from backend.components.distributions.majority import composition_count, majority, majority_push
from backend.components.distributions.mixtures import TruncatedHarmonicMixture
from backend.components.divergences.measures import kl
from backend.components.experts.weights import default_eta
from backend.components.learners.rejection import RejectionSampler
from backend.components.primitives.domain import Hypothesis, LabeledSample
from backend.core.budgets import check_budget
from backend.core.errors import ResampleCapExceededError, TheoremViolationError
from backend.core.settings import settings


@dataclass
class LedgerCheck:
    statement: str
    lhs: float
    rhs: float
    holds: bool
    mode: str = "exact"

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    def to_dict(self) -> Dict[str, object]:
        return {
            "statement": self.statement,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
            "holds": self.holds,
            "mode": self.mode,
        }


@dataclass
class LedgerReport:
    T: int
    gate: Fraction
    checks: List[LedgerCheck] = field(default_factory=list)
    law_tier: bool = False

    @property
    def holds(self) -> bool:
        return all(c.holds for c in self.checks)

    def check(self, name: str) -> LedgerCheck:
        for c in self.checks:
            if c.statement == name:
                return c
        raise KeyError(name)

    def to_records(self) -> List[Dict[str, object]]:
        return [c.to_dict() for c in self.checks]


def _float_check(statement: str, lhs: float, rhs: float) -> LedgerCheck:
    tolerance = settings.comparison_tolerance * max(1.0, abs(lhs), abs(rhs))
    return LedgerCheck(statement, lhs, rhs, lhs <= rhs + tolerance, mode="float")


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


@dataclass
class BoostedLaw:
    """Exact-history law of the boosted learner on one sample (float weights)."""
    majority_law: FiniteDistribution
    joint_kl: float
    gated_kl: float
    T: int
    states: int


def _subsample_law(
    weak: RejectionSampler,
    sample: LabeledSample,
    weights: np.ndarray,
    config: BoostConfig,
    kl_cache: Dict[object, Optional[float]],
) -> List[Tuple[float, LabeledSample]]:
    """Law of the accepted k-subsample (as a multiset of indices) given the weights."""
    m = len(sample)
    accepted = []
    total = 0.0
    for counts in _compositions(config.k, m):
        prob = float(math.factorial(config.k))
        for c, w in zip(counts, weights):
            prob = prob / math.factorial(c) * (w ** c)
        if prob == 0.0:
            continue
        pairs = tuple(sample.pairs[i] for i, c in enumerate(counts) for _ in range(c))
        subsample = LabeledSample(sample.domain, pairs)
        key = weak._key(subsample)
        if key not in kl_cache:
            value = kl(weak.posterior(subsample), weak.prior)
            kl_cache[key] = float(value) if config.passes_gate(value) else None
        if kl_cache[key] is not None:
            accepted.append((prob, subsample))
            total += prob
    if total <= 0.0:
        raise ResampleCapExceededError(-1, [], float(config.kl_gate))
    return [(p / total, s) for p, s in accepted]


def boosted_law(weak: RejectionSampler, sample: LabeledSample, config: BoostConfig) -> BoostedLaw:
    """
    Enumerate the law of (f_1..f_T) on a sample.

    States are (cumulative gains per example, vote counts per prior atom); the
    state count is bounded by the ``joint_atoms`` budget.
    """
    m = len(sample)
    T = config.rounds(m)
    check_budget("majority_compositions", composition_count(config.k, m), hint="subsample enumeration")
    eta = default_eta(m, T)
    atoms: Tuple[Hypothesis, ...] = tuple(h for h, p in weak.prior.items() if p > 0)
    atom_index = {h: i for i, h in enumerate(atoms)}
    labels = [y for _, y in sample.pairs]
    points = [x for x, _ in sample.pairs]

    states: Dict[Tuple[Tuple[int, ...], Tuple[int, ...]], float] = {((0,) * m, (0,) * len(atoms)): 1.0}
    joint_kl = gated_kl = 0.0
    prior_float = weak.prior.to_float()
    kl_cache: Dict[object, Optional[float]] = {}
    for t in range(T):
        following: Dict[Tuple[Tuple[int, ...], Tuple[int, ...]], float] = {}
        for (gains, counts), prob in states.items():
            logits = eta * np.asarray(gains, dtype=float)
            weights = np.exp(logits - logits.max())
            weights /= weights.sum()
            q_t: Dict[Hypothesis, float] = {}
            expected_gated = 0.0
            for s_prob, subsample in _subsample_law(weak, sample, weights, config, kl_cache):
                posterior = weak.posterior(subsample)
                expected_gated += s_prob * kl_cache[weak._key(subsample)]
                for h, p in posterior.items():
                    q_t[h] = q_t.get(h, 0.0) + s_prob * float(p)
            q_dist = FiniteDistribution.from_weights(list(q_t.keys()), list(q_t.values()))
            joint_kl += prob * float(kl(q_dist, prior_float))
            gated_kl += prob * expected_gated
            for h, p in q_t.items():
                if p <= 0.0:
                    continue
                new_gains = tuple(g + int(h.label(x) != y) for g, x, y in zip(gains, points, labels))
                new_counts = list(counts)
                new_counts[atom_index[h]] += 1
                key = (new_gains, tuple(new_counts))
                following[key] = following.get(key, 0.0) + prob * p
        states = following
        check_budget("joint_atoms", len(states), hint="boosted law enumeration")

    law: Dict[Hypothesis, float] = {}
    for (_, counts), prob in states.items():
        votes = [h for h, c in zip(atoms, counts) for _ in range(c)]
        h = majority(votes)
        law[h] = law.get(h, 0.0) + prob
    ordered = sorted(law.items())
    majority_law = FiniteDistribution.from_weights([h for h, _ in ordered], [p for _, p in ordered])
    logger.debug(f"Boosted law on {sample}: T={T}, {len(states)} final states")
    return BoostedLaw(majority_law, joint_kl, gated_kl, T, len(states))


def kl_ledger(
    transcript: BoostTranscript,
    weak: RejectionSampler,
    mixture: Optional[TruncatedHarmonicMixture] = None,
    law: Optional[BoostedLaw] = None,
) -> LedgerReport:
    """
    Verify the KL chain for one boosting run.

    Args:
        transcript: run to audit (transcript tier, exact)
        weak: weak learner with prior P
        mixture: boosted prior P* (law tier, optional)
        law: enumerated boosted law on the transcript's sample (law tier, optional)

    Returns:
        LedgerReport with every inequality and its slack

    Raises:
        TheoremViolationError: when any inequality fails
    """
    config = transcript.config
    T = transcript.T
    gate = config.kl_gate
    report = LedgerReport(T, gate)

    for index, r in enumerate(transcript.rounds):
        if not config.passes_gate(r.kl):
            report.checks.append(LedgerCheck(f"round {index} KL below gate", float(r.kl), float(gate), False))
    total = transcript.kl_total
    report.checks.append(
        LedgerCheck("sum_t KL(A(S_t)||P) <= T*2b/gamma", float(total), float(T * gate), total <= T * gate)
    )

    if law is not None:
        report.law_tier = True
        push_T = majority_push(weak.prior, T)
        kl_maj = float(kl(law.majority_law, push_T))
        report.checks.append(_float_check("KL(maj law||P*_T) <= KL(joint||P^T)", kl_maj, law.joint_kl))
        report.checks.append(_float_check("KL(joint||P^T) <= sum_t E KL(A(S_t)||P)", law.joint_kl, law.gated_kl))
        report.checks.append(_float_check("sum_t E KL(A(S_t)||P) <= T*2b/gamma", law.gated_kl, float(T * gate)))
        if mixture is not None and T in mixture.indices:
            shift = math.log(float(mixture.normalizer) * T * T)
            kl_star = float(kl(law.majority_law, mixture.flatten()))
            report.checks.append(_float_check("KL(A*(S)||P*) <= KL(A*(S)||P*_T) + ln(z T^2)", kl_star, kl_maj + shift))
            report.checks.append(
                _float_check("KL(A*(S)||P*) <= T*2b/gamma + ln(z T^2)", kl_star, float(T * gate) + shift)
            )

    failed = [c for c in report.checks if not c.holds]
    if failed:
        raise TheoremViolationError("KL ledger", [c.to_dict() for c in failed])
    logger.debug(f"KL ledger holds: {len(report.checks)} checks, law tier={report.law_tier}")
    return report

