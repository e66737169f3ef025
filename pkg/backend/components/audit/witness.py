"""
Subsample witness: a certified interpolating learner A* with prior P* puts
P*-mass at least (1/4) e^{-k}, k = 2 C ln m, on the hypotheses consistent
with any realizable sample S of size m.

The construction is executed: Q is the law of A*(S') for S' ~ Uniform(S)^{m'}
with m' = ceil(m ln(4m)), E = {h : L_S(h) = 0}, and
    P*(E) >= e^{-k} (Q(E) - Q(ln Q/P* > k)) >= e^{-k} (3/4 - 1/2).
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Dict, Hashable, Optional, Union

import numpy as np
from loguru import logger

from backend.components.boosting.booster import exact_ceil
from backend.components.distributions.finite import FiniteDistribution, make_rng
from backend.components.divergences.exact import LogSum, Number, compare, log_of
from backend.components.learners.base import LearningRule
from backend.components.primitives.domain import LabeledSample
from backend.components.primitives.losses import is_consistent
from backend.core.budgets import check_budget
from backend.core.confidence import hoeffding_radius
from backend.core.errors import CertificateMissingError, StabilityLabError, TheoremViolationError
from backend.core.settings import settings


@dataclass
class WitnessResult:
    m: int
    m_prime: int
    k: float
    prior_mass: object
    lower_bound: float
    q_event: float
    q_tail: float
    exact: bool
    radius: float = 0.0
    trials: Optional[int] = None
    checks: Dict[str, bool] = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.checks.get("P*(E) >= e^-k / 4", False)

    @property
    def slack(self) -> float:
        return float(self.prior_mass) - self.lower_bound

    def to_dict(self) -> Dict[str, object]:
        return {
            "m": self.m,
            "m_prime": self.m_prime,
            "k": self.k,
            "prior_mass": float(self.prior_mass),
            "lower_bound": self.lower_bound,
            "slack": self.slack,
            "q_event": self.q_event,
            "q_tail": self.q_tail,
            "exact": self.exact,
            "radius": self.radius,
            "trials": self.trials,
            "checks": dict(self.checks),
        }


def subsample_size(m: int) -> int:
    """m' = ceil(m ln(4m))."""
    return max(1, exact_ceil(LogSum.log(4 * m) * m))


def _kl_bound(rule: LearningRule, m: int, C: Optional[Number], kl_bound: Optional[Number]) -> Number:
    if kl_bound is not None:
        return kl_bound
    if C is not None:
        return LogSum.log(m, Fraction(C)) if not isinstance(C, float) else C * math.log(m)
    certificate = getattr(rule, "kl_certificate", None)
    if certificate is None:
        raise CertificateMissingError(f"{rule.name} has no KL certificate; pass C or kl_bound")
    return certificate(m)


def _covered_law(m: int, m_prime: int) -> Dict[frozenset, Fraction]:
    """Law of the set of indices hit by m' uniform draws from range(m) (inclusion-exclusion)."""
    check_budget("sample_space", 1 << m, hint="subsets of the sample")
    power = {size: Fraction(size, m) ** m_prime for size in range(m + 1)}
    law: Dict[frozenset, Fraction] = {}
    for size in range(1, m + 1):
        exact_cover = sum(
            ((-1) ** (size - j)) * math.comb(size, j) * power[j] for j in range(size + 1)
        )
        if exact_cover == 0:
            continue
        for subset in combinations(range(m), size):
            law[frozenset(subset)] = exact_cover
    return law


def _exact_q(rule: LearningRule, sample: LabeledSample, m_prime: int) -> FiniteDistribution:
    if not rule.depends_on_distinct:
        raise StabilityLabError(f"exact witness needs a rule that depends on distinct pairs; {rule.name} does not")
    out: Dict[Hashable, Fraction] = {}
    for subset, weight in _covered_law(len(sample), m_prime).items():
        sub = LabeledSample(sample.domain, tuple(sample.pairs[i] for i in sorted(subset)))
        for h, p in rule.posterior(sub).items():
            out[h] = out.get(h, Fraction(0)) + weight * p
    ordered = sorted(out.items())
    return FiniteDistribution(tuple(h for h, _ in ordered), tuple(p for _, p in ordered))


def _mc_q(rule: LearningRule, sample: LabeledSample, m_prime: int, trials: int, seed) -> FiniteDistribution:
    """Q averaged over drawn S' (exact posteriors, or output histograms for certified learners)."""
    rng = make_rng(seed)
    by_draws = getattr(rule, "kl_certificate", None) is not None
    out: Dict[Hashable, float] = {}
    m = len(sample)
    for _ in range(trials):
        picks = rng.integers(0, m, size=m_prime)
        sub = LabeledSample(sample.domain, tuple(sample.pairs[i] for i in picks))
        if by_draws:
            posterior = FiniteDistribution.point_mass(rule.draw(sub, int(rng.integers(0, 2 ** 63 - 1))))
        else:
            posterior = rule.posterior(sub)
        for h, p in posterior.items():
            out[h] = out.get(h, 0.0) + float(p) / trials
    ordered = sorted(out.items())
    return FiniteDistribution.from_weights([h for h, _ in ordered], [p for _, p in ordered])


def _ratio_exceeds(q: Number, p: Number, k: Number) -> bool:
    """ln(q / p) > k."""
    if p == 0:
        return True
    if isinstance(q, Fraction) and isinstance(p, Fraction) and isinstance(k, (LogSum, Fraction)):
        return compare(log_of(q / p), k) > 0
    return math.log(float(q)) - math.log(float(p)) > float(k) + settings.comparison_tolerance


def subsample_witness(
    rule: LearningRule,
    prior: FiniteDistribution,
    sample: LabeledSample,
    C: Optional[Number] = None,
    kl_bound: Optional[Number] = None,
    mode: str = "exact",
    trials: Optional[int] = None,
    seed: Union[int, np.random.Generator, None] = 0,
) -> WitnessResult:
    """
    Execute the subsample construction on one realizable sample.

    Args:
        rule: interpolating learner A*
        prior: its prior P*
        sample: realizable sample S of size m
        C: certified KL(A*(S) || P*) <= C ln m
        kl_bound: the certified KL bound itself (overrides C); defaults to the
            rule's own ``kl_certificate(m)``
        mode: "exact" (subset enumeration, rules depending on distinct pairs) or "mc"
        trials, seed: Monte Carlo controls

    Returns:
        WitnessResult with P*(E), the lower bound (1/4) e^{-k}, Q(E) and the tail

    Raises:
        CertificateMissingError: when no KL bound is available
        TheoremViolationError: when an exact inequality of the construction fails
    """
    m = len(sample)
    if m == 0:
        raise StabilityLabError("witness needs a nonempty sample")
    if not rule.is_interpolating:
        raise StabilityLabError(f"{rule.name} is not interpolating")
    bound = _kl_bound(rule, m, C, kl_bound)
    k = bound * 2
    m_prime = subsample_size(m)

    if mode == "exact":
        q = _exact_q(rule, sample, m_prime)
        radius, used_trials = 0.0, None
    elif mode == "mc":
        used_trials = settings.default_trials if trials is None else trials
        q = _mc_q(rule, sample, m_prime, used_trials, seed)
        radius = hoeffding_radius(used_trials)
    else:
        raise StabilityLabError(f"unknown witness mode {mode!r}")
    exact = mode == "exact" and q.is_exact and prior.is_exact

    in_event = lambda h: is_consistent(sample, h)
    q_event = q.prob_of(in_event)
    q_tail = q.prob_of(lambda h: q.mass(h) > 0 and _ratio_exceeds(q.mass(h), prior.mass(h), k))
    prior_mass = prior.prob_of(in_event)
    lower_bound = math.exp(-float(k)) / 4

    checks: Dict[str, bool] = {}
    checks["Q(E) >= 3/4"] = q_event >= Fraction(3, 4) if exact else float(q_event) + radius >= 0.75
    checks["Q(ln Q/P* > k) <= 1/2"] = q_tail <= Fraction(1, 2) if exact else float(q_tail) - radius <= 0.5
    chain = q_event - q_tail
    if exact:
        # P*(E) >= e^{-k} (Q(E) - tail)  <=>  ln P*(E) + k >= ln(Q(E) - tail) when the right side is positive
        checks["P*(E) >= e^-k (Q(E) - tail)"] = chain <= 0 or (
            prior_mass > 0 and compare(log_of(prior_mass) + k, log_of(chain)) >= 0
        )
        checks["P*(E) >= e^-k / 4"] = prior_mass > 0 and compare(log_of(4 * prior_mass) + k, 0) >= 0
    else:
        checks["P*(E) >= e^-k (Q(E) - tail)"] = float(prior_mass) >= math.exp(-float(k)) * (float(chain) - 2 * radius)
        checks["P*(E) >= e^-k / 4"] = float(prior_mass) >= lower_bound * (1 - settings.comparison_tolerance)

    if exact:
        failed = [name for name in ("Q(E) >= 3/4", "P*(E) >= e^-k (Q(E) - tail)") if not checks[name]]
        if not checks["P*(E) >= e^-k / 4"] and checks["Q(ln Q/P* > k) <= 1/2"]:
            failed.append("P*(E) >= e^-k / 4")
        if failed:
            raise TheoremViolationError("subsample witness", {"failed": failed, "sample": str(sample)})
    if not checks["Q(ln Q/P* > k) <= 1/2"]:
        logger.info(f"Witness tail {float(q_tail):.4f} above 1/2 on {sample}; the final bound is not implied")

    result = WitnessResult(
        m=m,
        m_prime=m_prime,
        k=float(k),
        prior_mass=prior_mass,
        lower_bound=lower_bound,
        q_event=float(q_event),
        q_tail=float(q_tail),
        exact=exact,
        radius=radius,
        trials=used_trials,
        checks=checks,
    )
    logger.debug(f"Witness on {sample}: P*(E)={float(prior_mass):.4g} vs {lower_bound:.4g}")
    return result
