"""
Stability-boosted learner.

The booster plays an expert game whose experts are the m examples of S. Each
round the multiplicative-weights learner puts weights w_t on the examples,
the weak learner is fed k examples drawn from w_t (redrawn while the posterior
KL to the prior reaches the gate 2b/gamma) and its output f_t earns utility
1(f_t(x_i) != y_i) on example i. The returned hypothesis is maj(f_1..f_T).
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Hashable, List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from backend.components.distributions.finite import FiniteDistribution, make_rng
from backend.components.distributions.majority import TIE_RULE, majority, majority_push
from backend.components.distributions.mixtures import TruncatedHarmonicMixture, harmonic_mixture, harmonic_normalizer
from backend.components.divergences.exact import LogSum, compare
from backend.components.divergences.measures import DivergenceValue, kl
from backend.components.experts.weights import MultiplicativeWeights
from backend.components.learners.base import WeakParams
from backend.components.learners.rejection import RejectionSampler
from backend.components.primitives.domain import Hypothesis, LabeledSample
from backend.components.primitives.losses import consistent_set, empirical_loss
from backend.core.errors import (
    CertificateMissingError,
    NoConsistentTargetError,
    ResampleCapExceededError,
    StabilityLabError,
    TheoremViolationError,
)
from backend.core.settings import settings


def exact_ceil(value: LogSum) -> int:
    """Smallest integer >= value, decided by exact comparisons."""
    c = math.ceil(float(value))
    while compare(value, c - 1) <= 0:
        c -= 1
    while compare(value, c) > 0:
        c += 1
    return c


@dataclass(frozen=True)
class BoostConfig:
    gamma: Fraction
    b: Fraction
    k: int
    resample_cap: Optional[int] = None
    rounds_override: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "gamma", Fraction(self.gamma))
        object.__setattr__(self, "b", Fraction(self.b))
        if not 0 < self.gamma <= Fraction(1, 2):
            raise StabilityLabError(f"gamma must be in (0, 1/2], got {self.gamma}")
        if self.b < 0:
            raise StabilityLabError("b must be nonnegative")
        if self.k < 1:
            raise StabilityLabError("k must be positive")
        if self.rounds_override is not None and self.rounds_override < 1:
            raise StabilityLabError("rounds override must be positive")

    @classmethod
    def from_params(cls, params: WeakParams, **kwargs) -> "BoostConfig":
        return cls(params.gamma, params.b, params.k, **kwargs)

    @property
    def kl_gate(self) -> Fraction:
        return 2 * self.b / self.gamma

    @property
    def cap(self) -> int:
        if self.resample_cap is not None:
            return self.resample_cap
        return math.ceil(settings.resample_cap_factor / self.gamma)

    def rounds(self, m: int) -> int:
        """T = ceil(8 ln m / gamma^2) + 1 (natural log)."""
        if self.rounds_override is not None:
            return self.rounds_override
        if m < 1:
            raise StabilityLabError("boosting needs a nonempty sample")
        return exact_ceil(LogSum.log(m) * (8 / self.gamma ** 2)) + 1

    def passes_gate(self, value: DivergenceValue) -> bool:
        """KL below the gate; a zero KL always passes (b = 0 makes the gate 0)."""
        return value < self.kl_gate or value.equals(0)

    def to_dict(self) -> Dict[str, object]:
        return {
            "gamma": str(self.gamma),
            "b": str(self.b),
            "k": self.k,
            "kl_gate": str(self.kl_gate),
            "resample_cap": self.cap,
            "rounds_override": self.rounds_override,
        }


@dataclass
class BoostRound:
    weights: np.ndarray
    indices: Tuple[int, ...]
    resamples: int
    rejected_kls: List[float]
    kl: DivergenceValue
    hypothesis: Hypothesis
    gains: np.ndarray
    utility: float


@dataclass
class BoostTranscript:
    config: BoostConfig
    sample: LabeledSample
    rounds: List[BoostRound] = field(default_factory=list)
    majority: Optional[Hypothesis] = None
    log_base: str = "nats"
    tie_rule: str = TIE_RULE

    @property
    def T(self) -> int:
        return len(self.rounds)

    @property
    def m(self) -> int:
        return len(self.sample)

    @property
    def interpolates(self) -> bool:
        return self.majority is not None and empirical_loss(self.sample, self.majority) == 0

    @property
    def kl_total(self) -> DivergenceValue:
        total = DivergenceValue.zero()
        for r in self.rounds:
            total = total + r.kl
        return total

    @property
    def resample_total(self) -> int:
        return sum(r.resamples for r in self.rounds)

    @property
    def resample_frequency(self) -> float:
        """Fraction of subsample draws rejected by the gate."""
        draws = self.T + self.resample_total
        return self.resample_total / draws if draws else 0.0

    @property
    def utility_total(self) -> float:
        return math.fsum(r.utility for r in self.rounds)

    def utility_within_bound(self) -> bool:
        """U(O_S, T) <= (1/2 - gamma/2) T; an in-expectation statement, so only logged."""
        return self.utility_total <= (0.5 - float(self.config.gamma) / 2) * self.T + settings.comparison_tolerance

    def to_dict(self) -> Dict[str, object]:
        return {
            "m": self.m,
            "T": self.T,
            "config": self.config.to_dict(),
            "majority": self.majority.to_string() if self.majority else None,
            "interpolates": self.interpolates,
            "kl_total": float(self.kl_total),
            "resamples": self.resample_total,
            "resample_frequency": self.resample_frequency,
            "utility_total": self.utility_total,
            "log_base": self.log_base,
            "tie_rule": self.tie_rule,
        }


def _check_realizable(weak: RejectionSampler, sample: LabeledSample) -> None:
    if len(consistent_set(sample, weak.universe)) == 0 or weak.consistency_mass(sample) == 0:
        raise NoConsistentTargetError()


def boost(
    weak: RejectionSampler,
    sample: LabeledSample,
    config: BoostConfig,
    seed: Union[int, np.random.Generator, None] = 0,
    check_interpolation: bool = True,
) -> Tuple[Hypothesis, BoostTranscript]:
    """
    Run the stability-boosted learner on a realizable sample.

    Args:
        weak: weak learner with a prior (its declared k is taken from config)
        sample: realizable labeled sample of size m
        config: (gamma, b, k) and caps
        seed: randomness for subsampling and posterior draws
        check_interpolation: treat a non-interpolating result as a theorem violation
            (skipped automatically when the round count is overridden)

    Returns:
        (majority hypothesis, transcript)
    """
    if len(sample) == 0:
        raise StabilityLabError("boosting needs a nonempty sample")
    _check_realizable(weak, sample)
    rng = make_rng(seed)
    m = len(sample)
    T = config.rounds(m)
    learner = MultiplicativeWeights(m, T)
    transcript = BoostTranscript(config, sample)
    kl_cache: Dict[Hashable, DivergenceValue] = {}
    labels = np.asarray([y for _, y in sample.pairs])
    points = [x for x, _ in sample.pairs]

    for t in range(T):
        weights = learner.weights()
        rejected: List[float] = []
        while True:
            indices = tuple(int(i) for i in rng.choice(m, size=config.k, p=weights))
            subsample = LabeledSample(sample.domain, tuple(sample.pairs[i] for i in indices))
            key = weak._key(subsample)
            value = kl_cache.get(key)
            if value is None:
                value = kl(weak.posterior(subsample), weak.prior)
                kl_cache[key] = value
            if config.passes_gate(value):
                break
            rejected.append(float(value))
            if len(rejected) > config.cap:
                raise ResampleCapExceededError(t, rejected, float(config.kl_gate))
        f_t = weak.posterior(subsample).sample(rng)
        predictions = np.asarray([f_t.label(x) for x in points])
        gains = (predictions != labels).astype(float)
        utility = float(weights @ gains)
        transcript.rounds.append(BoostRound(weights, indices, len(rejected), rejected, value, f_t, gains, utility))
        learner.update(gains)

    transcript.majority = majority([r.hypothesis for r in transcript.rounds])
    if not transcript.utility_within_bound():
        logger.info(
            f"Boost utility {transcript.utility_total:.3f} above (1/2 - gamma/2) T = "
            f"{(0.5 - float(config.gamma) / 2) * T:.3f} on this run"
        )
    if check_interpolation and config.rounds_override is None and not transcript.interpolates:
        raise TheoremViolationError("boosted learner interpolates", str(sample))
    logger.debug(
        f"Boosted m={m} T={T}: interpolates={transcript.interpolates}, "
        f"KL total {float(transcript.kl_total):.4f}, resamples {transcript.resample_total}"
    )
    return transcript.majority, transcript


def kl_certificate_value(config: BoostConfig, m: int, indices: Sequence[int]):
    """T * 2b/gamma + ln(z_Lambda T^2): the certified KL(A*(S) || P*) for a mixture over ``indices``."""
    T = config.rounds(m)
    if T not in indices:
        raise CertificateMissingError(f"mixture index set {sorted(indices)} does not contain T={T}")
    z = harmonic_normalizer(sorted(set(indices)))
    return LogSum.constant(T * config.kl_gate) + LogSum.log(z * T * T)


def boosted_prior(
    prior: FiniteDistribution, m_range: Sequence[int], config: BoostConfig, dense: bool = False
) -> TruncatedHarmonicMixture:
    """
    P* = sum over l of majority_push(P, l) / (z l^2).

    The sparse default keeps only l in {T(m) : m in m_range}; ``dense`` keeps 1..max T.
    """
    needed = sorted({config.rounds(m) for m in m_range})
    if not needed:
        raise StabilityLabError("boosted prior needs at least one sample size")
    indices = range(1, needed[-1] + 1) if dense else needed
    components = {l: majority_push(prior, l) for l in indices}
    mixture = harmonic_mixture(components, shared_universe=False)
    logger.info(f"Boosted prior over l in {list(indices)[:8]}{'...' if len(indices) > 8 else ''}")
    return mixture

