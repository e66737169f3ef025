"""
Empirical certification of weak-learner parameters (k, gamma, b).

The advantage gamma is never assumed. It is measured over a battery of
realizable populations with conservative Hoeffding radii, then rounded
down; b is rounded up.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence

import numpy as np
from loguru import logger

from backend.components.distributions.finite import FiniteDistribution, make_rng
from backend.components.divergences.measures import kl
from backend.components.learners.base import WeakParams
from backend.components.learners.rejection import FiniteClassWeakLearner
from backend.components.primitives.domain import HypothesisClass, PopulationDistribution
from backend.components.primitives.losses import population_loss
from backend.core.confidence import hoeffding_radius
from backend.core.errors import WeakLearnerError
from backend.core.settings import settings

GRID = 10 ** 6


@dataclass
class WeakCertificate:
    params: WeakParams
    trials: int
    loss_radius: float
    kl_radius: float
    worst_loss: float
    worst_kl: float
    populations: int
    per_population: List[Dict[str, float]] = field(default_factory=list, repr=False)

    def to_dict(self) -> Dict[str, object]:
        return {
            "k": self.params.k,
            "gamma": str(self.params.gamma),
            "b": str(self.params.b),
            "trials": self.trials,
            "loss_radius": self.loss_radius,
            "kl_radius": self.kl_radius,
            "worst_loss": self.worst_loss,
            "worst_kl": self.worst_kl,
            "populations": self.populations,
        }


def realizable_battery(hclass: HypothesisClass, weighted: int = 2, seed: int = 0) -> List[PopulationDistribution]:
    """
    Uniform-marginal population per member plus ``weighted`` random-marginal
    populations per member (Dirichlet weights over all points).
    """
    rng = make_rng(seed)
    battery = []
    for target in hclass.members:
        battery.append(PopulationDistribution.realizable_uniform(target))
        for _ in range(weighted):
            weights = rng.dirichlet(np.ones(hclass.domain.size))
            probs = [Fraction(float(w)).limit_denominator(10 ** 6) for w in weights]
            pairs = [(x, target.label(x)) for x in hclass.domain.points]
            dist = FiniteDistribution.from_weights(pairs, [p if p > 0 else Fraction(1, 10 ** 6) for p in probs])
            battery.append(PopulationDistribution(hclass.domain, dist))
    return battery


def _floor_grid(value: float) -> Fraction:
    return Fraction(math.floor(value * GRID), GRID)


def _ceil_grid(value: float) -> Fraction:
    return Fraction(math.ceil(value * GRID), GRID)


def certify_weak_learner(
    rule: FiniteClassWeakLearner,
    battery: Optional[Sequence[PopulationDistribution]] = None,
    trials: Optional[int] = None,
    seed: int = 0,
) -> WeakCertificate:
    """
    Measure (gamma, b) for a class weak learner and attach them to the rule.

    Args:
        rule: weak learner; its k fixes the subsample size
        battery: realizable populations (default: realizable_battery of the class)
        trials: samples drawn per population
        seed: base seed

    Returns:
        WeakCertificate with gamma = 1/2 - max_D (mean loss + radius) and
        b = min(ln(1/min prior), max_D (mean KL + radius)), on a 1e-6 grid

    Raises:
        WeakLearnerError: when the measured advantage is not positive
    """
    trials = settings.default_trials if trials is None else trials
    battery = realizable_battery(rule.hclass, seed=seed) if battery is None else list(battery)
    rng = make_rng(seed)
    ceiling = rule.kl_ceiling
    loss_radius = hoeffding_radius(trials, 1.0)
    kl_radius = hoeffding_radius(trials, max(ceiling, 1e-12))

    worst_loss = worst_kl = 0.0
    rows = []
    kl_cache: Dict[object, float] = {}
    for index, pop in enumerate(battery):
        losses, kls = [], []
        for _ in range(trials):
            sample = pop.draw(rule.k, rng)
            posterior = rule.posterior(sample)
            losses.append(float(posterior.expectation(lambda h: population_loss(pop, h))))
            key = rule._key(sample)
            if key not in kl_cache:
                kl_cache[key] = float(kl(posterior, rule.prior))
            kls.append(kl_cache[key])
        mean_loss, mean_kl = float(np.mean(losses)), float(np.mean(kls))
        rows.append({"population": index, "mean_loss": mean_loss, "mean_kl": mean_kl})
        worst_loss = max(worst_loss, mean_loss)
        worst_kl = max(worst_kl, mean_kl)

    gamma = _floor_grid(0.5 - (worst_loss + loss_radius))
    if gamma <= 0:
        raise WeakLearnerError(
            f"{rule.name}: measured loss {worst_loss:.4f} + radius {loss_radius:.4f} leaves no advantage"
        )
    b = _ceil_grid(min(ceiling, worst_kl + kl_radius))
    params = WeakParams(rule.k, min(gamma, Fraction(1, 2)), b)
    rule.certify(params)
    logger.info(
        f"Certified {rule.name} on {len(battery)} populations x {trials} trials: "
        f"gamma={float(params.gamma):.6f}, b={float(params.b):.6f}"
    )
    return WeakCertificate(params, trials, loss_radius, kl_radius, worst_loss, worst_kl, len(battery), rows)
