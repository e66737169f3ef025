"""
Online learning with expert advice: the game loop, adversaries and regret.
"""

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from loguru import logger

from backend.components.distributions.finite import make_rng
from backend.components.experts.weights import MultiplicativeWeights, regret_bound
from backend.core.errors import StabilityLabError, TheoremViolationError
from backend.core.settings import settings

# Adversary: (weights of round t, round index, rng) -> instance index
Adversary = Callable[[np.ndarray, int, np.random.Generator], int]


@dataclass
class ExpertGame:
    """
    utilities[z, i] in {0, 1} is the gain of expert z on instance i.
    """
    utilities: np.ndarray
    horizon: int

    def __post_init__(self):
        self.utilities = np.asarray(self.utilities, dtype=float)
        if self.utilities.ndim != 2 or self.utilities.shape[0] < 1 or self.utilities.shape[1] < 1:
            raise StabilityLabError("utility matrix must be experts x instances and nonempty")
        if not np.all((self.utilities == 0) | (self.utilities == 1)):
            raise StabilityLabError("utilities must be 0/1")
        if self.horizon < 1:
            raise StabilityLabError("horizon must be positive")

    @property
    def experts(self) -> int:
        return self.utilities.shape[0]

    @property
    def instances(self) -> int:
        return self.utilities.shape[1]

    @classmethod
    def random(cls, experts: int, instances: int, horizon: int, seed: int = 0) -> "ExpertGame":
        rng = make_rng(seed)
        return cls(rng.integers(0, 2, size=(experts, instances)), horizon)


@dataclass
class Round:
    weights: np.ndarray
    instance: int
    utility: float


@dataclass
class Transcript:
    experts: int
    horizon: int
    rounds: List[Round] = field(default_factory=list)
    expert_totals: Optional[np.ndarray] = None
    learner_total: float = 0.0

    @property
    def best_expert_total(self) -> float:
        return float(self.expert_totals.max())

    @property
    def regret(self) -> float:
        return self.best_expert_total - self.learner_total

    @property
    def bound(self) -> float:
        return regret_bound(self.experts, len(self.rounds))

    def recomputed_learner_total(self) -> float:
        return math.fsum(r.utility for r in self.rounds)

    def to_frame(self) -> pd.DataFrame:
        records = []
        for t, r in enumerate(self.rounds):
            record = {"round": t, "instance": r.instance, "utility": r.utility}
            record.update({f"w_{z}": float(w) for z, w in enumerate(r.weights)})
            records.append(record)
        return pd.DataFrame.from_records(records)

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False)
        return path


# Adversaries


def best_response_adversary(game: ExpertGame) -> Adversary:
    """Adaptive: picks the instance minimizing the learner's expected utility this round."""
    def choose(weights: np.ndarray, t: int, rng: np.random.Generator) -> int:
        return int(np.argmin(weights @ game.utilities))
    return choose


def random_adversary(game: ExpertGame) -> Adversary:
    def choose(weights: np.ndarray, t: int, rng: np.random.Generator) -> int:
        return int(rng.integers(0, game.instances))
    return choose


def stationary_adversary(game: ExpertGame, instance_probs: Optional[Sequence[float]] = None) -> Adversary:
    """Draws every instance i.i.d. from a fixed distribution (uniform by default)."""
    probs = np.full(game.instances, 1.0 / game.instances) if instance_probs is None else np.asarray(instance_probs)

    def choose(weights: np.ndarray, t: int, rng: np.random.Generator) -> int:
        return int(rng.choice(game.instances, p=probs))
    return choose


ADVERSARIES = {
    "best-response": best_response_adversary,
    "random": random_adversary,
    "stationary": stationary_adversary,
}


def run_game(
    game: ExpertGame,
    adversary: Adversary,
    seed: int = 0,
    learner: Optional[MultiplicativeWeights] = None,
    check_bound: bool = True,
) -> Transcript:
    """
    Play T rounds of MW against an adversary.

    Learner utilities are exact expectations u_t = sum_z w_t(z) u(z, i_t), not
    sampled expert picks.
    """
    rng = make_rng(seed)
    learner = learner or MultiplicativeWeights(game.experts, game.horizon)
    transcript = Transcript(game.experts, game.horizon)
    totals = np.zeros(game.experts)
    running = 0.0
    for t in range(game.horizon):
        weights = learner.weights()
        instance = adversary(weights, t, rng)
        gains = game.utilities[:, instance]
        utility = float(weights @ gains)
        transcript.rounds.append(Round(weights, instance, utility))
        running += utility
        totals += gains
        learner.update(gains)
    transcript.expert_totals = totals
    transcript.learner_total = running

    tolerance = settings.comparison_tolerance * max(1, game.horizon)
    if abs(transcript.recomputed_learner_total() - running) > tolerance:
        raise TheoremViolationError("learner utility accounting", (running, transcript.recomputed_learner_total()))
    if check_bound and transcript.regret > transcript.bound + tolerance:
        raise TheoremViolationError("MW regret <= sqrt(2 T ln m)", (transcript.regret, transcript.bound))
    logger.debug(f"Expert game m={game.experts} T={game.horizon}: regret {transcript.regret:.4f} <= {transcript.bound:.4f}")
    return transcript
