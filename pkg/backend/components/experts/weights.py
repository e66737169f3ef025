"""
Multiplicative weights in gain form with a known horizon.
"""

import math
from typing import Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from backend.components.distributions.finite import FiniteDistribution
from backend.core.errors import StabilityLabError


def default_eta(experts: int, horizon: int) -> float:
    """eta = sqrt(2 ln m / T); 0 for a single expert."""
    if experts < 1 or horizon < 1:
        raise StabilityLabError("need at least one expert and one round")
    return math.sqrt(2 * math.log(experts) / horizon)


def regret_bound(experts: int, horizon: int) -> float:
    """sqrt(2 T ln m)."""
    return math.sqrt(2 * horizon * math.log(experts))


def _normalized(log_weights: np.ndarray) -> np.ndarray:
    probs = np.exp(log_weights - logsumexp(log_weights))
    return probs / probs.sum()


def mw_weights(
    history: Sequence[Sequence[float]],
    experts: Optional[int] = None,
    horizon: Optional[int] = None,
    eta: Optional[float] = None,
) -> FiniteDistribution:
    """
    w_{t+1}(z) proportional to exp(eta * U(z, t)) over expert indices.

    Args:
        history: per-round utility vectors (one entry per expert)
        experts: number of experts (inferred from history when omitted)
        horizon: known horizon T; history must be shorter
        eta: learning rate (default sqrt(2 ln m / T))

    Returns:
        Float FiniteDistribution over 0..m-1
    """
    rows = np.asarray(history, dtype=float)
    if experts is None:
        if rows.size == 0:
            raise StabilityLabError("cannot infer the number of experts from an empty history")
        experts = rows.shape[1]
    if horizon is not None and len(history) >= horizon:
        raise StabilityLabError(f"history of {len(history)} rounds reaches the horizon {horizon}")
    if eta is None:
        eta = default_eta(experts, horizon if horizon is not None else max(1, len(history)))
    cumulative = rows.sum(axis=0) if rows.size else np.zeros(experts)
    if cumulative.shape != (experts,):
        raise StabilityLabError(f"utility vectors must have {experts} entries")
    return FiniteDistribution(tuple(range(experts)), tuple(_normalized(eta * cumulative).tolist()))


class MultiplicativeWeights:
    """Stateful MW learner: call ``weights`` before each round and ``update`` after it."""

    def __init__(self, experts: int, horizon: int, eta: Optional[float] = None):
        self.experts = experts
        self.horizon = horizon
        self.eta = default_eta(experts, horizon) if eta is None else eta
        self.cumulative = np.zeros(experts)
        self.rounds = 0

    def weights(self) -> np.ndarray:
        return _normalized(self.eta * self.cumulative)

    def distribution(self) -> FiniteDistribution:
        return FiniteDistribution(tuple(range(self.experts)), tuple(self.weights().tolist()))

    def update(self, utilities: Sequence[float]) -> None:
        if self.rounds >= self.horizon:
            raise StabilityLabError(f"horizon {self.horizon} already reached")
        gains = np.asarray(utilities, dtype=float)
        if gains.shape != (self.experts,):
            raise StabilityLabError(f"utility vectors must have {self.experts} entries")
        self.cumulative += gains
        self.rounds += 1
