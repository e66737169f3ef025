"""
Consistency game value and the fractional clique number.

The row player picks a prior over hypotheses, the column player a realizable
sample; the payoff is 1 when the hypothesis is consistent with the sample.
C_m is the reciprocal of the game value.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy.special import logsumexp

from backend.components.dimensions.dichotomies import (
    Dichotomy,
    dichotomies_on_exactly,
    minimal_columns,
)
from backend.components.distributions.finite import FiniteDistribution
from backend.components.primitives.domain import Hypothesis, HypothesisClass, all_functions
from backend.core.budgets import check_budget
from backend.core.errors import StabilityLabError, TheoremViolationError
from backend.core.settings import settings
from backend.components.dimensions.simplex import solve_packing_lp

METHODS = ("exact", "mw")
UNIVERSES = ("class", "all")


@dataclass
class GameValueResult:
    m: int
    value: Fraction
    optimal_prior: FiniteDistribution
    hard_sample_mixture: FiniteDistribution
    method: str
    approx_gap: Fraction
    universe: str = "class"
    columns: Tuple[Dichotomy, ...] = field(default_factory=tuple, repr=False)
    iterations: int = 0

    def __post_init__(self):
        if not 0 < self.value <= 1:
            raise TheoremViolationError("game value in (0, 1]", self.value)
        if self.universe == "all" and self.value + self.approx_gap < Fraction(1, 2 ** self.m):
            raise TheoremViolationError("game value >= 2^-m over all functions", self.value)
        if self.method == "exact" and self.approx_gap != 0:
            raise TheoremViolationError("exact LP has zero gap", self.approx_gap)
        if self.columns:
            worst = min(consistency_mass(self.optimal_prior, d) for d in self.columns)
            if worst < self.value - self.approx_gap:
                raise TheoremViolationError("prior certifies the game value", (worst, self.value))

    @property
    def clique_number(self) -> Fraction:
        return 1 / self.value

    def to_dict(self) -> Dict[str, object]:
        return {
            "m": self.m,
            "value": str(self.value),
            "clique_number": str(self.clique_number),
            "method": self.method,
            "approx_gap": str(self.approx_gap),
            "universe": self.universe,
            "iterations": self.iterations,
        }


def consistency_mass(prior: FiniteDistribution, d: Dichotomy):
    return prior.prob_of(lambda h: d.consistent(h))


def _rows_for(hclass: HypothesisClass, universe: str) -> List[Hypothesis]:
    if universe == "class":
        return list(hclass.members)
    if universe == "all":
        check_budget("universe_points", hclass.domain.size)
        check_budget("class_members", 1 << hclass.domain.size)
        return list(all_functions(hclass.domain))
    raise StabilityLabError(f"unknown game universe {universe!r}")


def _reduced_rows(rows: List[Hypothesis], columns: Sequence[Dichotomy]) -> List[Hypothesis]:
    """Drop rows whose consistent-column set is contained in another row's (row player maximizes)."""
    sets = [frozenset(j for j, d in enumerate(columns) if d.consistent(h)) for h in rows]
    order = sorted(range(len(rows)), key=lambda i: (-len(sets[i]), i))
    kept: List[int] = []
    seen = set()
    for i in order:
        s = sets[i]
        if s in seen or any(s < sets[k] for k in kept):
            continue
        seen.add(s)
        kept.append(i)
    return [rows[i] for i in sorted(kept)]


def game_columns(hclass: HypothesisClass, m: int, rows: Optional[Sequence[Hypothesis]] = None) -> List[Dichotomy]:
    """Realizable dichotomies on min(m, n) points, pruned against the rows the prior ranges over."""
    k = min(m, hclass.domain.size)
    rows = list(hclass.members) if rows is None else list(rows)
    return minimal_columns(dichotomies_on_exactly(hclass, k), rows)


def _payoff(rows: Sequence[Hypothesis], columns: Sequence[Dichotomy]) -> List[List[int]]:
    return [[1 if d.consistent(h) else 0 for d in columns] for h in rows]


def _solve_exact(rows: List[Hypothesis], columns: List[Dichotomy], m: int, universe: str) -> GameValueResult:
    check_budget("lp_cells", len(rows) * len(columns), hint="use method='mw'")
    A = [[Fraction(v) for v in row] for row in _payoff(rows, columns)]
    solution = solve_packing_lp(A, [Fraction(1)] * len(rows), [Fraction(1)] * len(columns))
    if solution.status != "optimal":
        raise StabilityLabError(f"game LP ended with status {solution.status}")
    total = solution.objective
    value = 1 / total
    prior = FiniteDistribution(tuple(rows), tuple(u / total for u in solution.dual))
    mixture = FiniteDistribution(tuple(columns), tuple(y / total for y in solution.primal))
    result = GameValueResult(m, value, prior, mixture, "exact", Fraction(0), universe, tuple(columns))
    best_row = max(sum(mixture.probs[j] for j, d in enumerate(columns) if d.consistent(h)) for h in rows)
    if best_row != value:
        raise TheoremViolationError("hard-sample mixture certifies the game value", (best_row, value))
    return result


def _to_exact_distribution(weights: np.ndarray) -> List[Fraction]:
    fractions = [Fraction(float(w)).limit_denominator(10 ** 12) for w in weights]
    total = sum(fractions)
    return [f / total for f in fractions]


def _solve_mw(
    rows: List[Hypothesis], columns: List[Dichotomy], m: int, universe: str, gap: float
) -> GameValueResult:
    """
    Optimistic multiplicative-weights self-play.

    Certificates come from the running averages: the averaged prior's worst
    column bounds the value from below and the averaged column mixture's best
    row bounds it from above.
    """
    A = np.asarray(_payoff(rows, columns), dtype=float)
    n_rows, n_cols = A.shape
    eta = 0.25
    cap = math.ceil(8 * math.log(max(n_rows, n_cols, 2)) / gap ** 2)
    checkpoint = max(1, settings.mw_checkpoint_every)

    row_gain = np.zeros(n_rows)
    col_loss = np.zeros(n_cols)
    last_row_gain = np.zeros(n_rows)
    last_col_loss = np.zeros(n_cols)
    row_sum = np.zeros(n_rows)
    col_sum = np.zeros(n_cols)
    best_lower, best_prior = -1.0, None
    best_upper, best_mixture = 2.0, None
    t = 0
    while t < cap:
        t += 1
        p = np.exp(eta * (row_gain + last_row_gain) - logsumexp(eta * (row_gain + last_row_gain)))
        q = np.exp(-eta * (col_loss + last_col_loss) - logsumexp(-eta * (col_loss + last_col_loss)))
        last_row_gain = A @ q
        last_col_loss = p @ A
        row_gain += last_row_gain
        col_loss += last_col_loss
        row_sum += p
        col_sum += q
        if t % checkpoint == 0 or t == cap:
            p_bar, q_bar = row_sum / t, col_sum / t
            lower, upper = float((p_bar @ A).min()), float((A @ q_bar).max())
            if lower > best_lower:
                best_lower, best_prior = lower, p_bar.copy()
            if upper < best_upper:
                best_upper, best_mixture = upper, q_bar.copy()
            if best_upper - best_lower <= gap / 2:
                break

    prior_probs = _to_exact_distribution(best_prior)
    mixture_probs = _to_exact_distribution(best_mixture)
    lower = min(sum(prior_probs[i] for i, h in enumerate(rows) if d.consistent(h)) for d in columns)
    upper = max(sum(mixture_probs[j] for j, d in enumerate(columns) if d.consistent(h)) for h in rows)
    certified_gap = upper - lower
    if certified_gap > gap:
        logger.warning(f"MW stopped after {t} iterations with certified gap {float(certified_gap):.2e} > {gap}")
    prior = FiniteDistribution(tuple(rows), tuple(prior_probs))
    mixture = FiniteDistribution(tuple(columns), tuple(mixture_probs))
    return GameValueResult(m, lower, prior, mixture, "mw", certified_gap, universe, tuple(columns), t)


def fractional_clique_value(
    hclass: HypothesisClass,
    m: int,
    method: str = "exact",
    universe: str = "class",
    gap: Optional[float] = None,
) -> GameValueResult:
    """
    Value of the consistency game for samples of size m.

    Args:
        hclass: hypothesis class supplying the realizable samples
        m: sample size (m >= 1)
        method: "exact" (rational LP) or "mw" (certified multiplicative-weights bounds)
        universe: prior over class members ("class") or over all functions ("all")
        gap: target certified gap for "mw" (default settings.mw_gap)

    Returns:
        GameValueResult with certifying strategies for both players
    """
    if m < 1:
        raise StabilityLabError("game needs m >= 1")
    if method not in METHODS:
        raise StabilityLabError(f"unknown method {method!r}; choose from {METHODS}")
    universe_rows = _rows_for(hclass, universe)
    columns = game_columns(hclass, m, universe_rows)
    rows = _reduced_rows(universe_rows, columns)
    logger.debug(f"Game {hclass.name} m={m}: {len(rows)} rows x {len(columns)} columns ({method})")
    if method == "exact":
        return _solve_exact(rows, columns, m, universe)
    return _solve_mw(rows, columns, m, universe, gap if gap is not None else settings.mw_gap)


@dataclass
class ProbeRow:
    m: int
    clique_number: Fraction
    full: int
    method: str

    @property
    def ratio(self) -> float:
        return float(self.clique_number) / self.full

    @property
    def saturated(self) -> bool:
        return self.clique_number == self.full


@dataclass
class DichotomyProbe:
    rows: List[ProbeRow]

    @property
    def fractional_clique_dimension(self) -> int:
        """Largest probed m with C_m = 2^m (0 when none)."""
        saturated = [r.m for r in self.rows if r.saturated]
        return max(saturated) if saturated else 0

    @property
    def dp_learnable_consistent(self) -> bool:
        return any(not r.saturated for r in self.rows)

    def to_records(self) -> List[Dict[str, object]]:
        return [
            {
                "m": r.m,
                "clique_number": str(r.clique_number),
                "two_to_m": r.full,
                "ratio": r.ratio,
                "saturated": r.saturated,
                "method": r.method,
            }
            for r in self.rows
        ]


def dichotomy_probe(
    hclass: HypothesisClass, m_grid: Sequence[int], method: str = "exact", universe: str = "class"
) -> DichotomyProbe:
    rows = []
    for m in m_grid:
        result = fractional_clique_value(hclass, m, method, universe)
        rows.append(ProbeRow(m, result.clique_number, 2 ** m, method))
    probe = DichotomyProbe(rows)
    logger.info(
        f"Dichotomy probe on {hclass.name}: fc={probe.fractional_clique_dimension}, "
        f"DP-learnable-consistent={probe.dp_learnable_consistent}"
    )
    return probe
