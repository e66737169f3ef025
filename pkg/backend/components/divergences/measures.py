"""
Divergences between finite distributions.

Conventions: 0/0 = 0 and x/0 = infinity. Natural logs throughout; ``in_bits``
converts for reporting. Exact inputs give exact ``LogSum`` values for KL and
Renyi orders in {integers >= 2, infinity}; other rational orders give an
``Approx`` enclosed by decimal intervals (mode "interval"). Float inputs give
float values.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Hashable, Mapping, Optional, Tuple, Union

import numpy as np
from loguru import logger
from scipy.special import logsumexp

from backend.components.distributions.finite import FiniteDistribution, align
from backend.components.divergences.exact import Approx, LogSum, Number, compare, real_renyi
from backend.core.errors import DistributionError, StabilityLabError
from backend.core.settings import settings

Alpha = Union[int, float, Fraction]
Channel = Mapping[Hashable, FiniteDistribution]
INTERVAL = "interval"


@dataclass(frozen=True)
class DivergenceValue:
    value: Optional[Union[LogSum, Approx, float]]
    infinite: bool = False
    mode: str = "exact"
    flags: Tuple[str, ...] = field(default_factory=tuple)

    @classmethod
    def inf(cls, mode: str = "exact", flags: Tuple[str, ...] = ()) -> "DivergenceValue":
        return cls(None, True, mode, flags)

    @classmethod
    def zero(cls) -> "DivergenceValue":
        return cls(LogSum.zero())

    @property
    def is_exact(self) -> bool:
        return self.mode == "exact"

    def __float__(self) -> float:
        return math.inf if self.infinite else float(self.value)

    def in_bits(self) -> float:
        return float(self) / math.log(2)

    def _cmp(self, other) -> int:
        if isinstance(other, DivergenceValue):
            if self.infinite or other.infinite:
                return int(self.infinite) - int(other.infinite)
            return compare(self.value, other.value)
        if isinstance(other, float) and math.isinf(other):
            return 0 if self.infinite else -1
        if self.infinite:
            return 1
        return compare(self.value, other)

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def equals(self, other) -> bool:
        return self._cmp(other) == 0

    def __add__(self, other: "DivergenceValue") -> "DivergenceValue":
        if self.infinite or other.infinite:
            return DivergenceValue.inf(_joint_mode(self, other))
        if self.is_exact and other.is_exact:
            return DivergenceValue(self.value + other.value)
        return DivergenceValue(float(self) + float(other), mode="float")

    def scaled(self, factor: Fraction) -> "DivergenceValue":
        if self.infinite:
            return self
        if self.is_exact:
            return DivergenceValue(self.value * Fraction(factor), flags=self.flags)
        return DivergenceValue(float(self) * float(factor), mode="float", flags=self.flags)

    def __str__(self) -> str:
        return "inf" if self.infinite else f"{float(self):.6g}"


def _joint_mode(*values: DivergenceValue) -> str:
    return "exact" if all(v.is_exact for v in values) else "float"


def _float_log(x) -> float:
    if isinstance(x, Fraction):
        return math.log(x.numerator) - math.log(x.denominator)
    return math.log(x)


def _normalize_alpha(alpha: Alpha) -> Alpha:
    if isinstance(alpha, float) and math.isinf(alpha):
        return math.inf
    if isinstance(alpha, float) and alpha.is_integer():
        return int(alpha)
    if isinstance(alpha, Fraction) and alpha.denominator == 1:
        return int(alpha)
    return alpha


def kl(p: FiniteDistribution, q: FiniteDistribution) -> DivergenceValue:
    """KL(p || q) = sum p ln(p/q)."""
    _, pv, qv = align(p, q)
    exact = p.is_exact and q.is_exact
    terms = []
    for pi, qi in zip(pv, qv):
        if pi == 0:
            continue
        if qi == 0:
            return DivergenceValue.inf("exact" if exact else "float")
        terms.append((pi, qi))
    if exact:
        return DivergenceValue(LogSum(Fraction(0), [(pi / qi, pi) for pi, qi in terms]))
    value = sum(float(pi) * (_float_log(pi) - _float_log(qi)) for pi, qi in terms)
    return DivergenceValue(max(value, 0.0), mode="float")


def renyi(alpha: Alpha, p: FiniteDistribution, q: FiniteDistribution) -> DivergenceValue:
    """
    Renyi divergence of order alpha.

    Args:
        alpha: order in (0, inf]; 1 gives KL, inf gives ln of the max ratio over p's support
        p, q: distributions compared over the union of their atoms

    Returns:
        DivergenceValue: exact for alpha in {1, 2, 3, ..., inf} on exact inputs,
        interval-enclosed for other orders on exact inputs, float otherwise
    """
    alpha = _normalize_alpha(alpha)
    if alpha <= 0:
        raise StabilityLabError(f"Renyi order must be positive, got {alpha}")
    flags: Tuple[str, ...] = ("alpha-below-1",) if alpha < 1 else ()
    if alpha == 1:
        return kl(p, q)

    _, pv, qv = align(p, q)
    exact = p.is_exact and q.is_exact
    mode = "exact" if exact else "float"

    if alpha == math.inf:
        ratios = []
        for pi, qi in zip(pv, qv):
            if pi == 0:
                continue
            if qi == 0:
                return DivergenceValue.inf(mode)
            ratios.append(pi / qi)
        top = max(ratios)
        if exact:
            return DivergenceValue(LogSum.log(top))
        return DivergenceValue(max(_float_log(top), 0.0), mode="float")

    if alpha > 1 and any(pi > 0 and qi == 0 for pi, qi in zip(pv, qv)):
        return DivergenceValue.inf(mode, flags)
    pairs = [(pi, qi) for pi, qi in zip(pv, qv) if pi > 0 and qi > 0]
    if not pairs:
        return DivergenceValue.inf(mode, flags)

    if exact and isinstance(alpha, int):
        total = sum((pi ** alpha / qi ** (alpha - 1) for pi, qi in pairs), Fraction(0))
        return DivergenceValue(LogSum.log(total) / (alpha - 1), flags=flags)

    a = float(alpha)
    logs = np.array([a * _float_log(pi) + (1 - a) * _float_log(qi) for pi, qi in pairs])
    value = max(float(logsumexp(logs)) / (a - 1), 0.0)
    if exact:
        # rational order: enclosed by decimal intervals, compared like any other exact value
        return DivergenceValue(real_renyi(Fraction(alpha), pairs, value), mode=INTERVAL, flags=flags)
    return DivergenceValue(value, mode="float", flags=flags)


def tv(p: FiniteDistribution, q: FiniteDistribution):
    """Total variation: half the L1 distance."""
    _, pv, qv = align(p, q)
    if p.is_exact and q.is_exact:
        return sum((abs(pi - qi) for pi, qi in zip(pv, qv)), Fraction(0)) / 2
    return 0.5 * float(sum(abs(float(pi) - float(qi)) for pi, qi in zip(pv, qv)))


def exp_of(eps: Number) -> Optional[Fraction]:
    """e^eps when it is rational, else None."""
    if isinstance(eps, (int, Fraction)) and eps == 0:
        return Fraction(1)
    if isinstance(eps, LogSum):
        return eps.exp_rational()
    return None


def _check_eps(eps: Number) -> None:
    if compare(eps, 0) < 0:
        raise StabilityLabError(f"epsilon must be nonnegative, got {float(eps)}")


def hockey_stick(eps: Number, p: FiniteDistribution, q: FiniteDistribution):
    """
    Tightest delta with p(O) <= e^eps q(O) + delta for every event O.

    Exact (a Fraction) when e^eps is rational and both inputs are exact;
    pass eps as ``log_of(r)`` to stay exact.
    """
    _check_eps(eps)
    _, pv, qv = align(p, q)
    factor = exp_of(eps)
    if factor is not None and p.is_exact and q.is_exact:
        return sum((max(Fraction(0), pi - factor * qi) for pi, qi in zip(pv, qv)), Fraction(0))
    e = math.exp(float(eps))
    return float(sum(max(0.0, float(pi) - e * float(qi)) for pi, qi in zip(pv, qv)))


def hockey_stick_event(eps: Number, p: FiniteDistribution, q: FiniteDistribution) -> Tuple[Hashable, ...]:
    """Likelihood-ratio event achieving the hockey-stick value."""
    atoms, pv, qv = align(p, q)
    factor = exp_of(eps)
    if factor is None:
        e = math.exp(float(eps))
        return tuple(a for a, pi, qi in zip(atoms, pv, qv) if float(pi) > e * float(qi))
    return tuple(a for a, pi, qi in zip(atoms, pv, qv) if pi > factor * qi)


def at_most(value, bound, tolerance: Optional[float] = None) -> bool:
    """value <= bound, exactly for rationals and with tolerance for floats."""
    if isinstance(value, float) or isinstance(bound, float):
        tol = settings.comparison_tolerance if tolerance is None else tolerance
        return float(value) <= float(bound) + tol
    return compare(value, bound) <= 0


def indistinguishable(eps: Number, delta, p: FiniteDistribution, q: FiniteDistribution) -> bool:
    """(eps, delta)-indistinguishability in both directions."""
    if compare(delta, 0) < 0:
        raise StabilityLabError("delta must be nonnegative")
    return at_most(hockey_stick(eps, p, q), delta) and at_most(hockey_stick(eps, q, p), delta)


# Joint / channel helpers


def marginal(joint: FiniteDistribution, axis: int = 0) -> FiniteDistribution:
    """Marginal of a joint over tuple atoms."""
    return joint.map(lambda atom: atom[axis])


def conditionals(joint: FiniteDistribution) -> Dict[Hashable, FiniteDistribution]:
    """P(y | x) for every x with positive mass in a joint over (x, y) atoms."""
    groups: Dict[Hashable, Dict[Hashable, object]] = {}
    for (x, y), pr in joint.items():
        if pr > 0:
            groups.setdefault(x, {})
            groups[x][y] = groups[x].get(y, 0) + pr
    return {x: FiniteDistribution.from_weights(list(g.keys()), list(g.values())) for x, g in groups.items()}


def apply_channel(p: FiniteDistribution, channel: Channel) -> FiniteDistribution:
    """Output law of the stochastic map ``channel`` fed with p."""
    out: Dict[Hashable, object] = {}
    for a, pa in p.items():
        if pa == 0:
            continue
        if a not in channel:
            raise DistributionError(f"channel undefined on atom {a!r}")
        for b, pb in channel[a].items():
            out[b] = out.get(b, 0) + pa * pb
    return FiniteDistribution(tuple(out.keys()), tuple(out.values()))


def joint_from_channel(p: FiniteDistribution, channel: Channel) -> FiniteDistribution:
    atoms, probs = [], []
    for a, pa in p.items():
        if pa == 0:
            continue
        for b, pb in channel[a].items():
            atoms.append((a, b))
            probs.append(pa * pb)
    return FiniteDistribution(tuple(atoms), tuple(probs))


def conditional_kl(joint_p: FiniteDistribution, q_given_x: Channel) -> DivergenceValue:
    """sum_x P(x) KL(P(.|x) || Q(.|x)) for a joint P over (x, y) and a conditional family Q."""
    px = marginal(joint_p, 0)
    exact = joint_p.is_exact and all(d.is_exact for d in q_given_x.values())
    terms = []
    for (x, y), pxy in joint_p.items():
        if pxy == 0:
            continue
        if x not in q_given_x:
            raise DistributionError(f"conditional family undefined at x={x!r}")
        qyx = q_given_x[x].mass(y)
        if qyx == 0:
            return DivergenceValue.inf("exact" if exact else "float")
        terms.append((pxy, px.mass(x), qyx))
    if exact:
        return DivergenceValue(LogSum(Fraction(0), [(pxy / (pxv * qv), pxy) for pxy, pxv, qv in terms]))
    value = sum(float(pxy) * (_float_log(pxy) - _float_log(pxv) - _float_log(qv)) for pxy, pxv, qv in terms)
    return DivergenceValue(max(value, 0.0), mode="float")


def divergence_summary(p: FiniteDistribution, q: FiniteDistribution) -> Dict[str, float]:
    """Float snapshot of the standard measures, for reports."""
    summary = {
        "kl": float(kl(p, q)),
        "renyi_2": float(renyi(2, p, q)),
        "renyi_inf": float(renyi(math.inf, p, q)),
        "tv": float(tv(p, q)),
    }
    logger.debug(f"Divergence summary: {summary}")
    return summary
