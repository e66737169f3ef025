"""
Exact reals for divergence comparisons.

``LogSum`` is a rational constant plus a formal sum of rational multiples of
natural logs of positive rationals. It is rewritten over a pairwise-coprime
integer base; logs of pairwise-coprime integers > 1 are linearly independent
over Q, so the rewritten form is zero exactly when the value is zero. The sign
of a nonzero value is found by interval evaluation in ``decimal`` at growing
precision.

``Approx`` wraps quantities derived from exact ones (products, square roots)
by an interval function; comparisons on it refine precision along the
configured ladder.
"""

import math
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

from loguru import logger

from backend.core.errors import StabilityLabError
from backend.core.settings import settings

Interval = Tuple[Decimal, Decimal]
MAX_PRECISION = 20_000


def _coprime_insert(base: List[int], value: int) -> None:
    """Refine a pairwise-coprime base so that value factors over it."""
    pending = [value]
    while pending:
        y = pending.pop()
        if y == 1:
            continue
        for i, b in enumerate(base):
            g = math.gcd(y, b)
            if g > 1:
                del base[i]
                pending.extend((g, b // g, y // g))
                break
        else:
            base.append(y)


def coprime_base(values: Iterable[int]) -> List[int]:
    base: List[int] = []
    for v in sorted(set(values)):
        if v > 1:
            _coprime_insert(base, v)
    return sorted(base)


def _exponents(value: int, base: List[int]) -> Dict[int, int]:
    out: Dict[int, int] = {}
    for b in base:
        if value == 1:
            break
        e = 0
        while value % b == 0:
            value //= b
            e += 1
        if e:
            out[b] = e
    if value != 1:
        raise StabilityLabError(f"coprime base does not factor {value}")
    return out


def _widen(lo: Decimal, hi: Decimal, prec: int) -> Interval:
    slack = (abs(lo) + abs(hi) + 1) * Decimal(10) ** (3 - prec)
    return lo - slack, hi + slack


def _precisions() -> Iterable[int]:
    steps = list(settings.precision_steps) or [40]
    for p in steps:
        yield p
    p = steps[-1]
    while p < MAX_PRECISION:
        p *= 2
        yield p


class Real:
    """A real number that can be enclosed in arbitrarily tight decimal intervals."""

    def interval(self, prec: int) -> Interval:
        raise NotImplementedError

    def __float__(self) -> float:
        raise NotImplementedError


class LogSum(Real):
    __slots__ = ("const", "terms", "_canonical")

    def __init__(self, const=Fraction(0), terms: Iterable[Tuple[object, object]] = ()):
        merged: Dict[Fraction, Fraction] = {}
        for arg, coeff in terms:
            arg = Fraction(arg)
            coeff = Fraction(coeff)
            if arg <= 0:
                raise StabilityLabError(f"log of non-positive value {arg}")
            if coeff == 0 or arg == 1:
                continue
            merged[arg] = merged.get(arg, Fraction(0)) + coeff
        self.const = Fraction(const)
        self.terms: Tuple[Tuple[Fraction, Fraction], ...] = tuple(
            sorted((a, c) for a, c in merged.items() if c != 0)
        )
        self._canonical: Optional[Tuple[Tuple[int, Fraction], ...]] = None

    @classmethod
    def log(cls, value, coeff=1) -> "LogSum":
        return cls(Fraction(0), [(value, coeff)])

    @classmethod
    def constant(cls, value) -> "LogSum":
        return cls(Fraction(value))

    @classmethod
    def zero(cls) -> "LogSum":
        return cls()

    # Algebra

    def __add__(self, other):
        other = _coerce(other)
        if not isinstance(other, LogSum):
            return NotImplemented
        return LogSum(self.const + other.const, self.terms + other.terms)

    __radd__ = __add__

    def __neg__(self):
        return LogSum(-self.const, [(a, -c) for a, c in self.terms])

    def __sub__(self, other):
        other = _coerce(other)
        if not isinstance(other, LogSum):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, factor):
        if isinstance(factor, (int, Fraction)):
            factor = Fraction(factor)
            return LogSum(self.const * factor, [(a, c * factor) for a, c in self.terms])
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, divisor):
        if isinstance(divisor, (int, Fraction)):
            return self * (1 / Fraction(divisor))
        return NotImplemented

    # Canonical form

    def canonical(self) -> Tuple[Tuple[int, Fraction], ...]:
        """Exponents over a pairwise-coprime base: value = const + sum e_b ln b."""
        if self._canonical is None:
            base = coprime_base(
                v for a, _ in self.terms for v in (a.numerator, a.denominator)
            )
            acc: Dict[int, Fraction] = {}
            for a, c in self.terms:
                for b, e in _exponents(a.numerator, base).items():
                    acc[b] = acc.get(b, Fraction(0)) + c * e
                for b, e in _exponents(a.denominator, base).items():
                    acc[b] = acc.get(b, Fraction(0)) - c * e
            self._canonical = tuple(sorted((b, e) for b, e in acc.items() if e != 0))
        return self._canonical

    def is_zero(self) -> bool:
        return self.const == 0 and (not self.terms or not self.canonical())

    def is_rational(self) -> bool:
        return not self.terms or not self.canonical()

    def exp_rational(self) -> Optional[Fraction]:
        """exp(value) when it is rational (const 0 and integer exponents), else None."""
        if self.const != 0:
            return None
        value = Fraction(1)
        for b, e in self.canonical():
            if e.denominator != 1:
                return None
            value *= Fraction(b) ** int(e)
        return value

    # Evaluation

    def __float__(self) -> float:
        total = float(self.const)
        for a, c in self.terms:
            total += float(c) * (math.log(a.numerator) - math.log(a.denominator))
        return total

    def magnitude(self) -> float:
        return abs(float(self.const)) + sum(
            abs(float(c) * (math.log(a.numerator) - math.log(a.denominator))) for a, c in self.terms
        )

    def interval(self, prec: int) -> Interval:
        canon = self.canonical()
        with localcontext() as ctx:
            ctx.prec = prec
            total = Decimal(self.const.numerator) / Decimal(self.const.denominator)
            mag = abs(total)
            for b, e in canon:
                term = Decimal(b).ln() * Decimal(e.numerator) / Decimal(e.denominator)
                total += term
                mag += abs(term)
            radius = (mag + 1) * (len(canon) + 3) * Decimal(10) ** (3 - prec)
            return total - radius, total + radius

    def sign(self) -> int:
        if self.is_zero():
            return 0
        approx = float(self)
        if abs(approx) > 1e-9 * (self.magnitude() + 1):
            return 1 if approx > 0 else -1
        for prec in _precisions():
            lo, hi = self.interval(prec)
            if lo > 0:
                return 1
            if hi < 0:
                return -1
        raise StabilityLabError("sign of a nonzero log-sum undecided at maximum precision")

    # Comparisons

    def __eq__(self, other):
        if isinstance(other, (LogSum, int, Fraction)):
            return compare(self, other) == 0
        return NotImplemented

    def __hash__(self):
        return hash((self.const, self.canonical()))

    def __lt__(self, other):
        return compare(self, other) < 0

    def __le__(self, other):
        return compare(self, other) <= 0

    def __gt__(self, other):
        return compare(self, other) > 0

    def __ge__(self, other):
        return compare(self, other) >= 0

    def __repr__(self) -> str:
        parts = [str(self.const)] if self.const else []
        parts += [f"{c}*ln({a})" for a, c in self.terms]
        return "LogSum(" + (" + ".join(parts) or "0") + ")"


class Approx(Real):
    """Derived real given by an interval function and a float estimate."""

    def __init__(self, interval_fn: Callable[[int], Interval], estimate: float, exact_zero: bool = False):
        self._interval_fn = interval_fn
        self._estimate = estimate
        self.exact_zero = exact_zero

    def interval(self, prec: int) -> Interval:
        return self._interval_fn(prec)

    def __float__(self) -> float:
        return self._estimate

    def __lt__(self, other):
        return compare(self, other) < 0

    def __le__(self, other):
        return compare(self, other) <= 0

    def __gt__(self, other):
        return compare(self, other) > 0

    def __ge__(self, other):
        return compare(self, other) >= 0


Number = Union[int, Fraction, float, Real]


def _coerce(value):
    if isinstance(value, (int, Fraction)) and not isinstance(value, bool):
        return LogSum.constant(value)
    return value


def _interval_of(value, prec: int) -> Interval:
    value = _coerce(value)
    if isinstance(value, Real):
        return value.interval(prec)
    with localcontext() as ctx:
        ctx.prec = prec
        d = Decimal(float(value))
        return _widen(d, d, prec)


def real_mul(a: Number, b: Number) -> Approx:
    def fn(prec: int) -> Interval:
        alo, ahi = _interval_of(a, prec)
        blo, bhi = _interval_of(b, prec)
        with localcontext() as ctx:
            ctx.prec = prec
            products = [alo * blo, alo * bhi, ahi * blo, ahi * bhi]
            return _widen(min(products), max(products), prec)

    zero = _is_exact_zero(a) or _is_exact_zero(b)
    return Approx(fn, float(a) * float(b), exact_zero=zero)


def real_sqrt(a: Number) -> Approx:
    def fn(prec: int) -> Interval:
        lo, hi = _interval_of(a, prec)
        with localcontext() as ctx:
            ctx.prec = prec
            lo = max(lo, Decimal(0))
            hi = max(hi, Decimal(0))
            return _widen(lo.sqrt(), hi.sqrt(), prec)

    return Approx(fn, math.sqrt(max(float(a), 0.0)), exact_zero=_is_exact_zero(a))


def _decimal_log(x: Fraction) -> Decimal:
    return Decimal(x.numerator).ln() - Decimal(x.denominator).ln()


def real_renyi(alpha: Fraction, pairs: Sequence[Tuple[Fraction, Fraction]], estimate: float) -> Approx:
    """
    ln(sum p^alpha q^(1 - alpha)) / (alpha - 1) for rational alpha != 1 and exact pairs.

    Terms are evaluated in ``decimal`` with guard digits; the enclosure radius
    covers the rounding of every exp/ln and of alpha itself.
    """
    alpha = Fraction(alpha)
    if alpha == 1:
        raise StabilityLabError("real_renyi needs alpha != 1")

    def fn(prec: int) -> Interval:
        with localcontext() as ctx:
            ctx.prec = prec + 10
            a = Decimal(alpha.numerator) / Decimal(alpha.denominator)
            total, mag = Decimal(0), Decimal(1)
            for p, q in pairs:
                exponent = a * _decimal_log(Fraction(p)) + (1 - a) * _decimal_log(Fraction(q))
                total += exponent.exp()
                mag += abs(exponent)
            value = total.ln() / (a - 1)
            radius = (mag + abs(value) + 1) * (len(pairs) + 3) * Decimal(10) ** (3 - prec) / abs(a - 1)
            return value - radius, value + radius

    return Approx(fn, estimate)


def _is_exact_zero(value) -> bool:
    value = _coerce(value)
    if isinstance(value, LogSum):
        return value.is_zero()
    if isinstance(value, Approx):
        return value.exact_zero
    return False


def compare(a: Number, b: Number) -> int:
    """
    Sign of a - b.

    Exact when both sides are log-sums or rationals; float operands compare with
    ``settings.comparison_tolerance``; derived reals refine intervals along the
    precision ladder and report equality when no precision separates them.
    """
    a, b = _coerce(a), _coerce(b)
    if isinstance(a, LogSum) and isinstance(b, LogSum):
        return (a - b).sign()
    if isinstance(a, float) or isinstance(b, float):
        fa, fb = float(a), float(b)
        if math.isinf(fa) or math.isinf(fb):
            return (fa > fb) - (fa < fb)
        if abs(fa - fb) <= settings.comparison_tolerance * max(1.0, abs(fa), abs(fb)):
            return 0
        return 1 if fa > fb else -1
    if _is_exact_zero(a) and _is_exact_zero(b):
        return 0
    fa, fb = float(a), float(b)
    if abs(fa - fb) > 1e-6 * (abs(fa) + abs(fb) + 1):
        return 1 if fa > fb else -1
    for prec in _precisions():
        alo, ahi = _interval_of(a, prec)
        blo, bhi = _interval_of(b, prec)
        if alo > bhi:
            return 1
        if ahi < blo:
            return -1
        if prec >= 4 * max(settings.precision_steps or (40,)):
            break
    logger.debug("Interval comparison undecided; treating operands as equal")
    return 0


def as_float(value: Number) -> float:
    return float(value)


def log_of(value) -> LogSum:
    """ln(value) as an exact log-sum."""
    return LogSum.log(Fraction(value))
