"""
Rule registry: build a LearningRule from a spec string such as ``rejection:uniform``,
``weak:k=8``, ``rr:eps=1.0`` or ``boosted:k=4,gamma=1/4,b=1``.
"""

from fractions import Fraction
from typing import Callable, Dict, Optional, Tuple

from loguru import logger

from backend.components.boosting.booster import BoostConfig
from backend.components.boosting.learner import BoostedLearner
from backend.components.learners.base import LearningRule, WeakParams
from backend.components.learners.baselines import CONSTANT_KINDS, ConstantRule, ERMRule, MemorizeRule, RandomizedResponse
from backend.components.learners.game_prior import game_mixture_prior
from backend.components.learners.rejection import RejectionSampler, finite_class_weak_learner, uniform_prior
from backend.components.learners.weak import certify_weak_learner
from backend.components.primitives.domain import HypothesisClass
from backend.core.errors import ConfigError

RULE_NAMES = ("rejection", "weak", "erm", "memorize", "constant", "rr", "boosted")


def parse_rule_spec(spec: str) -> Tuple[str, Optional[str], Dict[str, str]]:
    """'name[:variant][:k=v,...]' -> (name, variant, options)."""
    parts = spec.strip().split(":")
    name = parts[0].strip().lower()
    if name not in RULE_NAMES:
        raise ConfigError(f"unknown rule {name!r}; choose from {', '.join(RULE_NAMES)}")
    variant: Optional[str] = None
    options: Dict[str, str] = {}
    for part in parts[1:]:
        part = part.strip()
        if not part:
            continue
        if "=" in part:
            for item in part.split(","):
                key, _, value = item.partition("=")
                if not key.strip() or not value.strip():
                    raise ConfigError(f"malformed rule option {item!r} in {spec!r}")
                options[key.strip().lower()] = value.strip()
        elif variant is None:
            variant = part.lower()
        else:
            raise ConfigError(f"rule spec {spec!r} has more than one variant")
    return name, variant, options


def _int_option(options: Dict[str, str], key: str, default: Optional[int] = None) -> int:
    if key not in options:
        if default is None:
            raise ConfigError(f"rule option {key!r} is required")
        return default
    try:
        return int(options[key])
    except ValueError as e:
        raise ConfigError(f"rule option {key}={options[key]!r} is not an integer") from e


def _fraction_option(options: Dict[str, str], key: str) -> Optional[Fraction]:
    if key not in options:
        return None
    try:
        return Fraction(options[key])
    except (ValueError, ZeroDivisionError) as e:
        raise ConfigError(f"rule option {key}={options[key]!r} is not a number") from e


def _rejection(
    hclass: HypothesisClass, variant: Optional[str], options: Dict[str, str], truncation: Optional[int] = None, **_
) -> LearningRule:
    variant = variant or "uniform"
    if variant == "uniform":
        return RejectionSampler(uniform_prior(hclass.domain), hclass.domain, name="rejection:uniform")
    if variant == "class":
        return RejectionSampler(uniform_prior(hclass), hclass, name="rejection:class")
    if variant == "game":
        L = _int_option(options, "l", truncation or 3)
        return game_mixture_prior(hclass, L, options.get("method", "exact")).rejection_sampler()
    raise ConfigError(f"unknown rejection prior {variant!r}; choose uniform, class or game")


def _weak(hclass: HypothesisClass, variant, options: Dict[str, str], trials: Optional[int] = None, seed: int = 0, **_):
    rule = finite_class_weak_learner(hclass, k=_int_option(options, "k"))
    gamma, b = _fraction_option(options, "gamma"), _fraction_option(options, "b")
    if gamma is not None and b is not None:
        rule.certify(WeakParams(rule.k, gamma, b))
    else:
        certify_weak_learner(rule, trials=trials, seed=seed)
    return rule


def _boosted(hclass: HypothesisClass, variant, options: Dict[str, str], trials: Optional[int] = None, seed: int = 0, **_):
    weak = _weak(hclass, None, options, trials=trials, seed=seed)
    rounds = _int_option(options, "rounds", 0) or None
    config = BoostConfig.from_params(weak.weak_params, rounds_override=rounds)
    return BoostedLearner(weak, config)


def _constant(hclass: HypothesisClass, variant: Optional[str], options, **_) -> LearningRule:
    kind = variant or "zeros"
    if kind not in CONSTANT_KINDS:
        raise ConfigError(f"constant rule kind must be one of {CONSTANT_KINDS}")
    return ConstantRule(hclass.domain, kind)


def _rr(hclass: HypothesisClass, variant, options: Dict[str, str], **_) -> LearningRule:
    if "ratio" in options:
        return RandomizedResponse(hclass.domain, ratio=_fraction_option(options, "ratio"))
    if "eps" in options:
        return RandomizedResponse(hclass.domain, eps=float(_fraction_option(options, "eps")))
    raise ConfigError("rr needs eps=E or ratio=R")


BUILDERS: Dict[str, Callable[..., LearningRule]] = {
    "rejection": _rejection,
    "weak": _weak,
    "boosted": _boosted,
    "erm": lambda hclass, variant, options, **_: ERMRule(hclass),
    "memorize": lambda hclass, variant, options, **_: MemorizeRule(hclass.domain),
    "constant": _constant,
    "rr": _rr,
}


def build_rule(
    spec: str, hclass: HypothesisClass, trials: Optional[int] = None, seed: int = 0, truncation: Optional[int] = None
) -> LearningRule:
    """
    Build a rule for a class from its registry spec.

    Args:
        spec: registry spec string
        hclass: class fixing the domain (and the universe of class-based rules)
        trials: Monte Carlo trials for weak-learner certification
        seed: seed for certification
        truncation: default L of the game prior when the spec names none

    Returns:
        LearningRule
    """
    name, variant, options = parse_rule_spec(spec)
    rule = BUILDERS[name](hclass, variant, options, trials=trials, seed=seed, truncation=truncation)
    logger.info(f"Built rule {spec!r} -> {rule.name}")
    return rule
