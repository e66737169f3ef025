"""
Stability budgets and reports.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, Optional, Union

from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from backend.components.divergences.exact import LogSum, Number, log_of
from backend.components.divergences.measures import DivergenceValue
from backend.core.errors import ConfigError

DEFINITIONS = ("dp", "rep", "gs", "mi", "tv", "pg", "maxinfo", "pacbayes", "renyi", "kl", "witness")

Scalar = Union[float, int, str]


def parse_number(value: Scalar) -> Number:
    """
    Read a budget parameter.

    ``"ln:2"`` / ``"ln(2)"`` give the exact log ln 2, ``"1/4"`` and ints give
    Fractions, floats stay floats.
    """
    if isinstance(value, bool):
        raise ConfigError(f"not a number: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return value
    text = str(value).strip().lower()
    for prefix in ("ln:", "ln(", "log:", "log("):
        if text.startswith(prefix):
            inner = text[len(prefix):].rstrip(")")
            try:
                return log_of(Fraction(inner))
            except (ValueError, ZeroDivisionError) as e:
                raise ConfigError(f"cannot read log argument in {value!r}") from e
    if text in ("inf", "infinity"):
        return math.inf
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        pass
    try:
        return float(text)
    except ValueError as e:
        raise ConfigError(f"not a number: {value!r}") from e


def render(value: Any) -> Any:
    """JSON-friendly rendering of lab numbers."""
    if value is None or isinstance(value, (bool, str)):
        return value
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}" if value.denominator != 1 else str(value.numerator)
    if isinstance(value, int):
        return value
    if isinstance(value, (LogSum, DivergenceValue)):
        return float(value)
    if isinstance(value, float):
        return value if math.isfinite(value) else str(value)
    if isinstance(value, (list, tuple)):
        return [render(v) for v in value]
    if isinstance(value, dict):
        return {str(k): render(v) for k, v in value.items()}
    try:
        return float(value)
    except (TypeError, ValueError):
        return str(value)


class StabilityBudget(BaseModel):
    """
    Declared stability parameters for one definition.

    ``f`` is the divergence (or information) bound and ``beta`` the confidence;
    ``f_by_m`` / ``beta_by_m`` override them per sample size.
    """
    model_config = ConfigDict(extra="forbid", frozen=True)

    definition: str
    eps: Optional[Scalar] = None
    delta: Optional[Scalar] = None
    rho: Optional[Scalar] = None
    eta: Optional[Scalar] = None
    nu: Optional[Scalar] = None
    alpha: Optional[Scalar] = None
    f: Optional[Scalar] = None
    beta: Optional[Scalar] = None
    f_by_m: Dict[int, Scalar] = {}
    beta_by_m: Dict[int, Scalar] = {}

    @field_validator("definition")
    @classmethod
    def _known_definition(cls, value: str) -> str:
        value = value.strip().lower()
        if value not in DEFINITIONS:
            raise ValueError(f"unknown definition {value!r}; choose from {', '.join(DEFINITIONS)}")
        return value

    @model_validator(mode="after")
    def _ranges(self) -> "StabilityBudget":
        for name in ("eps", "delta", "f", "beta"):
            raw = getattr(self, name)
            if raw is not None and float(parse_number(raw)) < 0:
                raise ValueError(f"{name} must be nonnegative")
        for name in ("rho", "eta", "nu", "delta", "beta"):
            raw = getattr(self, name)
            if raw is not None and not 0 <= float(parse_number(raw)) <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.alpha is not None and float(parse_number(self.alpha)) <= 0:
            raise ValueError("alpha must be positive")
        return self

    def value(self, name: str, default: Optional[Number] = None) -> Optional[Number]:
        raw = getattr(self, name)
        return default if raw is None else parse_number(raw)

    def f_at(self, m: int) -> Optional[Number]:
        if m in self.f_by_m:
            return parse_number(self.f_by_m[m])
        return self.value("f")

    def beta_at(self, m: int) -> Number:
        if m in self.beta_by_m:
            return parse_number(self.beta_by_m[m])
        if self.beta is None and self.definition == "pacbayes":
            return Fraction(1, m)
        return self.value("beta", Fraction(0))

    def to_dict(self) -> Dict[str, Any]:
        return {k: v for k, v in self.model_dump().items() if v not in (None, {})}


DEFAULT_BUDGETS: Dict[str, StabilityBudget] = {
    "dp": StabilityBudget(definition="dp", eps=1.0, delta=0),
    "rep": StabilityBudget(definition="rep", rho="1/2"),
    "gs": StabilityBudget(definition="gs", eta="1/2"),
    "mi": StabilityBudget(definition="mi"),
    "tv": StabilityBudget(definition="tv", f="1/2"),
    "pg": StabilityBudget(definition="pg", eps=1.0, delta=0, beta=0),
    "maxinfo": StabilityBudget(definition="maxinfo", eps=1.0, delta="1/10"),
    "pacbayes": StabilityBudget(definition="pacbayes"),
    "renyi": StabilityBudget(definition="renyi", alpha=2, f=1.0, beta=0),
    "kl": StabilityBudget(definition="kl", f=1.0, beta=0),
    "witness": StabilityBudget(definition="witness"),
}


@dataclass
class StabilityReport:
    """
    Outcome of one stability check.

    ``exact`` reports carry radius 0; Monte Carlo reports carry the trial count
    and a confidence radius; adversarial search reports are lower bounds with
    no radius.
    """
    definition: str
    rule: str
    m: int
    estimate: Any
    exact: bool
    radius: Optional[float] = 0.0
    passed: Optional[bool] = None
    budget: Optional[StabilityBudget] = None
    witness: Dict[str, Any] = field(default_factory=dict)
    details: Dict[str, Any] = field(default_factory=dict)
    trials: Optional[int] = None
    mode: str = "exact"

    def __post_init__(self):
        if self.exact:
            self.radius = 0.0

    @property
    def failed(self) -> bool:
        return self.passed is False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "definition": self.definition,
            "rule": self.rule,
            "m": self.m,
            "estimate": render(self.estimate),
            "exact": self.exact,
            "mode": self.mode,
            "radius": render(self.radius),
            "trials": self.trials,
            "passed": self.passed,
            "budget": self.budget.to_dict() if self.budget else None,
            "witness": render(self.witness),
            "details": render(self.details),
        }

    def to_record(self) -> Dict[str, Any]:
        """Flat row for the audit CSV."""
        return {
            "definition": self.definition,
            "rule": self.rule,
            "m": self.m,
            "estimate": render(self.estimate),
            "exact": self.exact,
            "radius": render(self.radius),
            "trials": self.trials,
            "passed": self.passed,
        }
