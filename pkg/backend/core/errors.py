"""
Error hierarchy for the stability lab.

Every failure the lab surfaces derives from ``StabilityLabError``. Two classes
map to dedicated CLI exit codes: ``BudgetFailure`` (a stability check missed
its declared budget, exit 1) and ``TheoremViolationError`` (a proven
inequality failed, exit 3).
"""

from typing import Any, Optional, Sequence


class StabilityLabError(Exception):
    """Base class for every lab error."""


class ConfigError(StabilityLabError):
    """Invalid experiment configuration."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(f"{prefix}{message}")


class BudgetExceededError(StabilityLabError):
    """An enumeration would exceed its configured cap."""

    def __init__(self, budget: str, requested: int, limit: int, hint: str = ""):
        self.budget = budget
        self.requested = requested
        self.limit = limit
        message = f"{budget} budget exceeded: requested {requested}, limit {limit}"
        if hint:
            message = f"{message} ({hint})"
        super().__init__(message)


class DistributionError(StabilityLabError):
    """Malformed or incompatible distributions."""


class EmptySampleError(StabilityLabError):
    def __init__(self) -> None:
        super().__init__("empty sample")


class DomainTooLargeError(StabilityLabError):
    def __init__(self, size: int, limit: int):
        self.size = size
        self.limit = limit
        super().__init__(f"domain too large: {size} points, enumeration limit {limit}")


class PriorNeverConsistentError(StabilityLabError):
    def __init__(self) -> None:
        super().__init__("prior never consistent")


class RejectionCapExceededError(StabilityLabError):
    def __init__(self, attempts: int):
        self.attempts = attempts
        super().__init__(f"rejection sampler gave up after {attempts} attempts")


class ResampleCapExceededError(StabilityLabError):
    def __init__(self, round_index: int, observed: Sequence[float], gate: float):
        self.round_index = round_index
        self.observed = list(observed)
        self.gate = gate
        shown = ", ".join(f"{value:.4f}" for value in self.observed[:8])
        super().__init__(
            f"KL gate {gate:.4f} never passed in round {round_index} after "
            f"{len(self.observed)} resamples (observed KL: {shown}...)"
        )


class NoConsistentTargetError(StabilityLabError):
    def __init__(self) -> None:
        super().__init__("no consistent target")


class NotSeedSplittableError(StabilityLabError):
    def __init__(self, rule_name: str):
        self.rule_name = rule_name
        super().__init__(f"rule not seed-splittable: {rule_name}")


class CertificateMissingError(StabilityLabError):
    """A construction needs a certified bound that was not supplied."""


class WeakLearnerError(StabilityLabError):
    """The measured advantage of a weak learner is not positive."""


class TheoremViolationError(StabilityLabError):
    """A proven inequality failed; this indicates an implementation bug."""

    def __init__(self, statement: str, details: Any = None):
        self.statement = statement
        self.details = details
        suffix = f": {details}" if details is not None else ""
        super().__init__(f"theorem check failed: {statement}{suffix}")


class BudgetFailure(StabilityLabError):
    """A stability check failed its declared (f(m), beta(m)) budget."""
