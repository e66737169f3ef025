"""
Enumeration budget guards.
"""

from loguru import logger

from backend.core.errors import BudgetExceededError
from config.environment import env_center


def budget_limit(name: str) -> int:
    """Current cap for a named budget from the environment center."""
    return getattr(env_center.budget_config, name)


def check_budget(name: str, requested: int, hint: str = "") -> None:
    """Raise BudgetExceededError when requested exceeds the named cap."""
    limit = budget_limit(name)
    if requested > limit:
        logger.debug(f"Budget {name} refused: {requested} > {limit}")
        raise BudgetExceededError(name, requested, limit, hint)


def within_budget(name: str, requested: int) -> bool:
    return requested <= budget_limit(name)
