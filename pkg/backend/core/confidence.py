"""
Monte Carlo confidence radii.
"""

import math
from typing import Optional, Tuple

from scipy.stats import norm

from backend.core.settings import settings


def z_value(level: Optional[float] = None) -> float:
    """Two-sided normal quantile for the confidence level."""
    level = settings.confidence_level if level is None else level
    return float(norm.ppf(0.5 + level / 2))


def wilson_interval(successes: int, trials: int, level: Optional[float] = None) -> Tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        return 0.0, 1.0
    z = z_value(level)
    p = successes / trials
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def hoeffding_radius(trials: int, value_range: float = 1.0, level: Optional[float] = None) -> float:
    """Two-sided Hoeffding radius for the mean of bounded values."""
    if trials <= 0:
        return math.inf
    level = settings.confidence_level if level is None else level
    return value_range * math.sqrt(math.log(2 / (1 - level)) / (2 * trials))


def interval_verdict(low: float, high: float, threshold: float) -> Optional[bool]:
    """True when the whole interval lies at or below threshold, False when it lies above, else None."""
    if high <= threshold:
        return True
    if low > threshold:
        return False
    return None
