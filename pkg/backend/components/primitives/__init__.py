"""
Domain, hypothesis, sample and loss primitives.
"""

from backend.components.primitives.domain import (
    Domain,
    Hypothesis,
    HypothesisClass,
    LabeledSample,
    PopulationDistribution,
    all_functions,
    parse_class_spec,
)
from backend.components.primitives.losses import (
    ConsistentSet,
    RealizabilityResult,
    consistent_set,
    empirical_loss,
    is_consistent,
    is_realizable,
    population_loss,
)

__all__ = [
    "Domain",
    "Hypothesis",
    "HypothesisClass",
    "LabeledSample",
    "PopulationDistribution",
    "all_functions",
    "parse_class_spec",
    "ConsistentSet",
    "RealizabilityResult",
    "consistent_set",
    "empirical_loss",
    "is_consistent",
    "is_realizable",
    "population_loss",
]
