"""
Test configuration and fixtures.
"""

import tempfile
from fractions import Fraction
from pathlib import Path

import pytest

from backend.components.distributions.finite import FiniteDistribution
from backend.components.primitives.domain import (
    Domain,
    Hypothesis,
    HypothesisClass,
    LabeledSample,
    PopulationDistribution,
)
from backend.core.logging import configure_logging


@pytest.fixture(scope="session", autouse=True)
def quiet_logging():
    """Keep test output to warnings and above."""
    configure_logging("WARNING")


@pytest.fixture
def temp_dir():
    """Create a temporary directory for tests."""
    with tempfile.TemporaryDirectory() as temp_dir:
        yield Path(temp_dir)


@pytest.fixture
def thresholds4():
    """Thresholds on four points: a chain of four hypotheses."""
    return HypothesisClass.thresholds(4)


@pytest.fixture
def thresholds2():
    """Thresholds on two points: members 01 and 00."""
    return HypothesisClass.thresholds(2)


@pytest.fixture
def full2():
    """Every function on two points."""
    return HypothesisClass.full(2)


@pytest.fixture
def zeros_ones():
    """Uniform prior over the two constant functions on two points."""
    zeros, ones = Hypothesis.constant(2, 0), Hypothesis.constant(2, 1)
    return FiniteDistribution.uniform((zeros, ones))


@pytest.fixture
def coin_population():
    """One point labeled by a fair coin."""
    domain = Domain(1)
    return PopulationDistribution.from_mapping(domain, {(0, 0): Fraction(1, 2), (0, 1): Fraction(1, 2)})


@pytest.fixture
def realizable_pop():
    """Uniform marginal over both points labeled by the threshold 01."""
    return PopulationDistribution.realizable_uniform(Hypothesis.from_string("01"))


@pytest.fixture
def two_point_sample():
    """Realizable sample ((0, 0), (1, 1)) on two points."""
    return LabeledSample(Domain(2), ((0, 0), (1, 1)))
