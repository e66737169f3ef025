"""
Tests for exact log-sums and the divergence measures.
"""

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings as hypothesis_settings
from hypothesis import strategies as st

from backend.components.distributions.finite import FiniteDistribution
from backend.components.divergences.exact import LogSum, compare, log_of, real_mul, real_sqrt
from backend.components.divergences.measures import (
    DivergenceValue,
    apply_channel,
    at_most,
    conditional_kl,
    conditionals,
    divergence_summary,
    exp_of,
    hockey_stick,
    hockey_stick_event,
    indistinguishable,
    joint_from_channel,
    kl,
    marginal,
    renyi,
    tv,
)
from backend.core.errors import DistributionError, StabilityLabError


@st.composite
def distribution_pairs(draw, max_atoms: int = 5):
    """
    Generate an exact pair (p, q) over a shared atom list.

    q has full support so every divergence from p is finite; p may put zero
    mass on some atoms.
    """
    n = draw(st.integers(min_value=1, max_value=max_atoms))
    q_weights = draw(st.lists(st.integers(min_value=1, max_value=9), min_size=n, max_size=n))
    p_weights = draw(st.lists(st.integers(min_value=0, max_value=9), min_size=n, max_size=n))
    if sum(p_weights) == 0:
        p_weights[0] = 1
    atoms = tuple(range(n))
    return FiniteDistribution.from_weights(atoms, p_weights), FiniteDistribution.from_weights(atoms, q_weights)


@pytest.mark.unit
class TestLogSum:

    def test_log_identities(self):
        assert log_of(4) == log_of(2) * 2
        assert (log_of(6) - log_of(2) - log_of(3)).is_zero()
        assert log_of(Fraction(1, 3)) < 0

    def test_rational_exponent(self):
        assert log_of(8).exp_rational() == 8
        assert (log_of(2) * Fraction(1, 2)).exp_rational() is None
        assert LogSum.constant(1).exp_rational() is None

    def test_compare_against_rationals(self):
        assert compare(log_of(2), Fraction(7, 10)) == -1
        assert compare(log_of(2), Fraction(69, 100)) == 1
        assert compare(LogSum.zero(), 0) == 0

    def test_log_of_nonpositive(self):
        with pytest.raises(StabilityLabError):
            log_of(0)

    def test_derived_reals(self):
        assert compare(real_sqrt(log_of(2)), Fraction(83, 100)) == 1
        assert compare(real_mul(log_of(2), 2), log_of(4)) == 0


@pytest.mark.unit
class TestMeasures:

    def setup_method(self):
        self.coin = FiniteDistribution.uniform(("a", "b"))
        self.heads = FiniteDistribution.point_mass("a", ("a", "b"))
        self.biased = FiniteDistribution.from_weights(("a", "b"), (2, 1))
        self.flipped = FiniteDistribution.from_weights(("a", "b"), (1, 2))

    def test_kl_of_point_mass(self):
        value = kl(self.heads, self.coin)
        assert value.is_exact
        assert value.equals(log_of(2))
        assert value.in_bits() == pytest.approx(1.0)

    def test_kl_infinite_without_absolute_continuity(self):
        assert kl(self.coin, self.heads).infinite
        assert renyi(math.inf, self.coin, self.heads).infinite

    def test_float_inputs_give_float_values(self):
        value = kl(self.heads, self.coin.to_float())
        assert value.mode == "float"
        assert float(value) == pytest.approx(math.log(2))

    def test_renyi_orders(self):
        assert renyi(1, self.biased, self.coin).equals(kl(self.biased, self.coin))
        assert renyi(math.inf, self.biased, self.coin).equals(log_of(Fraction(4, 3)))
        # R_2 = ln sum p^2 / q = ln(2 * (4/9 + 1/9)) = ln(10/9)
        assert renyi(2, self.biased, self.coin).equals(log_of(Fraction(10, 9)))

    def test_renyi_order_checks(self):
        with pytest.raises(StabilityLabError):
            renyi(0, self.biased, self.coin)
        low = renyi(0.5, self.biased, self.coin)
        assert "alpha-below-1" in low.flags
        assert low.mode == "interval"
        assert renyi(0.5, self.biased.to_float(), self.coin).mode == "float"

    @pytest.mark.parametrize("alpha", [Fraction(1, 2), Fraction(3, 2), 2.5])
    def test_fractional_orders_are_interval_enclosed(self, alpha):
        # a point mass sits at -ln q(a) for every order
        value = renyi(alpha, self.heads, self.coin)
        assert value.mode == "interval"
        assert value.equals(log_of(2))
        assert value < log_of(2) + LogSum.constant(Fraction(1, 10 ** 30))
        assert value > log_of(2) - LogSum.constant(Fraction(1, 10 ** 30))

    def test_fractional_order_lies_between_integer_orders(self):
        assert kl(self.biased, self.coin) < renyi(Fraction(3, 2), self.biased, self.coin)
        assert renyi(Fraction(3, 2), self.biased, self.coin) < renyi(2, self.biased, self.coin)
        assert renyi(Fraction(1, 2), self.biased, self.biased).equals(0)

    def test_tv(self):
        assert tv(self.coin, self.heads) == Fraction(1, 2)
        assert tv(self.biased, self.flipped) == Fraction(1, 3)

    def test_hockey_stick(self):
        assert hockey_stick(0, self.biased, self.flipped) == Fraction(1, 3)
        assert hockey_stick(log_of(2), self.biased, self.flipped) == 0
        assert isinstance(hockey_stick(0.5, self.biased, self.flipped), float)
        with pytest.raises(StabilityLabError):
            hockey_stick(-1, self.biased, self.flipped)

    def test_hockey_stick_event(self):
        assert hockey_stick_event(0, self.biased, self.flipped) == ("a",)
        assert hockey_stick_event(log_of(2), self.biased, self.flipped) == ()

    def test_exp_of(self):
        assert exp_of(0) == 1
        assert exp_of(log_of(3)) == 3
        assert exp_of(0.5) is None

    def test_indistinguishable(self):
        assert indistinguishable(log_of(2), 0, self.biased, self.flipped)
        assert not indistinguishable(0, 0, self.biased, self.flipped)
        assert indistinguishable(0, Fraction(1, 3), self.biased, self.flipped)
        with pytest.raises(StabilityLabError):
            indistinguishable(0, -1, self.biased, self.flipped)

    def test_at_most_tolerates_float_noise(self):
        assert at_most(0.1 + 0.2, 0.3)
        assert not at_most(Fraction(1, 3), Fraction(1, 4))

    def test_divergence_value_arithmetic(self):
        ln2 = DivergenceValue(log_of(2))
        assert (ln2 + ln2).equals(log_of(4))
        assert ln2.scaled(Fraction(1, 2)).equals(log_of(2) / 2)
        assert DivergenceValue.inf() > ln2
        assert DivergenceValue.inf() >= math.inf
        assert ln2 < math.inf
        assert (ln2 + DivergenceValue.inf()).infinite
        assert DivergenceValue.zero().equals(0)
        assert str(DivergenceValue.inf()) == "inf"

    def test_channels(self):
        channel = {0: self.coin, 1: self.heads}
        source = FiniteDistribution.uniform((0, 1))
        assert apply_channel(source, channel).as_dict() == {"a": Fraction(3, 4), "b": Fraction(1, 4)}
        joint = joint_from_channel(source, channel)
        assert marginal(joint, 0) == source
        assert conditionals(joint)[0] == self.coin
        assert conditional_kl(joint, channel).equals(0)
        assert conditional_kl(joint, {0: self.heads, 1: self.heads}).infinite
        with pytest.raises(DistributionError):
            conditional_kl(joint, {0: self.coin})
        with pytest.raises(DistributionError):
            apply_channel(source, {0: self.coin})

    def test_summary(self):
        summary = divergence_summary(self.biased, self.coin)
        assert set(summary) == {"kl", "renyi_2", "renyi_inf", "tv"}
        assert summary["tv"] == pytest.approx(1 / 6)


@pytest.mark.property
class TestDivergenceProperties:

    @given(distribution_pairs())
    @hypothesis_settings(max_examples=60, deadline=None)
    def test_kl_nonnegative(self, pair):
        """Property: KL(p || q) >= 0."""
        p, q = pair
        assert kl(p, q) >= 0

    @given(distribution_pairs())
    @hypothesis_settings(max_examples=60, deadline=None)
    def test_kl_of_self_is_zero(self, pair):
        """Property: KL(p || p) = 0 exactly."""
        p, _ = pair
        assert kl(p, p).equals(0)

    @given(distribution_pairs())
    @hypothesis_settings(max_examples=40, deadline=None)
    def test_renyi_monotone_in_order(self, pair):
        """Property: KL <= R_2 <= R_3 <= R_inf."""
        p, q = pair
        chain = [kl(p, q), renyi(2, p, q), renyi(3, p, q), renyi(math.inf, p, q)]
        for low, high in zip(chain, chain[1:]):
            assert low <= high

    @given(distribution_pairs())
    @hypothesis_settings(max_examples=60, deadline=None)
    def test_tv_symmetric_and_bounded(self, pair):
        """Property: TV is symmetric and lies in [0, 1]."""
        p, q = pair
        assert tv(p, q) == tv(q, p)
        assert 0 <= tv(p, q) <= 1

    @given(distribution_pairs())
    @hypothesis_settings(max_examples=60, deadline=None)
    def test_hockey_stick_at_zero_is_tv(self, pair):
        """Property: the hockey-stick divergence at eps = 0 equals TV."""
        p, q = pair
        assert hockey_stick(0, p, q) == tv(p, q)

    @given(distribution_pairs(), st.integers(min_value=2, max_value=5))
    @hypothesis_settings(max_examples=60, deadline=None)
    def test_hockey_stick_decreasing_in_eps(self, pair, r):
        """Property: larger eps never increases the hockey-stick divergence."""
        p, q = pair
        assert hockey_stick(log_of(r), p, q) <= hockey_stick(0, p, q)
        assert hockey_stick(log_of(r + 1), p, q) <= hockey_stick(log_of(r), p, q)
