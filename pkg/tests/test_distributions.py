"""
Tests for finite distributions, majority pushforwards and harmonic mixtures.
"""

from fractions import Fraction

import pytest

from backend.components.distributions.finite import FiniteDistribution, align
from backend.components.distributions.majority import (
    composition_count,
    estimate_majority_push,
    majority,
    majority_push,
)
from backend.components.distributions.mixtures import (
    ZETA_TWO,
    dense_mixture,
    harmonic_mixture,
    harmonic_normalizer,
    truncated_prior_mixture,
)
from backend.components.primitives.domain import Hypothesis
from backend.core.errors import BudgetExceededError, DistributionError
from config.environment import BudgetConfig, env_center


def h(text):
    return Hypothesis.from_string(text)


@pytest.mark.unit
class TestFiniteDistribution:

    def test_exact_construction(self):
        dist = FiniteDistribution.from_weights(("a", "b", "c"), (1, 1, 2))
        assert dist.is_exact
        assert dist.mode == "exact"
        assert dist.mass("c") == Fraction(1, 2)
        assert dist.mass("missing") == 0

    def test_float_construction(self):
        dist = FiniteDistribution(("a", "b"), (0.25, 0.75))
        assert not dist.is_exact
        assert dist.mode == "float"

    def test_rejects_malformed(self):
        with pytest.raises(DistributionError):
            FiniteDistribution(("a", "a"), (Fraction(1, 2), Fraction(1, 2)))
        with pytest.raises(DistributionError):
            FiniteDistribution(("a", "b"), (Fraction(3, 2), Fraction(-1, 2)))
        with pytest.raises(DistributionError):
            FiniteDistribution(("a", "b"), (Fraction(1, 2), Fraction(1, 3)))
        with pytest.raises(DistributionError):
            FiniteDistribution((), ())

    def test_support_ignores_zero_atoms(self):
        dist = FiniteDistribution(("a", "b", "c"), (Fraction(1, 2), Fraction(0), Fraction(1, 2)))
        assert dist.support() == ("a", "c")
        assert dist.as_dict() == {"a": Fraction(1, 2), "c": Fraction(1, 2)}

    def test_equality_ignores_zero_atoms_and_order(self):
        left = FiniteDistribution(("a", "b", "c"), (Fraction(1, 2), Fraction(0), Fraction(1, 2)))
        right = FiniteDistribution(("c", "a"), (Fraction(1, 2), Fraction(1, 2)))
        assert left == right

    def test_max_atom_ties_go_first(self):
        dist = FiniteDistribution.uniform(("x", "y"))
        assert dist.max_atom() == ("x", Fraction(1, 2))

    def test_map_and_expectation(self):
        dist = FiniteDistribution.uniform((1, 2, 3, 4))
        parity = dist.map(lambda a: a % 2)
        assert parity.as_dict() == {1: Fraction(1, 2), 0: Fraction(1, 2)}
        assert dist.expectation(lambda a: a) == Fraction(5, 2)

    def test_condition(self):
        dist = FiniteDistribution.uniform((1, 2, 3, 4))
        even = dist.condition(lambda a: a % 2 == 0)
        assert even.as_dict() == {2: Fraction(1, 2), 4: Fraction(1, 2)}
        with pytest.raises(DistributionError):
            dist.condition(lambda a: a > 10)

    def test_product(self):
        coin = FiniteDistribution.uniform((0, 1))
        pair = coin.product(coin)
        assert len(pair) == 4
        assert pair.mass((1, 0)) == Fraction(1, 4)

    def test_sampling_is_seeded(self):
        dist = FiniteDistribution.from_weights(("a", "b", "c"), (1, 2, 3))
        assert dist.sample_many(20, seed=5) == dist.sample_many(20, seed=5)
        assert dist.sample(seed=7) in dist.atoms

    def test_inverse_cdf(self):
        dist = FiniteDistribution(("a", "b", "c"), (Fraction(1, 4), Fraction(1, 4), Fraction(1, 2)))
        assert dist.inverse_cdf(0.0) == 0
        assert dist.inverse_cdf(0.3) == 1
        assert dist.inverse_cdf(0.99) == 2

    def test_json_keeps_exact_probabilities(self):
        dist = FiniteDistribution.from_weights(("a", "b"), (1, 2))
        restored = FiniteDistribution.from_json(dist.to_json())
        assert restored == dist
        assert restored.is_exact

    def test_malformed_json(self):
        with pytest.raises(DistributionError):
            FiniteDistribution.from_json('{"atoms": ["a"]}')

    def test_align(self):
        p = FiniteDistribution.uniform(("a", "b"))
        q = FiniteDistribution.uniform(("b", "c"))
        atoms, pv, qv = align(p, q)
        assert atoms == ("a", "b", "c")
        assert pv == [Fraction(1, 2), Fraction(1, 2), 0]
        assert qv == [0, Fraction(1, 2), Fraction(1, 2)]


@pytest.mark.unit
class TestMajority:

    def test_majority_vote(self):
        assert majority([h("110"), h("011"), h("001")]).to_string() == "011"

    def test_ties_go_to_one(self):
        assert majority([h("10"), h("01")]).to_string() == "11"

    def test_empty_vote(self):
        with pytest.raises(DistributionError):
            majority([])

    def test_push_even_ell(self, zeros_ones):
        push = majority_push(zeros_ones, 2)
        assert push.as_dict() == {h("00"): Fraction(1, 4), h("11"): Fraction(3, 4)}

    def test_push_odd_ell(self, zeros_ones):
        push = majority_push(zeros_ones, 3)
        assert push.as_dict() == {h("00"): Fraction(1, 2), h("11"): Fraction(1, 2)}

    def test_push_single_vote_is_prior(self, zeros_ones):
        assert majority_push(zeros_ones, 1) == zeros_ones

    def test_composition_count(self):
        assert composition_count(2, 2) == 3
        assert composition_count(3, 4) == 20

    def test_push_respects_budget(self, zeros_ones, monkeypatch):
        monkeypatch.setattr(env_center, "budget_config", BudgetConfig(majority_compositions=2))
        with pytest.raises(BudgetExceededError):
            majority_push(zeros_ones, 2)

    def test_estimate_tracks_exact_law(self, zeros_ones):
        estimate = estimate_majority_push(zeros_ones, 2, trials=4000, seed=3)
        assert estimate.trials == 4000
        assert 0 < estimate.tv_radius < 0.1
        assert abs(estimate.distribution.mass(h("11")) - 0.75) < 0.1

    def test_estimate_of_point_mass(self):
        prior = FiniteDistribution.point_mass(h("101"))
        estimate = estimate_majority_push(prior, 3, trials=50, seed=0)
        assert estimate.distribution.as_dict() == {h("101"): 1.0}


@pytest.mark.unit
class TestMixtures:

    def test_normalizer(self):
        assert harmonic_normalizer([1, 2]) == Fraction(5, 4)
        assert float(harmonic_normalizer(range(1, 2000))) < ZETA_TWO

    def test_two_component_weights(self):
        first = FiniteDistribution.point_mass("a", ("a", "b"))
        second = FiniteDistribution.point_mass("b", ("a", "b"))
        flat = truncated_prior_mixture([first, second], 2)
        assert flat.as_dict() == {"a": Fraction(4, 5), "b": Fraction(1, 5)}

    def test_mixture_record(self):
        comps = [FiniteDistribution.uniform(("a", "b"))] * 3
        mixture = dense_mixture(comps)
        assert mixture.is_dense
        assert mixture.truncation == 3
        assert mixture.weight(4) == 0
        assert 0 < mixture.mass_deficit < 1
        assert mixture.report()["normalizer"] == "49/36"

    def test_sparse_mixture(self):
        comps = {1: FiniteDistribution.uniform(("a",)), 3: FiniteDistribution.uniform(("a",))}
        mixture = harmonic_mixture(comps)
        assert not mixture.is_dense
        assert mixture.weight(3) == Fraction(1, 9) / Fraction(10, 9)
        with pytest.raises(DistributionError):
            mixture.component(2)

    def test_mismatched_universes(self):
        comps = {1: FiniteDistribution.uniform(("a",)), 2: FiniteDistribution.uniform(("b",))}
        with pytest.raises(DistributionError):
            harmonic_mixture(comps)
        assert harmonic_mixture(comps, shared_universe=False).flatten().mass("b") == Fraction(1, 5)

    def test_bad_indices(self):
        with pytest.raises(DistributionError):
            harmonic_mixture({0: FiniteDistribution.uniform(("a",))})
        with pytest.raises(DistributionError):
            truncated_prior_mixture([FiniteDistribution.uniform(("a",))], 2)
