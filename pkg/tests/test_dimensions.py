"""
Tests for the combinatorial dimensions, the consistency game and the dimension manager.
"""

from fractions import Fraction

import pytest

from backend.components.dimensions.clique import clique_dimension, has_clique_of_order
from backend.components.dimensions.dichotomies import (
    Dichotomy,
    dichotomies_on_exactly,
    minimal_columns,
    realizable_dichotomies,
)
from backend.components.dimensions.game import (
    GameValueResult,
    consistency_mass,
    dichotomy_probe,
    fractional_clique_value,
)
from backend.components.dimensions.littlestone import littlestone_dimension
from backend.components.dimensions.manager import DimensionManager, DimensionReport
from backend.components.dimensions.simplex import solve_packing_lp
from backend.components.dimensions.thresholds import is_staircase, longest_staircase, threshold_count
from backend.components.distributions.finite import FiniteDistribution
from backend.components.primitives.domain import Domain, Hypothesis, HypothesisClass, LabeledSample
from backend.core.errors import StabilityLabError, TheoremViolationError
from config.environment import BudgetConfig, env_center


@pytest.mark.unit
class TestLittlestone:

    @pytest.mark.parametrize(
        "hclass, expected",
        [
            (HypothesisClass.thresholds(4), 2),
            (HypothesisClass.thresholds(8), 3),
            (HypothesisClass.full(2), 2),
            (HypothesisClass.full(3), 3),
            (HypothesisClass.singletons(4), 1),
            (HypothesisClass.points(4), 1),
        ],
    )
    def test_known_values(self, hclass, expected):
        assert littlestone_dimension(hclass) == expected

    def test_single_member(self):
        hclass = HypothesisClass(Domain(3), (Hypothesis.from_string("010"),))
        assert littlestone_dimension(hclass) == 0


@pytest.mark.unit
class TestStaircase:

    def test_thresholds_embed_themselves(self, thresholds4):
        witness = longest_staircase(thresholds4)
        assert witness.length == 4
        assert is_staircase(witness)
        assert threshold_count(thresholds4) == 4

    def test_singletons(self):
        witness = longest_staircase(HypothesisClass.singletons(3))
        assert witness.length == 2
        assert is_staircase(witness)

    def test_single_member_counts_one(self):
        hclass = HypothesisClass(Domain(2), (Hypothesis.from_string("11"),))
        assert threshold_count(hclass) == 1


@pytest.mark.unit
class TestDichotomies:

    def test_contradiction(self):
        left = Dichotomy(0b011, 0b001)
        right = Dichotomy(0b110, 0b000)
        assert left.contradicts(Dichotomy(0b001, 0b000))
        assert not left.contradicts(right)
        assert left.points == (0, 1)
        assert left.size == 2

    def test_sample_conversion(self):
        domain = Domain(3)
        sample = LabeledSample(domain, ((2, 1), (0, 0), (2, 1)))
        d = Dichotomy.from_sample(sample)
        assert d == Dichotomy(0b101, 0b100)
        assert d.to_sample(domain).pairs == ((0, 0), (2, 1))
        assert str(d) == "{(0,0),(2,1)}"
        with pytest.raises(ValueError):
            Dichotomy.from_sample(LabeledSample(domain, ((0, 0), (0, 1))))

    def test_realizable_counts(self, full2, thresholds4):
        assert len(dichotomies_on_exactly(full2, 2)) == 4
        assert len(realizable_dichotomies(full2, 2)) == 8
        # point 0 is labeled 0 by every threshold, so its three pairs carry two patterns
        assert len(dichotomies_on_exactly(thresholds4, 2)) == 3 * 2 + 3 * 3

    def test_minimal_columns(self, thresholds4):
        columns = minimal_columns(dichotomies_on_exactly(thresholds4, 1), list(thresholds4.members))
        sets = [{h.to_string() for h in thresholds4 if d.consistent(h)} for d in columns]
        assert sorted(sorted(s) for s in sets) == [["0000"], ["0111"]]


@pytest.mark.unit
class TestClique:

    def test_full_class(self, full2):
        result = clique_dimension(full2)
        assert result.dimension == 2
        assert result.reported == "2"
        assert len(result.witness) == 4

    def test_thresholds(self, thresholds4):
        result = clique_dimension(thresholds4)
        assert result.dimension == 1
        assert result.orders == [1]

    def test_reported_at_cap(self):
        result = clique_dimension(HypothesisClass.full(3), m_max=2)
        assert result.dimension == 2
        assert result.reported == ">= 2"

    def test_witness_pairwise_contradicts(self, full2):
        found, _ = has_clique_of_order(full2, 2)
        assert all(a.contradicts(b) for i, a in enumerate(found) for b in found[i + 1:])

    def test_node_budget_gives_lower_bound(self, monkeypatch):
        monkeypatch.setattr(env_center, "budget_config", BudgetConfig(clique_nodes=3))
        result = clique_dimension(HypothesisClass.full(3))
        assert result.lower_bound_only
        assert result.reported.startswith(">=")


@pytest.mark.unit
class TestSimplex:

    def test_small_lp(self):
        solution = solve_packing_lp([[1, 1], [1, 0]], [4, 3], [3, 2])
        assert solution.status == "optimal"
        assert solution.objective == 11
        assert solution.primal == [3, 1]
        assert solution.dual == [2, 1]

    def test_rejects_negative_bounds(self):
        with pytest.raises(StabilityLabError):
            solve_packing_lp([[1]], [-1], [1])
        with pytest.raises(StabilityLabError):
            solve_packing_lp([[1, 1]], [1], [1])


@pytest.mark.unit
class TestConsistencyGame:

    def test_one_point_full_class(self):
        result = fractional_clique_value(HypothesisClass.full(1), 1)
        assert result.value == Fraction(1, 2)
        assert result.clique_number == 2

    def test_single_hypothesis(self):
        result = fractional_clique_value(HypothesisClass.singletons(1), 1)
        assert result.value == 1

    def test_full_class_two_samples(self):
        assert fractional_clique_value(HypothesisClass.full(3), 2).value == Fraction(1, 4)

    def test_singletons(self):
        result = fractional_clique_value(HypothesisClass.singletons(3), 2)
        assert result.clique_number == 3

    def test_prior_certifies_value(self, thresholds4):
        result = fractional_clique_value(thresholds4, 2)
        worst = min(result.optimal_prior.prob_of(d.consistent) for d in result.columns)
        assert worst == result.value
        assert result.hard_sample_mixture.is_exact

    def test_all_functions_universe(self):
        result = fractional_clique_value(HypothesisClass.full(3), 2, universe="all")
        assert result.value >= Fraction(1, 4)
        assert result.to_dict()["universe"] == "all"

    @pytest.mark.parametrize("m, expected", [(1, Fraction(1, 2)), (2, Fraction(1, 3)), (3, Fraction(1, 3))])
    def test_thresholds3_over_all_functions(self, m, expected):
        result = fractional_clique_value(HypothesisClass.thresholds(3), m, universe="all")
        assert result.value == expected

    @pytest.mark.parametrize("n", [3, 4])
    @pytest.mark.parametrize("m", [1, 2])
    def test_all_functions_prior_covers_every_realizable_dichotomy(self, n, m):
        hclass = HypothesisClass.thresholds(n)
        result = fractional_clique_value(hclass, m, universe="all")
        for d in realizable_dichotomies(hclass, m):
            assert consistency_mass(result.optimal_prior, d) >= result.value

    def test_multiplicative_weights_brackets_value(self, full2):
        exact = fractional_clique_value(full2, 1).value
        approx = fractional_clique_value(full2, 1, method="mw", gap=0.05)
        assert approx.method == "mw"
        assert approx.value <= exact <= approx.value + approx.approx_gap

    def test_argument_checks(self, full2):
        with pytest.raises(StabilityLabError):
            fractional_clique_value(full2, 0)
        with pytest.raises(StabilityLabError):
            fractional_clique_value(full2, 1, method="simplex")
        with pytest.raises(StabilityLabError):
            fractional_clique_value(full2, 1, universe="some")

    def test_value_must_be_positive(self):
        prior = FiniteDistribution.uniform(("a",))
        with pytest.raises(TheoremViolationError):
            GameValueResult(1, Fraction(0), prior, prior, "exact", Fraction(0))

    def test_probe(self, full2):
        probe = dichotomy_probe(full2, (1, 2))
        assert probe.fractional_clique_dimension == 2
        assert not probe.dp_learnable_consistent
        assert [r["saturated"] for r in probe.to_records()] == [True, True]

    def test_probe_unsaturated(self):
        probe = dichotomy_probe(HypothesisClass.singletons(3), (2,))
        assert probe.dp_learnable_consistent
        assert probe.rows[0].ratio == pytest.approx(0.75)


@pytest.mark.unit
class TestDimensionManager:

    def test_compute_all(self, thresholds4):
        report = DimensionManager().compute(thresholds4, m_grid=(1, 2))
        assert report.littlestone == 2
        assert report.threshold_count == 4
        assert report.clique.dimension == 1
        record = report.to_record()
        assert record["ld"] == 2
        assert record["C_1"] == "2"
        assert record["C_2"] == "4"
        assert report.to_dict()["skipped"] == {}

    def test_subset(self, full2):
        report = DimensionManager().compute(full2, what=("ld",))
        assert report.littlestone == 2
        assert report.clique is None
        assert report.game == []

    def test_unknown_dimension(self, full2):
        with pytest.raises(ValueError):
            DimensionManager().compute(full2, what=("vc",))

    def test_budget_overrun_is_skipped(self, full2, monkeypatch):
        monkeypatch.setattr(env_center, "budget_config", BudgetConfig(class_members=2))
        report = DimensionManager().compute(full2, what=("ld", "thresholds"))
        assert report.littlestone is None
        assert "ld" in report.skipped
        assert report.threshold_count is not None

    def test_relation_check(self):
        report = DimensionReport("fake", 3, 8, littlestone=1, threshold_count=8)
        with pytest.raises(TheoremViolationError):
            DimensionManager().check_relations(report)
