"""
Tests for the stability checkers, information measures, sample spaces,
Monte Carlo sharding, budgets/reports, PAC-Bayes and the subsample witness.
"""

import math
from fractions import Fraction

import pytest
from pydantic import ValidationError

from backend.components.audit.checkers import (
    ReplicabilityParams,
    coupling_partition,
    dp_check,
    global_stability,
    global_stability_implies_replicability,
    kl_stability,
    perfect_generalization,
    private_pac_check,
    renyi_stability,
    rep_param_convert,
    replicability,
    tv_stability,
    two_param_replicability,
)
from backend.components.audit.information import (
    dd_kl_stability_check,
    dd_prior_from_marginal,
    max_information,
    max_information_check,
    mutual_information,
    mutual_information_check,
)
from backend.components.audit.montecarlo import run_trials, shard_sizes
from backend.components.audit.pac_bayes import pac_bayes_certificate
from backend.components.audit.reports import (
    DEFAULT_BUDGETS,
    DEFINITIONS,
    StabilityBudget,
    StabilityReport,
    parse_number,
    render,
)
from backend.components.audit.sample_space import (
    all_samples,
    law_is_enumerable,
    neighbor_pairs,
    neighbors,
    realizable_samples,
    sample_count,
    sample_law,
    sample_source,
)
from backend.components.audit.witness import subsample_size, subsample_witness
from backend.components.distributions.finite import FiniteDistribution
from backend.components.divergences.exact import LogSum, log_of
from backend.components.learners.baselines import (
    CallableRule,
    ConstantRule,
    ERMRule,
    MemorizeRule,
    RandomizedResponse,
)
from backend.components.learners.rejection import RejectionSampler, uniform_prior
from backend.components.primitives.domain import Domain, Hypothesis, HypothesisClass, LabeledSample
from backend.core.confidence import interval_verdict, wilson_interval
from backend.core.errors import (
    BudgetExceededError,
    CertificateMissingError,
    ConfigError,
    NotSeedSplittableError,
    StabilityLabError,
)
from config.environment import BudgetConfig, env_center


def h(text):
    return Hypothesis.from_string(text)


@pytest.fixture
def rr1():
    """Randomized response with e^eps = 2 on one point."""
    return RandomizedResponse(Domain(1), ratio=Fraction(2))


@pytest.fixture
def constant1():
    return ConstantRule(Domain(1), "zeros")


@pytest.fixture
def coin_prior():
    """Uniform prior over both functions on one point."""
    return uniform_prior(Domain(1))


@pytest.mark.unit
class TestSampleSpace:

    def test_counts(self, thresholds2):
        assert sample_count(Domain(2), 2) == 16
        assert len(list(all_samples(Domain(2), 1))) == 4
        assert len(realizable_samples(thresholds2, 1)) == 3

    def test_neighbors(self):
        sample = LabeledSample(Domain(2), ((0, 0),))
        assert len(list(neighbors(sample))) == 3
        assert len(list(neighbor_pairs(Domain(2), 1))) == 6
        assert len(list(neighbor_pairs(Domain(1), 2))) == 4

    def test_sample_law(self, coin_population):
        law = sample_law(coin_population, 2)
        assert len(law) == 4
        assert all(p == Fraction(1, 4) for p in law.probs)
        assert law_is_enumerable(coin_population, 2)

    def test_sample_source_defaults_to_all_samples(self):
        source = sample_source(Domain(1), 1)
        assert len(source) == 2
        assert source.is_exact

    def test_budget(self, coin_population, monkeypatch):
        monkeypatch.setattr(env_center, "budget_config", BudgetConfig(sample_space=3))
        with pytest.raises(BudgetExceededError):
            list(all_samples(Domain(2), 1))
        assert not law_is_enumerable(coin_population, 2)


@pytest.mark.unit
class TestMonteCarlo:

    def test_shard_sizes(self):
        assert shard_sizes(600) == [250, 250, 100]
        assert shard_sizes(250) == [250]

    def test_no_trials(self):
        assert run_trials(lambda rng: rng.random(), 0) == []

    def test_results_ignore_worker_count(self):
        trial = lambda rng: rng.random()
        first = run_trials(trial, 600, seed=3, workers=1)
        second = run_trials(trial, 600, seed=3, workers=2)
        assert len(first) == 600
        assert first == second
        assert run_trials(trial, 600, seed=4, workers=1) != first


@pytest.mark.unit
class TestReports:

    def test_parse_number(self):
        assert (parse_number("ln:2") - log_of(2)).is_zero()
        assert isinstance(parse_number("ln(2)"), LogSum)
        assert (parse_number("ln(2)") - log_of(2)).is_zero()
        assert parse_number("1/4") == Fraction(1, 4)
        assert parse_number(3) == Fraction(3)
        assert parse_number(0.5) == 0.5
        assert parse_number("inf") == math.inf

    @pytest.mark.parametrize("value", [True, "abc", "ln:x"])
    def test_parse_errors(self, value):
        with pytest.raises(ConfigError):
            parse_number(value)

    def test_render(self):
        assert render(Fraction(1, 4)) == "1/4"
        assert render(Fraction(4, 2)) == "2"
        assert render(math.inf) == "inf"
        assert render({"a": [Fraction(1, 2), None]}) == {"a": ["1/2", None]}
        assert render(log_of(1)) == 0.0

    def test_budget_values(self):
        budget = StabilityBudget(definition="kl", f="1/2", f_by_m={3: "ln:2"}, beta="1/10")
        assert budget.f_at(1) == Fraction(1, 2)
        assert (budget.f_at(3) - log_of(2)).is_zero()
        assert budget.beta_at(2) == Fraction(1, 10)
        assert StabilityBudget(definition="pacbayes").beta_at(4) == Fraction(1, 4)
        assert StabilityBudget(definition="pg").beta_at(4) == 0
        assert budget.to_dict() == {"definition": "kl", "f": "1/2", "beta": "1/10", "f_by_m": {3: "ln:2"}}

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"definition": "vc"},
            {"definition": "rep", "rho": "3/2"},
            {"definition": "dp", "eps": -1},
            {"definition": "renyi", "alpha": 0},
            {"definition": "dp", "epsilon": 1},
        ],
    )
    def test_budget_validation(self, kwargs):
        with pytest.raises(ValidationError):
            StabilityBudget(**kwargs)

    def test_default_budgets_cover_every_definition(self):
        assert set(DEFAULT_BUDGETS) == set(DEFINITIONS)

    def test_exact_reports_have_no_radius(self):
        report = StabilityReport("dp", "rule", 1, Fraction(1, 3), True, radius=0.3, passed=False)
        assert report.radius == 0.0
        assert report.failed
        assert report.to_record()["estimate"] == "1/3"
        assert report.to_dict()["budget"] is None
        assert not StabilityReport("dp", "rule", 1, 0.1, False, radius=0.05).failed


@pytest.mark.unit
class TestDifferentialPrivacy:

    def test_randomized_response_is_private(self):
        rule = RandomizedResponse(Domain(2), ratio=Fraction(2))
        report = dp_check(rule, 1, log_of(2), 0)
        assert report.estimate == 0
        assert report.passed
        assert report.exact
        assert report.details["pairs"] == 6

    def test_tv_of_randomized_response(self, rr1):
        report = dp_check(rr1, 1, 0, 0)
        assert report.estimate == Fraction(1, 3)
        assert not report.passed
        assert len(report.witness["pair"]) == 2

    def test_erm_is_not_private(self):
        report = dp_check(ERMRule(HypothesisClass.full(3)), 2, log_of(2), Fraction(1, 2))
        assert report.estimate == 1
        assert report.failed

    def test_undefined_pairs_are_skipped(self):
        rule = RejectionSampler(FiniteDistribution.point_mass(h("00")))
        report = dp_check(rule, 1, 0, 0)
        assert report.details["pairs"] == 1
        assert report.details["undefined_pairs"] == 5
        assert report.passed

    def test_search_mode(self):
        report = dp_check(ERMRule(HypothesisClass.full(3)), 2, log_of(2), 0, mode="search", trials=5)
        assert report.mode == "search"
        assert report.trials == 5
        assert report.radius is None
        with pytest.raises(StabilityLabError):
            dp_check(ERMRule(HypothesisClass.full(3)), 1, 0, 0, mode="sweep")

    def test_private_pac(self, constant1, coin_population):
        report = private_pac_check(constant1, coin_population, 1, 0, 0)
        assert report.passed
        assert report.details["expected_loss"] == Fraction(1, 2)
        assert not private_pac_check(constant1, coin_population, 1, 0, 0, accuracy=Fraction(1, 4)).passed


@pytest.mark.unit
class TestReplicability:

    def test_constant_rule(self, constant1, coin_population):
        report = replicability(constant1, coin_population, 1, rho=Fraction(1, 2))
        assert report.estimate == 1
        assert report.passed
        assert report.details["collision_identity"]

    def test_randomized_response(self, rr1, coin_population):
        # same first label agrees surely, opposite labels share 2/3 of the cells
        report = replicability(rr1, coin_population, 1)
        assert report.estimate == Fraction(5, 6)
        assert report.details["coupling"] == "inverse-cdf"
        assert coupling_partition(rr1, coin_population, 1).collision() == Fraction(5, 6)

    def test_native_coupling(self, coin_population, coin_prior):
        rule = RejectionSampler(coin_prior)
        report = replicability(rule, coin_population, 1)
        assert report.estimate == Fraction(1, 2)
        assert report.details["coupling"] == "native"
        with pytest.raises(StabilityLabError):
            coupling_partition(rule, coin_population, 1)

    def test_not_seed_splittable(self, coin_population):
        rule = CallableRule(Domain(1), lambda sample, rng: h("0"), trials=5)
        with pytest.raises(NotSeedSplittableError):
            replicability(rule, coin_population, 1)

    def test_monte_carlo(self, constant1, coin_population):
        report = replicability(constant1, coin_population, 1, mode="mc", trials=200, rho=Fraction(1, 2), workers=1)
        assert report.estimate == 1.0
        assert report.mode == "mc"
        assert report.trials == 200
        assert report.passed

    def test_two_parameter(self, rr1, coin_population):
        assert two_param_replicability(rr1, coin_population, 1, eta=1).estimate == Fraction(2, 3)
        assert two_param_replicability(rr1, coin_population, 1, eta=Fraction(1, 2)).estimate == 1

    def test_parameter_conversion(self):
        assert rep_param_convert("two_to_one", ReplicabilityParams(eta=Fraction(9, 10), nu=Fraction(19, 20))).rho == Fraction(4, 5)
        converted = rep_param_convert("one_to_two", ReplicabilityParams(rho=Fraction(1), nu=Fraction(1, 2)))
        assert converted.eta == 1 and converted.nu == Fraction(1, 2)
        with pytest.raises(StabilityLabError):
            rep_param_convert("one_to_two", ReplicabilityParams(rho=Fraction(1), nu=Fraction(1)))
        with pytest.raises(StabilityLabError):
            rep_param_convert("two_to_one", ReplicabilityParams(eta=Fraction(1, 2)))
        with pytest.raises(StabilityLabError):
            rep_param_convert("sideways", ReplicabilityParams())


@pytest.mark.unit
class TestGlobalStability:

    def test_constant_rule(self, constant1, coin_population):
        report = global_stability(constant1, coin_population, 1, eta=Fraction(1, 2))
        assert report.estimate == 1
        assert report.witness["canonical"] == "0"
        assert report.passed

    def test_randomized_response(self, rr1, coin_population):
        report = global_stability(rr1, coin_population, 1)
        assert report.estimate == Fraction(1, 2)
        assert report.witness["canonical"] == "0"

    def test_monte_carlo(self, constant1, coin_population):
        report = global_stability(constant1, coin_population, 1, mode="mc", trials=100, workers=1)
        assert report.estimate == 1.0
        assert report.witness["canonical"] == "0"

    def test_relation_to_replicability(self, rr1, coin_population):
        report = global_stability_implies_replicability(rr1, coin_population, 1)
        assert report.estimate == Fraction(5, 6)
        assert report.details["eta_good"] == Fraction(1, 2)
        assert report.details["rho_lower"] == Fraction(1, 4)
        assert report.details["eta_global"] == Fraction(1, 2)
        assert report.details["rho_at_least_eta_fixed"]


@pytest.mark.unit
class TestPriorDefinitions:

    def test_pure_perfect_generalization(self, rr1, coin_prior):
        # R_inf(A(S) || uniform) = ln(4/3) on every sample
        assert perfect_generalization(rr1, 1, coin_prior, log_of(Fraction(4, 3))).estimate == 1
        report = perfect_generalization(rr1, 1, coin_prior, log_of(Fraction(5, 4)))
        assert report.estimate == 0
        assert report.failed

    def test_approx_perfect_generalization(self, rr1, coin_prior):
        report = perfect_generalization(rr1, 1, coin_prior, 0, Fraction(1, 6), mode="approx")
        assert report.estimate == 1
        assert report.details["pg_mode"] == "approx"
        with pytest.raises(StabilityLabError):
            perfect_generalization(rr1, 1, coin_prior, 0, mode="loose")

    def test_marginal_prior(self, rr1, coin_population, coin_prior):
        assert dd_prior_from_marginal(rr1, coin_population, 1) == coin_prior
        report = perfect_generalization(rr1, 1, None, log_of(2), pop=coin_population)
        assert report.details["prior"] == "marginal"
        with pytest.raises(StabilityLabError):
            perfect_generalization(rr1, 1, None, log_of(2))

    def test_renyi(self, rr1, coin_prior):
        # R_2 = ln(2 (4/9 + 1/9)) = ln(10/9) ~ 0.1054
        report = renyi_stability(rr1, 1, 2, log_of(Fraction(10, 9)), coin_prior)
        assert report.definition == "renyi"
        assert report.estimate == 1
        assert renyi_stability(rr1, 1, 2, 0.1, coin_prior).estimate == 0

    def test_kl(self):
        rule = RejectionSampler(uniform_prior(Domain(2)))
        report = kl_stability(rule, 1, log_of(2), rule.prior)
        assert report.definition == "kl"
        assert report.estimate == 1
        assert report.passed

    def test_tv(self, rr1, coin_prior, coin_population):
        assert tv_stability(rr1, 1, coin_prior).estimate == Fraction(1, 6)
        report = tv_stability(rr1, 1, coin_prior, coin_population, mode="mc", trials=100, workers=1)
        assert report.estimate == pytest.approx(1 / 6)
        assert report.mode == "mc"


@pytest.mark.unit
class TestUndefinedSamples:
    """A prior with no mass on cons(S) for the realizable sample ((1, 1),)."""

    def setup_method(self):
        self.hclass = HypothesisClass.thresholds(2)
        self.prior = FiniteDistribution.point_mass(h("00"))
        self.rule = RejectionSampler(self.prior, self.hclass)

    def test_perfect_generalization_counts_them_as_violations(self):
        report = perfect_generalization(self.rule, 1, self.prior, 0, hclass=self.hclass)
        assert report.estimate == Fraction(2, 3)
        assert report.details["undefined_mass"] == Fraction(1, 3)
        assert "undefined" in report.details["flags"]
        assert report.witness["value"] == "undefined"
        assert report.failed

    def test_beta_can_absorb_them(self):
        report = perfect_generalization(self.rule, 1, self.prior, 0, hclass=self.hclass, beta=Fraction(1, 3))
        assert report.passed

    def test_renyi_and_kl(self):
        assert renyi_stability(self.rule, 1, 2, 1, self.prior, hclass=self.hclass).failed
        report = kl_stability(self.rule, 1, 1, self.prior, hclass=self.hclass)
        assert report.estimate == Fraction(2, 3)
        assert report.failed

    def test_tv_counts_them_at_one(self):
        report = tv_stability(self.rule, 1, self.prior, hclass=self.hclass)
        assert report.estimate == Fraction(1, 3)
        assert report.details["undefined_mass"] == Fraction(1, 3)
        assert tv_stability(self.rule, 1, self.prior, hclass=self.hclass, bound=Fraction(1, 4)).failed


@pytest.mark.unit
class TestInformation:

    def test_mutual_information(self, coin_population, constant1):
        assert mutual_information(MemorizeRule(Domain(1)), coin_population, 1).equals(log_of(2))
        assert mutual_information(constant1, coin_population, 1).equals(0)

    def test_information_check(self, coin_population):
        budget = StabilityBudget(definition="mi", f="1/2")
        report = mutual_information_check(MemorizeRule(Domain(1)), coin_population, 1, budget)
        assert report.details["bits"] == pytest.approx(1.0)
        assert report.failed

    def test_markov_step(self, coin_population, constant1):
        # I = ln 2 and every KL(A(S) || P_D) = ln 2 < sqrt(ln 2)
        report = dd_kl_stability_check(MemorizeRule(Domain(1)), coin_population, 1)
        assert report.estimate == 0
        assert report.details["prior"] == "marginal"
        assert dd_kl_stability_check(constant1, coin_population, 1).estimate == 0

    def test_max_information(self, coin_population, constant1):
        memorize = MemorizeRule(Domain(1))
        assert max_information(memorize, coin_population, 1, 0) == Fraction(1, 2)
        assert max_information(memorize, coin_population, 1, log_of(2)) == 0
        assert max_information(constant1, coin_population, 1, 0) == 0
        budget = StabilityBudget(definition="maxinfo", eps=0, delta="1/4")
        assert max_information_check(memorize, coin_population, 1, budget).failed


@pytest.mark.unit
class TestPacBayes:

    def test_exact_certificate(self, realizable_pop, thresholds2):
        rule = RejectionSampler(uniform_prior(thresholds2), thresholds2)
        report = pac_bayes_certificate(rule.prior, rule, realizable_pop, 2)
        assert report.estimate == 0
        assert report.passed
        assert report.details["kl_source"] == "exact"
        assert report.details["beta"] == Fraction(1, 2)

    def test_monte_carlo(self, realizable_pop, thresholds2):
        rule = RejectionSampler(uniform_prior(thresholds2), thresholds2)
        report = pac_bayes_certificate(rule.prior, rule, realizable_pop, 2, mode="mc", trials=50, workers=1)
        assert report.estimate == 0.0
        assert report.passed
        assert report.trials == 50

    def test_monte_carlo_straddling_beta_is_inconclusive(self, realizable_pop, thresholds2):
        # zero violations in one trial: the Wilson interval still covers beta = 1/2
        rule = RejectionSampler(uniform_prior(thresholds2), thresholds2)
        report = pac_bayes_certificate(rule.prior, rule, realizable_pop, 2, mode="mc", trials=1, workers=1)
        low, high = report.details["interval"]
        assert low <= 0.5 < high
        assert report.passed is None
        assert not report.failed

    @pytest.mark.parametrize(
        "successes, trials, beta, expected",
        [(0, 200, 0.5, True), (180, 200, 0.5, False), (1, 10, 0.1, None), (0, 1, 0.5, None)],
    )
    def test_interval_verdict(self, successes, trials, beta, expected):
        assert interval_verdict(*wilson_interval(successes, trials), beta) is expected

    def test_argument_checks(self, realizable_pop, thresholds2):
        rule = RejectionSampler(uniform_prior(thresholds2), thresholds2)
        with pytest.raises(StabilityLabError):
            pac_bayes_certificate(rule.prior, rule, realizable_pop, 1)
        with pytest.raises(StabilityLabError):
            pac_bayes_certificate(None, ERMRule(thresholds2), realizable_pop, 2)
        with pytest.raises(StabilityLabError):
            pac_bayes_certificate(rule.prior, rule, realizable_pop, 2, beta=Fraction(0))


@pytest.mark.unit
class TestWitness:

    def test_subsample_size(self):
        assert subsample_size(1) == 2
        assert subsample_size(2) == 5

    def test_exact_construction(self, two_point_sample):
        rule = RejectionSampler(uniform_prior(Domain(2)))
        result = subsample_witness(rule, rule.prior, two_point_sample, kl_bound=log_of(4))
        assert result.exact
        assert result.m_prime == 5
        assert result.prior_mass == Fraction(1, 4)
        # both points covered w.p. 15/16, plus 1/64 from each single-point subsample
        assert result.q_event == pytest.approx(31 / 32)
        assert result.q_tail == 0
        assert result.holds
        assert result.slack > 0
        via_c = subsample_witness(rule, rule.prior, two_point_sample, C=2)
        assert via_c.k == pytest.approx(result.k)

    def test_monte_carlo_construction(self, two_point_sample):
        rule = RejectionSampler(uniform_prior(Domain(2)))
        result = subsample_witness(rule, rule.prior, two_point_sample, C=2, mode="mc", trials=200, seed=1)
        assert not result.exact
        assert result.trials == 200
        assert result.holds
        assert result.to_dict()["m_prime"] == 5

    def test_argument_checks(self, two_point_sample):
        rejection = RejectionSampler(uniform_prior(Domain(2)))
        with pytest.raises(CertificateMissingError):
            subsample_witness(rejection, rejection.prior, two_point_sample)
        with pytest.raises(StabilityLabError):
            subsample_witness(rejection, rejection.prior, LabeledSample(Domain(2), ()), C=1)
        rr = RandomizedResponse(Domain(2), ratio=Fraction(2))
        with pytest.raises(StabilityLabError):
            subsample_witness(rr, rejection.prior, two_point_sample, C=1)
        erm = ERMRule(HypothesisClass.full(2))
        with pytest.raises(StabilityLabError):
            subsample_witness(erm, rejection.prior, two_point_sample, C=1)
        with pytest.raises(StabilityLabError):
            subsample_witness(rejection, rejection.prior, two_point_sample, C=1, mode="sketch")
