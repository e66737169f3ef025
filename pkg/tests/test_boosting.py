"""
Tests for the stability-boosted learner, its KL ledger and the boosted prior.
"""

from fractions import Fraction

import pytest

from backend.components.boosting.booster import (
    BoostConfig,
    boost,
    boosted_prior,
    exact_ceil,
    kl_certificate_value,
)
from backend.components.boosting.learner import BoostedLearner
from backend.components.boosting.ledger import boosted_law, kl_ledger
from backend.components.distributions.majority import majority_push
from backend.components.divergences.exact import compare, log_of
from backend.components.divergences.measures import DivergenceValue
from backend.components.learners.rejection import finite_class_weak_learner
from backend.components.primitives.domain import Domain, Hypothesis, LabeledSample
from backend.core.errors import (
    CertificateMissingError,
    NoConsistentTargetError,
    ResampleCapExceededError,
    StabilityLabError,
)


@pytest.fixture
def weak(thresholds2):
    """Uniform-prior weak learner on two-point thresholds with k = 1."""
    return finite_class_weak_learner(thresholds2, k=1)


@pytest.fixture
def config():
    return BoostConfig(Fraction(1, 4), Fraction(1), 1)


@pytest.mark.unit
class TestBoostConfig:

    def test_gate_and_rounds(self, config):
        assert config.kl_gate == 8
        assert config.rounds(1) == 1
        # ceil(8 ln 2 * 16) + 1 = ceil(88.72) + 1
        assert config.rounds(2) == 90
        assert config.cap == 256

    def test_exact_ceil(self):
        assert exact_ceil(log_of(8)) == 3
        assert exact_ceil(log_of(1)) == 0

    def test_override(self):
        config = BoostConfig(Fraction(1, 4), 1, 1, rounds_override=5)
        assert config.rounds(1000) == 5
        assert config.to_dict()["rounds_override"] == 5

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"gamma": 0, "b": 1, "k": 1},
            {"gamma": Fraction(3, 4), "b": 1, "k": 1},
            {"gamma": Fraction(1, 4), "b": -1, "k": 1},
            {"gamma": Fraction(1, 4), "b": 1, "k": 0},
            {"gamma": Fraction(1, 4), "b": 1, "k": 1, "rounds_override": 0},
        ],
    )
    def test_rejects_bad_parameters(self, kwargs):
        with pytest.raises(StabilityLabError):
            BoostConfig(**kwargs)

    def test_zero_kl_passes_a_zero_gate(self):
        config = BoostConfig(Fraction(1, 2), 0, 1)
        assert config.kl_gate == 0
        assert config.passes_gate(DivergenceValue.zero())
        assert not config.passes_gate(DivergenceValue(log_of(2)))


@pytest.mark.unit
class TestBoost:

    def test_interpolates_realizable_sample(self, weak, config, two_point_sample):
        hypothesis, transcript = boost(weak, two_point_sample, config, seed=0)
        assert hypothesis == Hypothesis.from_string("01")
        assert transcript.T == 90
        assert transcript.m == 2
        assert transcript.interpolates
        assert transcript.resample_total == 0
        assert transcript.resample_frequency == 0.0
        assert transcript.kl_total <= 90 * 8

    def test_transcript_record(self, weak, config, two_point_sample):
        _, transcript = boost(weak, two_point_sample, config, seed=1)
        record = transcript.to_dict()
        assert record["majority"] == "01"
        assert record["log_base"] == "nats"
        assert record["config"]["kl_gate"] == "8"

    def test_same_seed_same_run(self, weak, config, two_point_sample):
        _, first = boost(weak, two_point_sample, config, seed=7)
        _, second = boost(weak, two_point_sample, config, seed=7)
        assert [r.indices for r in first.rounds] == [r.indices for r in second.rounds]
        assert [r.hypothesis for r in first.rounds] == [r.hypothesis for r in second.rounds]

    def test_empty_sample(self, weak, config):
        with pytest.raises(StabilityLabError):
            boost(weak, LabeledSample(Domain(2), ()), config)

    def test_unrealizable_sample(self, weak, config):
        # every threshold labels point 0 with 0
        with pytest.raises(NoConsistentTargetError):
            boost(weak, LabeledSample(Domain(2), ((0, 1),)), config)

    def test_resample_cap(self, weak):
        config = BoostConfig(Fraction(1, 2), 0, 1, resample_cap=3)
        with pytest.raises(ResampleCapExceededError) as info:
            boost(weak, LabeledSample(Domain(2), ((1, 1),)), config, seed=0)
        assert info.value.round_index == 0
        assert len(info.value.observed) == 4


@pytest.mark.unit
class TestCertificate:

    def test_single_index_mixture(self, config):
        # z = 1/T^2 for a mixture over {T}, so the log term vanishes
        assert compare(kl_certificate_value(config, 2, [90]), 720) == 0

    def test_missing_index(self, config):
        with pytest.raises(CertificateMissingError):
            kl_certificate_value(config, 2, [5])

    def test_boosted_prior_single_component(self, weak):
        config = BoostConfig(Fraction(1, 4), 1, 1, rounds_override=5)
        mixture = boosted_prior(weak.prior, [2], config)
        assert mixture.indices == (5,)
        assert mixture.flatten() == majority_push(weak.prior, 5)

    def test_boosted_prior_dense(self, weak):
        config = BoostConfig(Fraction(1, 4), 1, 1, rounds_override=3)
        mixture = boosted_prior(weak.prior, [2], config, dense=True)
        assert mixture.indices == (1, 2, 3)

    def test_boosted_prior_needs_sizes(self, weak, config):
        with pytest.raises(StabilityLabError):
            boosted_prior(weak.prior, [], config)


@pytest.mark.unit
class TestLedger:

    def test_transcript_tier(self, weak, config, two_point_sample):
        _, transcript = boost(weak, two_point_sample, config, seed=0)
        report = kl_ledger(transcript, weak)
        assert report.holds
        assert not report.law_tier
        assert report.check("sum_t KL(A(S_t)||P) <= T*2b/gamma").slack >= 0

    def test_law_tier(self, weak, two_point_sample):
        config = BoostConfig(Fraction(1, 4), 1, 1, rounds_override=5)
        _, transcript = boost(weak, two_point_sample, config, seed=0)
        law = boosted_law(weak, two_point_sample, config)
        assert law.T == 5
        assert sum(law.majority_law.probs) == pytest.approx(1.0)
        mixture = boosted_prior(weak.prior, [2], config)
        report = kl_ledger(transcript, weak, mixture=mixture, law=law)
        assert report.law_tier
        assert report.holds
        assert law.joint_kl <= law.gated_kl + 1e-9
        statements = [c["statement"] for c in report.to_records()]
        assert "KL(A*(S)||P*) <= T*2b/gamma + ln(z T^2)" in statements
        with pytest.raises(KeyError):
            report.check("no such inequality")


@pytest.mark.unit
class TestBoostedLearner:

    def test_draw_interpolates(self, weak, config, two_point_sample):
        learner = BoostedLearner(weak, config, m_range=(1, 2))
        assert learner.name == "boosted:k=1"
        assert learner.draw(two_point_sample, seed=0) == Hypothesis.from_string("01")
        assert learner.mixture_indices(2) == (1, 90)

    def test_agreement_unavailable(self, weak, config, two_point_sample):
        learner = BoostedLearner(weak, config)
        with pytest.raises(StabilityLabError):
            learner.agreement(two_point_sample, two_point_sample)

    def test_certificate_and_prior(self, weak, two_point_sample):
        config = BoostConfig(Fraction(1, 4), 1, 1, rounds_override=5)
        learner = BoostedLearner(weak, config)
        assert compare(learner.kl_certificate(2), 40) == 0
        assert learner.boosted_prior(2).indices == (5,)
        posterior = learner.posterior(two_point_sample)
        assert posterior.mode == "float"
        assert set(posterior.support()) <= {Hypothesis.from_string("00"), Hypothesis.from_string("01")}
