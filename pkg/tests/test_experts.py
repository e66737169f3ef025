"""
Tests for multiplicative weights and the experts game.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings as hypothesis_settings
from hypothesis import strategies as st

from backend.components.experts.game import ADVERSARIES, ExpertGame, run_game
from backend.components.experts.weights import (
    MultiplicativeWeights,
    default_eta,
    mw_weights,
    regret_bound,
)
from backend.core.errors import StabilityLabError, TheoremViolationError


@pytest.mark.unit
class TestWeights:

    def test_closed_form(self):
        dist = mw_weights([[1, 0]], eta=1.0)
        e = math.e
        assert dist.mass(0) == pytest.approx(e / (e + 1))
        assert dist.mass(1) == pytest.approx(1 / (e + 1))

    def test_empty_history_is_uniform(self):
        dist = mw_weights([], experts=4, horizon=10)
        assert all(p == pytest.approx(0.25) for p in dist.probs)

    def test_history_reaching_horizon(self):
        with pytest.raises(StabilityLabError):
            mw_weights([[1, 0], [0, 1]], horizon=2)

    def test_shape_checks(self):
        with pytest.raises(StabilityLabError):
            mw_weights([])
        with pytest.raises(StabilityLabError):
            mw_weights([[1, 0]], experts=3)

    def test_default_rate(self):
        assert default_eta(1, 10) == 0
        assert default_eta(4, 8) == pytest.approx(math.sqrt(2 * math.log(4) / 8))
        with pytest.raises(StabilityLabError):
            default_eta(0, 10)
        assert regret_bound(2, 50) == pytest.approx(math.sqrt(100 * math.log(2)))

    def test_stateful_learner_matches_closed_form(self):
        history = [[1, 0, 1], [0, 0, 1], [1, 1, 0]]
        learner = MultiplicativeWeights(3, horizon=5)
        for gains in history:
            learner.update(gains)
        expected = mw_weights(history, horizon=5)
        assert learner.distribution().probs == pytest.approx(expected.probs)

    def test_stateful_learner_limits(self):
        learner = MultiplicativeWeights(2, horizon=1)
        with pytest.raises(StabilityLabError):
            learner.update([1, 0, 0])
        learner.update([1, 0])
        with pytest.raises(StabilityLabError):
            learner.update([1, 0])


@pytest.mark.unit
class TestExpertGame:

    def test_game_validation(self):
        with pytest.raises(StabilityLabError):
            ExpertGame(np.array([[0, 2]]), 5)
        with pytest.raises(StabilityLabError):
            ExpertGame(np.array([[0, 1]]), 0)
        with pytest.raises(StabilityLabError):
            ExpertGame(np.zeros((0, 3)), 5)

    @pytest.mark.parametrize("name", sorted(ADVERSARIES))
    def test_regret_within_bound(self, name):
        game = ExpertGame.random(experts=5, instances=4, horizon=120, seed=7)
        transcript = run_game(game, ADVERSARIES[name](game), seed=3)
        assert len(transcript.rounds) == 120
        assert transcript.regret <= transcript.bound
        assert transcript.learner_total == pytest.approx(transcript.recomputed_learner_total())

    def test_transcript_frame(self, temp_dir):
        game = ExpertGame.random(experts=3, instances=3, horizon=10, seed=1)
        transcript = run_game(game, ADVERSARIES["random"](game), seed=2)
        frame = transcript.to_frame()
        assert list(frame.columns) == ["round", "instance", "utility", "w_0", "w_1", "w_2"]
        assert len(frame) == 10
        path = transcript.to_csv(temp_dir / "nested" / "transcript.csv")
        assert path.exists()

    def test_reruns_are_identical(self):
        game = ExpertGame.random(experts=4, instances=6, horizon=40, seed=11)
        first = run_game(game, ADVERSARIES["stationary"](game), seed=5)
        second = run_game(game, ADVERSARIES["stationary"](game), seed=5)
        assert [r.instance for r in first.rounds] == [r.instance for r in second.rounds]

    def test_frozen_learner_breaks_the_bound(self):
        game = ExpertGame(np.eye(2), horizon=50)
        frozen = MultiplicativeWeights(2, horizon=50, eta=0.0)
        with pytest.raises(TheoremViolationError):
            run_game(game, lambda weights, t, rng: 0, learner=frozen)
        transcript = run_game(
            game, lambda weights, t, rng: 0, learner=MultiplicativeWeights(2, 50, eta=0.0), check_bound=False
        )
        assert transcript.regret == pytest.approx(25.0)


@st.composite
def expert_games(draw):
    """Generate a small 0/1 utility matrix with a horizon."""
    experts = draw(st.integers(min_value=1, max_value=5))
    instances = draw(st.integers(min_value=1, max_value=4))
    cells = draw(st.lists(st.integers(0, 1), min_size=experts * instances, max_size=experts * instances))
    horizon = draw(st.integers(min_value=1, max_value=60))
    return ExpertGame(np.array(cells).reshape(experts, instances), horizon)


@pytest.mark.property
class TestRegretProperties:

    @given(expert_games(), st.sampled_from(sorted(ADVERSARIES)), st.integers(0, 1000))
    @hypothesis_settings(max_examples=50, deadline=None)
    def test_regret_bound_holds(self, game, name, seed):
        """Property: MW regret never exceeds sqrt(2 T ln m) against any adversary."""
        transcript = run_game(game, ADVERSARIES[name](game), seed=seed, check_bound=False)
        assert transcript.regret <= transcript.bound + 1e-9

    @given(expert_games())
    @hypothesis_settings(max_examples=50, deadline=None)
    def test_weights_form_a_distribution(self, game):
        """Property: every round's weights are a probability vector."""
        transcript = run_game(game, ADVERSARIES["best-response"](game), check_bound=False)
        for r in transcript.rounds:
            assert r.weights.min() >= 0
            assert r.weights.sum() == pytest.approx(1.0)
