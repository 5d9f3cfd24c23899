"""Piecewise stage-reward tests with hand-computed expected values."""

import numpy as np
import pytest

from twinmec.errors import EmptyConfigurationError
from twinmec.plant import PlantStateTable
from twinmec.twin_model import ObservationModel, TransitionModel
from twinmec.twin_rewards import (
    RewardBreakdown,
    advance_probability,
    build_reward_table,
    reward_control,
    reward_observation,
    reward_state,
    step_rewards,
)


class TestRewardControl:
    def test_zero_probability_penalised(self):
        assert reward_control([0.0], 6) == pytest.approx(-0.05)

    def test_baseline_hits_bonus(self):
        assert reward_control([1 / 6], 6) == pytest.approx(1 / 6)

    def test_off_baseline_absolute_gap(self):
        assert reward_control([0.5], 6) == pytest.approx(0.5 - 1 / 6)

    def test_mean_over_entries(self):
        expected = (-0.05 + 1 / 6 + (0.5 - 1 / 6)) / 3
        assert reward_control([0.0, 1 / 6, 0.5], 6) == pytest.approx(expected)

    def test_custom_epsilon(self):
        assert reward_control([0.0], 4, epsilon=0.2) == pytest.approx(-0.2)

    def test_validation(self):
        with pytest.raises(EmptyConfigurationError):
            reward_control([], 6)
        with pytest.raises(ValueError):
            reward_control([1.2], 6)
        with pytest.raises(ValueError):
            reward_control([0.5], 0)


class TestRewardState:
    def test_endpoint_values(self):
        assert reward_state([0.0]) == -1.0
        assert reward_state([1.0]) == 1.0

    def test_interior_gap(self):
        assert reward_state([0.3]) == pytest.approx(0.7)

    def test_mean(self):
        assert reward_state([0.0, 1.0, 0.5]) == pytest.approx((-1.0 + 1.0 + 0.5) / 3)


class TestRewardObservation:
    def test_zero_penalty_is_fixed(self):
        assert reward_observation([0.0], 6) == pytest.approx(-0.1)
        assert reward_observation([0.0], 3) == pytest.approx(-0.1)

    def test_baseline_and_gap(self):
        assert reward_observation([1 / 6], 6) == pytest.approx(1 / 6)
        assert reward_observation([0.9], 6) == pytest.approx(0.9 - 1 / 6)


def test_breakdown_total():
    b = RewardBreakdown(control=0.1, state=-0.5, observation=0.25)
    assert b.total == pytest.approx(-0.15)


@pytest.fixture(scope="module")
def twin_models():
    table = PlantStateTable()
    model = TransitionModel(n_states=11, n_actions=6, operation_stage=5)
    obs = ObservationModel.from_table(table)
    return model, obs


class TestAdvanceProbability:
    def test_enabled_advance(self, twin_models):
        model, _ = twin_models
        assert advance_probability(model, 0, 1) == pytest.approx(0.6)

    def test_gated_advance(self, twin_models):
        model, _ = twin_models
        assert advance_probability(model, 0, 3) == 0.0

    def test_absorbing_state_counts_holding(self, twin_models):
        model, _ = twin_models
        assert advance_probability(model, 10, 0) == 1.0
        assert advance_probability(model, 10, 5) == 1.0


class TestRewardTable:
    def test_shape(self, twin_models):
        model, obs = twin_models
        table = build_reward_table(model, obs)
        assert table.shape == (11, 6)

    def test_stage_zero_entry(self, twin_models):
        # R(0, 1): control mass 0.6 * 0.6 = 0.36 on the enabled advance,
        # progress probability 0.6, and the state-0 expected reading is a
        # dataset row with prior 1/6.
        model, obs = twin_models
        table = build_reward_table(model, obs)
        expected = (0.36 - 1 / 6) + (1.0 - 0.6) + 1 / 6
        assert table[0, 1] == pytest.approx(expected, rel=1e-12)

    def test_enabling_input_beats_the_rest(self, twin_models):
        # From each anchor state, planning rewards favour the input that
        # actually drives its advance.
        model, obs = twin_models
        table = build_reward_table(model, obs)
        for s in range(5):
            assert np.argmax(table[s]) == s + 1


class TestStepRewards:
    def test_composition(self, twin_models):
        from twinmec.twin_filter import StateBelief

        model, obs = twin_models
        belief = StateBelief.point(11, 0)
        scores = model.action_scores(belief.probs)
        reading = PlantStateTable().anchors[0]
        breakdown = step_rewards(model, obs, belief, scores, reading)
        psis = scores / scores.sum()
        assert breakdown.control == pytest.approx(reward_control(psis, 6))
        assert breakdown.state == 1.0
        assert breakdown.observation == pytest.approx(1 / 6)

    def test_zero_scores_fall_back_to_zero_psis(self, twin_models):
        from twinmec.twin_filter import StateBelief

        model, obs = twin_models
        belief = StateBelief.point(11, 0)
        breakdown = step_rewards(model, obs, belief, np.zeros(6), np.full(6, 1e9))
        assert breakdown.control == pytest.approx(-0.05)
        assert breakdown.observation == pytest.approx(-0.1)
