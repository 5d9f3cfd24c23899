"""Value-iteration planning tests, checked against policy enumeration."""

import numpy as np
import pytest

from oracles import enumerate_optimal_policy
from twinmec.errors import ConvergenceError
from twinmec.plant import PlantStateTable
from twinmec.twin_filter import StateBelief
from twinmec.twin_model import ObservationModel, TransitionModel
from twinmec.twin_planning import (
    Policy,
    plan,
    predict_forward,
    reading_bucket,
    value_iteration,
)


def random_mdp(rng, n_states=4, n_actions=3):
    trans = rng.uniform(0.1, 1.0, size=(n_actions, n_states, n_states))
    trans /= trans.sum(axis=2, keepdims=True)
    rewards = rng.normal(size=(n_states, n_actions))
    return trans, rewards


class TestValueIteration:
    def test_two_state_chain_closed_form(self):
        # Action 1 moves 0 -> 1 for reward 1; state 1 is absorbing and
        # worthless, so v = (1, 0) and the greedy policy advances.
        trans = np.array(
            [
                [[1.0, 0.0], [0.0, 1.0]],
                [[0.0, 1.0], [0.0, 1.0]],
            ]
        )
        rewards = np.array([[0.0, 1.0], [0.0, 0.0]])
        values, actions, residuals = value_iteration(trans, rewards, gamma=0.5)
        assert values == pytest.approx([1.0, 0.0], abs=1e-9)
        assert actions.tolist() == [1, 0]

    def test_matches_policy_enumeration(self, rng):
        for _ in range(10):
            trans, rewards = random_mdp(rng)
            values, actions, _ = value_iteration(trans, rewards, gamma=0.6, tol=1e-12)
            best_v, _ = enumerate_optimal_policy(trans, rewards, 0.6)
            assert np.allclose(values, best_v, atol=1e-9)
            # The greedy policy must achieve the optimal value too.
            p = np.stack([trans[actions[s], s] for s in range(4)])
            r = np.array([rewards[s, actions[s]] for s in range(4)])
            v_greedy = np.linalg.solve(np.eye(4) - 0.6 * p, r)
            assert np.allclose(v_greedy, best_v, atol=1e-9)

    def test_residuals_contract(self, rng):
        trans, rewards = random_mdp(rng, n_states=5)
        _, _, residuals = value_iteration(trans, rewards, gamma=0.8, tol=1e-10)
        assert residuals.ndim == 1
        assert np.all(np.diff(residuals) <= 1e-15)
        # Discounted sweeps contract at least geometrically (the ratio
        # approaches the discount exactly, so allow float slack).
        assert np.all(residuals[1:] <= 0.8 * residuals[:-1] * (1 + 1e-9) + 1e-12)

    def test_budget_exhaustion(self, rng):
        trans, rewards = random_mdp(rng)
        with pytest.raises(ConvergenceError) as e:
            value_iteration(trans, rewards, gamma=0.9, tol=1e-12, max_sweeps=3)
        assert e.value.residual > 1e-12

    def test_discount_bounds(self, rng):
        trans, rewards = random_mdp(rng)
        with pytest.raises(ValueError):
            value_iteration(trans, rewards, gamma=1.0)


class TestPolicy:
    def test_action_lookup(self):
        table = np.arange(6).reshape(2, 3)
        policy = Policy(actions=table)
        assert policy.action_for(1, 2) == 5
        assert policy.action_for(1) == 4  # bucket defaults to the state

    def test_validation(self):
        with pytest.raises(ValueError):
            Policy(actions=np.arange(3))
        with pytest.raises(ValueError):
            Policy(actions=np.zeros((2, 2)), discount=1.0)


@pytest.fixture(scope="module")
def twin():
    table = PlantStateTable()
    model = TransitionModel(n_states=11, n_actions=6, operation_stage=5)
    obs = ObservationModel.from_table(table)
    return model, obs


class TestPlan:
    def test_policy_walks_the_startup_sequence(self, twin):
        model, obs = twin
        result = plan(model, obs)
        assert result.policy.actions.shape == (11, 11)
        # Planning on the state alone: all buckets agree.
        assert np.all(result.policy.actions == result.policy.actions[:, :1])
        for s in range(5):
            assert result.policy.action_for(s) == s + 1
        for s in range(5, 11):
            assert result.policy.action_for(s) == 5

    def test_values_rise_toward_operation(self, twin):
        # From stage 1 on, each stage sits closer to the absorbing payoff
        # stream, so planning values increase along the startup sequence.
        # Stage 0 carries an extra observation bonus (its expected reading
        # is an exact dataset row), so it is excluded from the ordering.
        model, obs = twin
        result = plan(model, obs)
        assert np.all(np.diff(result.values[1:6]) > 0.0)
        assert result.values[5] > result.values[0]


class TestReadingBucket:
    def test_anchor_readings(self, twin):
        _, obs = twin
        table = PlantStateTable()
        for s in range(4):
            assert reading_bucket(obs, table.anchors[s]) == s

    def test_full_power_reading_picks_first_operation_state(self, twin):
        _, obs = twin
        assert reading_bucket(obs, obs.means[-1]) == 5


class TestPredictForward:
    def test_zero_steps(self, twin):
        model, obs = twin
        policy = plan(model, obs).policy
        start = StateBelief.point(11, 0)
        steps = predict_forward(model, obs, start, policy, 0)
        assert len(steps) == 1
        assert steps[0].belief is start

    def test_rollout_advances_belief(self, twin):
        model, obs = twin
        policy = plan(model, obs).policy
        steps = predict_forward(model, obs, StateBelief.point(11, 0), policy, 12)
        modes = [st.belief.argmax() for st in steps]
        assert modes[0] == 0
        assert modes[-1] >= 5
        assert all(b - a >= 0 for a, b in zip(modes, modes[1:]))
        for st in steps[1:]:
            assert st.action_probs.sum() == pytest.approx(1.0)
            assert st.reward is not None

    def test_rollout_with_observations_assimilates(self, twin):
        model, obs = twin
        policy = plan(model, obs).policy
        table = PlantStateTable()
        start = StateBelief.point(11, 0)
        steps = predict_forward(
            model, obs, start, policy, 1, observations=[table.anchors[1]]
        )
        mixed = model.action_kernel(policy.action_for(0))[0]
        scores = obs.row_conditional(table.anchors[1])
        expected = mixed * scores
        expected /= expected.sum()
        assert np.allclose(steps[1].belief.probs, expected, atol=1e-12)

    def test_argument_validation(self, twin):
        model, obs = twin
        policy = plan(model, obs).policy
        start = StateBelief.point(11, 0)
        with pytest.raises(ValueError):
            predict_forward(model, obs, start, policy, -1)
        with pytest.raises(ValueError):
            predict_forward(model, obs, start, policy, 2, observations=[1])
