"""Transition and observation model tests for the startup twin."""

import math

import numpy as np
import pytest

from twinmec.plant import PlantStateTable
from twinmec.twin_model import (
    DEFAULT_KAPPA_SCHEDULE,
    ObservationModel,
    TransitionModel,
    build_control_cpt,
    build_transition_matrix,
    resolve_state_kappas,
)


class TestTransitionMatrix:
    def test_band_structure(self):
        m = build_transition_matrix(4)
        expected = np.array(
            [
                [0.4, 0.6, 0.0, 0.0],
                [0.0, 0.4, 0.6, 0.0],
                [0.0, 0.0, 0.4, 0.6],
                [0.0, 0.0, 0.0, 1.0],
            ]
        )
        assert np.array_equal(m, expected)

    def test_rows_stochastic(self):
        m = build_transition_matrix(11)
        assert np.allclose(m.sum(axis=1), 1.0)

    def test_single_state_absorbing(self):
        assert np.array_equal(build_transition_matrix(1), [[1.0]])


class TestControlCpt:
    def test_hold_and_advance_weights(self):
        cpt = build_control_cpt(6)
        assert cpt[((2, 2), (2, 2), 2)] == 0.4
        assert cpt[((2, 2), (2, 3), 3)] == 0.6

    def test_post_advance_weights(self):
        cpt = build_control_cpt(6)
        assert cpt[((1, 2), (1, 2), 2)] == 0.1
        assert cpt[((1, 2), (2, 2), 2)] == 0.4

    def test_power_operation_entries(self):
        cpt = build_control_cpt(6)
        assert cpt[((4, 5), (5, 5), 5)] == 0.4
        assert cpt[((5, 5), (5, 5), 5)] == 1.0

    def test_unlisted_is_absent(self):
        cpt = build_control_cpt(6)
        assert ((0, 0), (0, 1), 3) not in cpt
        assert ((0, 1), (1, 2), 2) not in cpt


def default_model(n_states=11):
    return TransitionModel(n_states=n_states, n_actions=6, operation_stage=5)


class TestTransitionModel:
    def test_stage_saturates(self):
        model = default_model()
        assert model.stage(0) == 0
        assert model.stage(4) == 4
        assert model.stage(5) == 5
        assert model.stage(10) == 5
        with pytest.raises(IndexError):
            model.stage(11)

    def test_kernel_rows_stochastic(self):
        model = default_model()
        for u in range(model.n_actions):
            kernel = model.action_kernel(u)
            assert np.allclose(kernel.sum(axis=1), 1.0)
            assert np.all(kernel >= 0.0)

    def test_input_gates_its_own_advance(self):
        # Input u enables the band move out of stage u-1; everywhere else
        # the belief holds.
        model = default_model()
        k1 = model.action_kernel(1)
        assert k1[0, 0] == pytest.approx(0.4)
        assert k1[0, 1] == pytest.approx(0.6)
        assert k1[1, 1] == 1.0
        assert k1[4, 4] == 1.0

    def test_power_input_drives_the_operation_run(self):
        model = default_model()
        k5 = model.action_kernel(5)
        assert k5[4, 5] == pytest.approx(0.6)
        for s in range(5, 10):
            assert k5[s, s] == pytest.approx(0.4)
            assert k5[s, s + 1] == pytest.approx(0.6)
        assert k5[10, 10] == 1.0
        assert k5[2, 2] == 1.0

    def test_idle_input_freezes_everything(self):
        model = default_model()
        assert np.array_equal(model.action_kernel(0), np.eye(11) * 0 + np.eye(11))

    def test_kernel_cached(self):
        model = default_model()
        assert model.action_kernel(3) is model.action_kernel(3)

    def test_action_scores_from_stage_zero(self):
        model = default_model()
        belief = np.zeros(11)
        belief[0] = 1.0
        scores = model.action_scores(belief)
        assert scores[0] == pytest.approx(0.4 * 0.4)
        assert scores[1] == pytest.approx(0.6 * 0.6)
        assert np.all(scores[2:] == 0.0)
        assert model.select_action(belief) == 1

    def test_action_scores_in_power_operation(self):
        model = default_model()
        belief = np.zeros(11)
        belief[10] = 1.0
        scores = model.action_scores(belief)
        assert scores[5] == pytest.approx(1.0)
        assert model.select_action(belief) == 5

    def test_control_likelihood_lookup(self):
        model = default_model()
        assert model.control_likelihood((0, 0), (0, 1), 1) == 0.6
        assert model.control_likelihood((0, 0), (0, 1), 2) == 0.0
        with pytest.raises(IndexError):
            model.control_likelihood((0, 0), (0, 1), 6)


class TestKappaResolution:
    def test_default_schedule_layout(self):
        kappas = resolve_state_kappas(11, 5)
        assert kappas[:5].tolist() == [3.5, 2.5, 2.0, 2.5, 1.0]
        assert np.all(kappas[5:] == 0.0)

    def test_states_read_the_advance_that_reaches_them(self):
        kappas = resolve_state_kappas(5, 5, DEFAULT_KAPPA_SCHEDULE)
        assert kappas[3] == DEFAULT_KAPPA_SCHEDULE[(2, 3)]

    def test_default_fills_schedule_gaps(self):
        kappas = resolve_state_kappas(4, 4, {(0, 0): 9.0}, default=7.0)
        assert kappas.tolist() == [9.0, 7.0, 7.0, 7.0]


@pytest.fixture(scope="module")
def obs_model():
    return ObservationModel.from_table(PlantStateTable())


class TestObservationModel:
    def test_shapes(self, obs_model):
        assert obs_model.n_states == 11
        assert obs_model.means.shape == (11, 6)
        assert obs_model.distinct_rows.shape == (41, 6)

    def test_variance_floor(self, obs_model):
        assert np.all(obs_model.variances >= 1e-4)

    def test_operation_states_hold_full_power_readings(self, obs_model):
        final = PlantStateTable().anchors[-1]
        for s in range(5, 11):
            assert np.array_equal(obs_model.means[s], final)

    def test_gaussian_log_likelihood_formula(self, obs_model):
        reading = obs_model.distinct_rows[3]
        s = 0
        var = obs_model.variances[s] / math.sqrt(obs_model.kappas[s])
        resid = reading - obs_model.means[s]
        expected = -0.5 * np.sum(resid**2 / var) - 0.5 * np.sum(
            np.log(2 * math.pi * var)
        )
        assert obs_model.log_likelihood(reading, s) == pytest.approx(expected, rel=1e-12)

    def test_band_hit_and_miss(self, obs_model):
        final = obs_model.means[10]
        assert obs_model.density(final, 10) == 1.0
        nudged = final.copy()
        nudged[5] *= 1.005  # still inside the 1% band
        assert obs_model.density(nudged, 10) == 1.0
        shifted = final.copy()
        shifted[5] *= 1.02
        assert obs_model.density(shifted, 10) == pytest.approx(1e-6)

    def test_row_conditional_sums_to_one_per_state(self, obs_model):
        totals = np.zeros(obs_model.n_states)
        for row in obs_model.distinct_rows:
            totals += obs_model.row_conditional(row)
        assert np.allclose(totals, 1.0, atol=1e-10)

    def test_row_conditional_tracks_anchor_states(self, obs_model):
        # Early anchors are unambiguous on the reading alone; anchor 3
        # overlaps the wide power-escalation state, so its evidence is
        # merely positive there (the transition band disambiguates).
        table = PlantStateTable()
        for s in range(3):
            cond = obs_model.row_conditional(table.anchors[s])
            assert cond[:5].argmax() == s
        for s in range(5):
            assert obs_model.row_conditional(table.anchors[s])[s] > 0.0

    def test_full_power_anchor_sits_in_every_operation_band(self, obs_model):
        cond = obs_model.row_conditional(PlantStateTable().anchors[4])
        assert np.all(cond[5:] == cond[5])
        assert cond[5] > cond[3]

    def test_observation_prior_values(self, obs_model):
        table = PlantStateTable()
        assert obs_model.observation_prior(table.anchors[0]) == pytest.approx(1 / 6)
        assert obs_model.observation_prior(obs_model.distinct_rows[17]) == pytest.approx(
            1 / 6
        )
        # The full-power reading is shared by the six operation states.
        assert obs_model.observation_prior(obs_model.means[-1]) == pytest.approx(1 / 6)
        assert obs_model.observation_prior(np.full(6, 1e6)) == 0.0

    def test_state_index_checked(self, obs_model):
        with pytest.raises(IndexError):
            obs_model.log_likelihood(obs_model.means[0], 11)
