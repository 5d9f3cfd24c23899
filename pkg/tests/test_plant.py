"""Plant dataset tests: anchors, interpolation, labels, envelopes."""

import numpy as np
import pytest

from twinmec.errors import InvalidObservationError, InvalidResolutionError
from twinmec.plant import (
    CONTROL_TABLE,
    N_PARAMS,
    PARAM_NAMES,
    STARTUP_ANCHORS,
    ControlAction,
    ObservationVector,
    PlantStateTable,
    as_observation_array,
    build_control_actions,
    build_dataset,
    check_operational_constraints,
    interpolate_pair,
    operational_envelope,
)


class TestAnchors:
    def test_five_stages_six_parameters(self):
        assert STARTUP_ANCHORS.shape == (5, 6)
        assert PARAM_NAMES == ("pl", "rct", "rcp", "sgp", "sgl", "rp")

    def test_power_rises_only_at_the_end(self):
        rp = STARTUP_ANCHORS[:, PARAM_NAMES.index("rp")]
        assert np.array_equal(rp, [0.0, 0.0, 0.0, 2.0, 100.0])


class TestInterpolation:
    def test_pair_endpoints(self):
        table = PlantStateTable()
        rows = interpolate_pair(table, 1)
        assert rows.shape == (11, N_PARAMS)
        assert np.array_equal(rows[0], table.anchors[1])
        assert np.array_equal(rows[-1], table.anchors[2])

    def test_pair_linearity(self):
        table = PlantStateTable()
        rows = interpolate_pair(table, 0)
        mid = 0.5 * (table.anchors[0] + table.anchors[1])
        assert np.allclose(rows[5], mid)

    def test_pair_index_bounds(self):
        table = PlantStateTable()
        with pytest.raises(IndexError):
            interpolate_pair(table, 4)

    def test_resolution_must_be_positive(self):
        with pytest.raises(InvalidResolutionError):
            PlantStateTable(n_steps=0)

    def test_anchor_shape_checked(self):
        with pytest.raises(ValueError):
            PlantStateTable(anchors=np.zeros((5, 4)))
        with pytest.raises(ValueError):
            PlantStateTable(anchors=STARTUP_ANCHORS[:1])


class TestDataset:
    def test_row_count_at_default_resolution(self):
        rows, labels = build_dataset(PlantStateTable())
        # Four segments of ten fresh rows each, plus the final anchor.
        assert rows.shape == (41, N_PARAMS)
        assert labels.shape == (41,)

    def test_no_duplicate_rows(self):
        rows, _ = build_dataset(PlantStateTable())
        assert np.unique(rows, axis=0).shape[0] == rows.shape[0]

    def test_anchor_rows_present_with_own_labels(self):
        table = PlantStateTable()
        rows, labels = build_dataset(table)
        for s, anchor in enumerate(table.anchors):
            hits = np.where(np.all(rows == anchor, axis=1))[0]
            assert hits.size == 1
            assert labels[hits[0]] == s

    def test_labels_nearest_anchor_in_early_segments(self):
        rows, labels = build_dataset(PlantStateTable())
        # First segment: rows 0-4 closer to anchor 0, rows 5-9 to anchor 1.
        assert labels[:5].tolist() == [0] * 5
        assert labels[5:10].tolist() == [1] * 5

    def test_power_escalation_owns_the_final_segment(self):
        table = PlantStateTable()
        rows, labels = build_dataset(table)
        rp = rows[:, PARAM_NAMES.index("rp")]
        assert np.all(labels[rp > 2.0] == 4)
        # The segment-3 start (rp exactly 2.0) is still labelled by distance.
        start = np.where(np.all(rows == table.anchors[3], axis=1))[0][0]
        assert labels[start] == 3

    def test_labels_monotone(self):
        _, labels = build_dataset(PlantStateTable())
        assert np.all(np.diff(labels) >= 0)

    def test_coarser_resolution(self):
        rows, labels = build_dataset(PlantStateTable(n_steps=2))
        assert rows.shape == (9, N_PARAMS)
        assert labels.max() == 4


class TestEnvelope:
    def test_tight_envelope_bounds_dataset(self):
        rows, _ = build_dataset(PlantStateTable())
        env = operational_envelope(rows)
        assert np.array_equal(env[0], rows.min(axis=0))
        assert np.array_equal(env[1], rows.max(axis=0))

    def test_margin_widens(self):
        rows, _ = build_dataset(PlantStateTable())
        tight = operational_envelope(rows)
        wide = operational_envelope(rows, margin=0.1)
        assert np.all(wide[0] <= tight[0])
        assert np.all(wide[1] >= tight[1])

    def test_constraint_check(self):
        rows, _ = build_dataset(PlantStateTable())
        env = operational_envelope(rows)
        assert check_operational_constraints(rows[7], env)
        way_out = rows[7] + 1e4
        assert not check_operational_constraints(way_out, env)

    def test_safety_bounds_also_apply(self):
        rows, _ = build_dataset(PlantStateTable())
        env = operational_envelope(rows)
        tiny = np.stack([rows[0] - 1e-9, rows[0] + 1e-9])
        assert not check_operational_constraints(rows[20], env, safety_bounds=tiny)


class TestControlActions:
    def test_default_build(self):
        actions = build_control_actions(6)
        assert [a.id for a in actions] == list(range(6))
        # Input 5 has no table row of its own and reuses the last stage's.
        assert actions[5].rods == CONTROL_TABLE[-1][0]
        assert actions[5].boron == "decrease"
        assert actions[0].boron == "increase"

    def test_bad_bits_rejected(self):
        with pytest.raises(ValueError):
            ControlAction(0, (1, 2, 0, 0), "increase", (1, 0, 0), (1, 0, 0))
        with pytest.raises(ValueError):
            ControlAction(0, (1, 1, 0, 0), "hold", (1, 0, 0), (1, 0, 0))
        with pytest.raises(ValueError):
            build_control_actions(0)


class TestObservationHandling:
    def test_vector_roundtrip(self):
        vec = ObservationVector(100.0, 60.0, 27.0, 1.0, 100.0, 0.0)
        again = ObservationVector.from_array(vec.as_array())
        assert again == vec

    def test_array_passthrough(self):
        arr = as_observation_array([1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
        assert arr.shape == (N_PARAMS,)

    def test_shape_rejected(self):
        with pytest.raises(InvalidObservationError):
            as_observation_array([1.0, 2.0])

    def test_nonfinite_rejected(self):
        with pytest.raises(InvalidObservationError):
            as_observation_array([1.0, 2.0, np.nan, 4.0, 5.0, 6.0])
        with pytest.raises(InvalidObservationError):
            ObservationVector(1.0, 2.0, np.inf, 4.0, 5.0, 6.0).require_finite()
