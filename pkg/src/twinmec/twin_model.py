"""Probabilistic model of the startup twin.

The digital state space is the set of anchor stages (0..4 by default)
extended with a run of power-operation states that the plant walks
through once energy production begins.  Stage dynamics form a forward
band: with probability 0.4 the plant holds its state for another step
and with probability 0.6 it advances, until an absorbing final state.

Control inputs couple to the dynamics through a conditional table over
(previous transition, current transition, input) triples.  Observations
are six-parameter readings scored per state by a Gaussian whose variance
is scaled by a per-transition factor kappa; states whose scheduled kappa
is zero instead use a tolerance band around the state mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import plant
from .errors import InvalidObservationError
from .plant import PlantStateTable, as_observation_array, build_dataset

STAY_PROB = 0.4
ADVANCE_PROB = 0.6

# Weights of the (previous transition was an advance) rows of the control
# table: holding the advanced stage vs. settling into it.
REPEAT_ADVANCE_PROB = 0.1
SETTLE_PROB = 0.4

DEFAULT_KAPPA_SCHEDULE = {
    (0, 0): 3.5,
    (0, 1): 2.5,
    (1, 2): 2.0,
    (2, 3): 2.5,
    (3, 4): 1.0,
}

KAPPA_FLOOR = 1e-3
VARIANCE_FLOOR = 1e-4  # squared native units
BAND_REL_TOL = 0.01
BAND_MISS_LIKELIHOOD = 1e-6

_LOG_BAND_MISS = math.log(BAND_MISS_LIKELIHOOD)


def build_transition_matrix(
    n_states: int, stay: float = STAY_PROB, advance: float = ADVANCE_PROB
) -> np.ndarray:
    """Forward-band transition matrix with an absorbing final state."""
    if n_states < 1:
        raise ValueError("need at least one digital state")
    matrix = np.zeros((n_states, n_states))
    for s in range(n_states - 1):
        matrix[s, s] = stay
        matrix[s, s + 1] = advance
    matrix[-1, -1] = 1.0
    return matrix


def build_control_cpt(n_stages: int = 6) -> dict:
    """P(input | previous transition, current transition) as a sparse dict.

    Keys are ((a, b), (c, d), u) where (a, b) is the stage transition taken
    at the previous step and (c, d) the one at the current step.  Stage
    indices run 0..n_stages-1 with the last stage denoting power
    operation.  Unlisted combinations have probability zero.
    """
    final = n_stages - 1
    cpt: dict = {}
    for i in range(final):
        cpt[((i, i), (i, i), i)] = STAY_PROB
        cpt[((i, i), (i, i + 1), i + 1)] = ADVANCE_PROB
    for i in range(final - 1):
        cpt[((i, i + 1), (i, i + 1), i + 1)] = REPEAT_ADVANCE_PROB
        cpt[((i, i + 1), (i + 1, i + 1), i + 1)] = SETTLE_PROB
    cpt[((final - 1, final), (final, final), final)] = SETTLE_PROB
    cpt[((final, final), (final, final), final)] = 1.0
    return cpt


@dataclass
class TransitionModel:
    """Stage dynamics plus the control-input coupling.

    n_states counts digital states (anchors plus power-operation
    extension); stage indices saturate at ``operation_stage`` so every
    extension state shares the power-operation control behaviour.
    """

    n_states: int
    n_actions: int = 6
    operation_stage: int = 5
    stay: float = STAY_PROB
    advance: float = ADVANCE_PROB
    matrix: np.ndarray = field(init=False)
    control_cpt: dict = field(init=False)

    def __post_init__(self):
        self.matrix = build_transition_matrix(self.n_states, self.stay, self.advance)
        self.control_cpt = build_control_cpt(self.operation_stage + 1)
        self._kernels: dict[int, np.ndarray] = {}

    def stage(self, state: int) -> int:
        if not 0 <= state < self.n_states:
            raise IndexError(f"state {state} out of range")
        return min(state, self.operation_stage)

    def transition_prob(self, i: int, j: int) -> float:
        if not (0 <= i < self.n_states and 0 <= j < self.n_states):
            raise IndexError(f"transition ({i}, {j}) out of range")
        return float(self.matrix[i, j])

    def control_likelihood(self, prev_pair, next_pair, action: int) -> float:
        """Probability of ``action`` given the two consecutive transitions."""
        if not 0 <= action < self.n_actions:
            raise IndexError(f"action {action} out of range")
        return self.control_cpt.get((tuple(prev_pair), tuple(next_pair), action), 0.0)

    def transition_weight(self, state: int, nxt: int, action: int) -> float:
        """Control weight of the stage transition state -> nxt under action."""
        a = self.stage(state)
        b = self.stage(nxt)
        return self.control_cpt.get(((a, a), (a, b), action), 0.0)

    def action_kernel(self, action: int) -> np.ndarray:
        """State transition matrix conditioned on a control input.

        The input gates which moves of the forward band are enabled:
        holding the current state is always possible, and a move appears
        when the control table supports it.  Probabilities come from the
        unconditioned band renormalised over the enabled set, so an input
        with no effect from a state leaves the belief unchanged there.
        """
        if not 0 <= action < self.n_actions:
            raise IndexError(f"action {action} out of range")
        cached = self._kernels.get(action)
        if cached is not None:
            return cached
        kernel = np.zeros_like(self.matrix)
        for s in range(self.n_states):
            enabled = [s]
            for nxt in np.nonzero(self.matrix[s])[0]:
                if nxt != s and self.transition_weight(s, int(nxt), action) > 0.0:
                    enabled.append(int(nxt))
            row = np.zeros(self.n_states)
            for nxt in enabled:
                row[nxt] = self.matrix[s, nxt]
            total = row.sum()
            if total <= 0.0:
                row[:] = 0.0
                row[s] = 1.0
            else:
                row /= total
            kernel[s] = row
        self._kernels[action] = kernel
        return kernel

    def action_scores(self, belief: np.ndarray) -> np.ndarray:
        """Unnormalised score of each control input under a belief.

        score(u) = sum_s belief[s] * sum_j band[s, j] * weight(s, j, u);
        the argmax is the input the twin would activate next.
        """
        scores = np.zeros(self.n_actions)
        for s in np.nonzero(belief)[0]:
            s = int(s)
            for nxt in np.nonzero(self.matrix[s])[0]:
                p = self.matrix[s, int(nxt)]
                for u in range(self.n_actions):
                    w = self.transition_weight(s, int(nxt), u)
                    if w > 0.0:
                        scores[u] += belief[s] * p * w
        return scores

    def select_action(self, belief: np.ndarray) -> int:
        return int(np.argmax(self.action_scores(belief)))


def resolve_state_kappas(
    n_states: int,
    operation_start: int,
    schedule: dict | None = None,
    default: float = 1.0,
) -> np.ndarray:
    """Per-state kappa from the pair-keyed schedule.

    State s is scored in the context of the advance that reaches it, so
    its kappa is schedule[(s-1, s)] (schedule[(0, 0)] for the initial
    state).  Power-operation states have kappa 0: their readings are
    pinned to a tolerance band instead of a Gaussian.
    """
    schedule = DEFAULT_KAPPA_SCHEDULE if schedule is None else schedule
    kappas = np.empty(n_states)
    for s in range(n_states):
        if s >= operation_start:
            kappas[s] = 0.0
        elif s == 0:
            kappas[s] = schedule.get((0, 0), default)
        else:
            kappas[s] = schedule.get((s - 1, s), default)
    return kappas


class ObservationModel:
    """Per-state observation statistics over the interpolated dataset.

    Gaussian states score a reading as a product of six independent
    normal densities with variance sigma^2 / sqrt(kappa) (kappa floored
    at KAPPA_FLOOR).  States with scheduled kappa 0 (power operation)
    instead score 1 inside a +-1% band around the state mean and
    BAND_MISS_LIKELIHOOD outside.

    ``row_conditional`` renormalises those scores over the distinct
    dataset rows, giving a bounded discrete conditional that the filter
    uses by default; ``density`` exposes the raw product.
    """

    def __init__(
        self,
        means: np.ndarray,
        variances: np.ndarray,
        kappas: np.ndarray,
        dataset_rows: np.ndarray,
        band_rel_tol: float = BAND_REL_TOL,
        kappa_floor: float = KAPPA_FLOOR,
    ):
        self.means = np.asarray(means, dtype=float)
        self.variances = np.maximum(np.asarray(variances, dtype=float), VARIANCE_FLOOR)
        self.kappas = np.asarray(kappas, dtype=float)
        self.band_rel_tol = band_rel_tol
        self.kappa_floor = kappa_floor
        self.n_states = self.means.shape[0]
        self.distinct_rows = np.unique(np.asarray(dataset_rows, dtype=float), axis=0)
        self._log_norm = None

    @classmethod
    def from_table(
        cls,
        table: PlantStateTable,
        n_operation_states: int = 6,
        kappa_schedule: dict | None = None,
        kappa_default: float = 1.0,
        rp_threshold: float = 2.0,
        band_rel_tol: float = BAND_REL_TOL,
    ) -> "ObservationModel":
        rows, labels = build_dataset(table, rp_threshold)
        n_anchor_states = table.n_anchors
        n_states = n_anchor_states + n_operation_states
        means = np.zeros((n_states, plant.N_PARAMS))
        variances = np.zeros((n_states, plant.N_PARAMS))
        for s in range(n_anchor_states):
            members = rows[labels == s]
            if members.shape[0] == 0:
                members = table.anchors[s][None, :]
            means[s] = members.mean(axis=0)
            variances[s] = members.var(axis=0)
        # Power-operation states hold the final anchor's readings.
        final_row = table.anchors[-1]
        for s in range(n_anchor_states, n_states):
            means[s] = final_row
            variances[s] = 0.0
        kappas = resolve_state_kappas(
            n_states, n_anchor_states, kappa_schedule, kappa_default
        )
        return cls(means, variances, kappas, rows, band_rel_tol=band_rel_tol)

    def _band_state(self, state: int) -> bool:
        return self.kappas[state] <= self.kappa_floor

    def log_likelihood(self, obs, state: int) -> float:
        """Log of the raw per-state observation score."""
        arr = as_observation_array(obs)
        if not 0 <= state < self.n_states:
            raise IndexError(f"state {state} out of range")
        mu = self.means[state]
        if self._band_state(state):
            tol = self.band_rel_tol * np.abs(mu)
            inside = np.all(np.abs(arr - mu) <= tol)
            return 0.0 if inside else _LOG_BAND_MISS
        kappa = max(self.kappas[state], self.kappa_floor)
        var = self.variances[state] / math.sqrt(kappa)
        resid = arr - mu
        return float(
            -0.5 * np.sum(resid * resid / var)
            - 0.5 * np.sum(np.log(2.0 * math.pi * var))
        )

    def density(self, obs, state: int) -> float:
        """Raw observation score: Gaussian product or tolerance band."""
        return math.exp(self.log_likelihood(obs, state))

    def log_likelihood_vector(self, obs) -> np.ndarray:
        arr = as_observation_array(obs)
        out = np.empty(self.n_states)
        for s in range(self.n_states):
            out[s] = self.log_likelihood(arr, s)
        return out

    def _log_normalizers(self) -> np.ndarray:
        if self._log_norm is None:
            per_row = np.empty((self.distinct_rows.shape[0], self.n_states))
            for i, row in enumerate(self.distinct_rows):
                per_row[i] = self.log_likelihood_vector(row)
            top = per_row.max(axis=0)
            self._log_norm = top + np.log(np.exp(per_row - top).sum(axis=0))
        return self._log_norm

    def row_conditional(self, obs) -> np.ndarray:
        """Per-state score of a reading, normalised over the distinct rows."""
        return np.exp(self.log_likelihood_vector(obs) - self._log_normalizers())

    def observation_prior(self, obs, n_calibration: int = 6) -> float:
        """Prior mass of a reading: 1/n for anchor-stage rows, uniform
        weight over the power-operation rows, 0 for anything else."""
        arr = as_observation_array(obs)
        final_mu = self.means[-1]
        if np.allclose(arr, final_mu, rtol=0.0, atol=1e-9):
            n_ops = int(np.sum(self.kappas <= self.kappa_floor))
            return 1.0 / max(n_ops, 1)
        for row in self.distinct_rows:
            if np.allclose(arr, row, rtol=0.0, atol=1e-9):
                return 1.0 / n_calibration
        return 0.0
