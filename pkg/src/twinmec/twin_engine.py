"""End-to-end startup-twin runs: calibration followed by operation.

Calibration assimilates one anchor reading per stage while the twin
activates the control input its model scores highest; once the belief
reaches power operation the run switches to the operation phase, where
readings hold the full-power values and the twin keeps re-activating the
power-operation input until the absorbing state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateEvidenceError
from .plant import PlantStateTable, build_control_actions, operational_envelope
from .twin_filter import (
    MODE_DISCRETE,
    StateBelief,
    assimilate,
    observation_queries,
    observation_scores,
    propagate,
    state_queries,
)
from .twin_model import ObservationModel, TransitionModel
from .twin_planning import plan, predict_forward
from .twin_rewards import step_rewards

PHASE_CALIBRATION = "calibration"
PHASE_OPERATION = "operation"


@dataclass
class TwinStepRecord:
    """Everything the harness logs about one twin step."""

    t: int
    phase: str
    state: int
    entropy: float
    action: int
    reward_control: float
    reward_state: float
    reward_observation: float
    reward_total: float
    state_probs: dict[str, float] = field(default_factory=dict)
    obs_probs: dict[str, float] = field(default_factory=dict)
    degenerate: bool = False


class StartupTwin:
    """Wires the plant table into transition/observation models."""

    def __init__(
        self,
        table: PlantStateTable | None = None,
        n_operation_states: int = 6,
        kappa_schedule: dict | None = None,
        kappa_default: float = 1.0,
        stay: float = 0.4,
        advance: float = 0.6,
        rp_threshold: float = 2.0,
        epsilon: float = 0.05,
        discount: float = 0.6,
        likelihood_mode: str = MODE_DISCRETE,
    ):
        self.table = table if table is not None else PlantStateTable()
        self.n_states = self.table.n_anchors + n_operation_states
        self.actions = build_control_actions(self.table.n_anchors + 1)
        self.transition = TransitionModel(
            n_states=self.n_states,
            n_actions=len(self.actions),
            operation_stage=self.table.n_anchors,
            stay=stay,
            advance=advance,
        )
        self.observation = ObservationModel.from_table(
            self.table,
            n_operation_states=n_operation_states,
            kappa_schedule=kappa_schedule,
            kappa_default=kappa_default,
            rp_threshold=rp_threshold,
        )
        self.epsilon = epsilon
        self.discount = discount
        self.mode = likelihood_mode
        self.envelope = operational_envelope(self.observation.distinct_rows)

    def initial_belief(self) -> StateBelief:
        return StateBelief.uniform(self.n_states)

    def plan(self, **kwargs):
        kwargs.setdefault("gamma", self.discount)
        kwargs.setdefault("epsilon", self.epsilon)
        return plan(self.transition, self.observation, **kwargs)

    def predict(self, belief, policy, n_steps, observations=None):
        return predict_forward(
            self.transition,
            self.observation,
            belief,
            policy,
            n_steps,
            observations=observations,
            mode=self.mode,
            epsilon=self.epsilon,
        )

    def _record(self, t, phase, belief, prev_state, action_prev, obs, degenerate, prev_obs):
        scores = self.transition.action_scores(belief.probs)
        reward = step_rewards(
            self.transition, self.observation, belief, scores, obs, self.epsilon
        )
        state = belief.argmax()
        record = TwinStepRecord(
            t=t,
            phase=phase,
            state=state,
            entropy=belief.entropy(),
            action=int(np.argmax(scores)),
            reward_control=reward.control,
            reward_state=reward.state,
            reward_observation=reward.observation,
            reward_total=reward.total,
            degenerate=degenerate,
        )
        if prev_state is not None and action_prev is not None:
            record.state_probs = state_queries(
                self.transition, self.observation, prev_state, state, action_prev, obs
            )
            record.obs_probs = observation_queries(
                self.transition, self.observation, prev_state, state, obs, prev_obs
            )
        return record

    def run(
        self,
        n_operation_steps: int = 8,
        observation_noise: float = 0.0,
        rng: np.random.Generator | None = None,
    ) -> list[TwinStepRecord]:
        """Calibration over the anchor readings, then scripted operation.

        observation_noise adds zero-mean Gaussian noise with the given
        standard deviation (in native units, scaled by each parameter's
        model sigma) to the generated readings; the default is clean.
        """
        if observation_noise > 0.0 and rng is None:
            rng = np.random.default_rng(0)
        records: list[TwinStepRecord] = []
        belief = self.initial_belief()
        prev_state = None
        prev_obs = None
        action = None
        n_cal = self.table.n_anchors
        final_reading = self.table.anchors[-1]
        total = n_cal + n_operation_steps
        for t in range(total):
            phase = PHASE_CALIBRATION if t < n_cal else PHASE_OPERATION
            reading = self.table.anchors[t] if t < n_cal else final_reading
            reading = np.array(reading, dtype=float)
            if observation_noise > 0.0:
                sigma = np.sqrt(self.observation.variances[min(t, self.n_states - 1)])
                reading = reading + rng.normal(0.0, observation_noise * sigma)
            degenerate = False
            if t == 0:
                likelihood = observation_scores(self.observation, reading, self.mode)
                try:
                    belief = assimilate(belief, likelihood)
                except DegenerateEvidenceError:
                    degenerate = True
            else:
                predicted = propagate(self.transition, belief, action)
                likelihood = observation_scores(self.observation, reading, self.mode)
                try:
                    belief = assimilate(predicted, likelihood)
                except DegenerateEvidenceError:
                    belief = predicted
                    degenerate = True
            record = self._record(
                t, phase, belief, prev_state, action, reading, degenerate, prev_obs
            )
            records.append(record)
            prev_state = record.state
            prev_obs = reading
            action = record.action
        return records


def phase_means(records: list[TwinStepRecord], key: str = "full") -> dict[str, float]:
    """Mean realized-state query probability per phase (steps with a
    predecessor only)."""
    sums = {PHASE_CALIBRATION: [], PHASE_OPERATION: []}
    for record in records:
        if record.state_probs:
            sums[record.phase].append(record.state_probs[key])
    return {
        phase: float(np.mean(vals)) if vals else float("nan")
        for phase, vals in sums.items()
    }
