"""Stage rewards for the twin: control, state, and observation terms.

Each term averages a piecewise score over a list of probabilities psi.
The piecewise shapes share a pattern: a fixed penalty at psi = 0, a
fixed bonus at the baseline probability, and the absolute gap to the
baseline everywhere else.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyConfigurationError

DEFAULT_EPSILON = 0.05
OBS_ZERO_PENALTY = 0.1


def _check_psis(psis) -> np.ndarray:
    arr = np.asarray(psis, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise EmptyConfigurationError("need a non-empty 1-D probability list")
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError(f"probabilities must lie in [0, 1], got {arr}")
    return arr


def reward_control(psis, n: int, epsilon: float = DEFAULT_EPSILON) -> float:
    """Mean control score over k configurations with n possible inputs.

    Per entry: -epsilon at psi = 0, 1/n at psi = 1/n, |1/n - psi| otherwise.
    """
    arr = _check_psis(psis)
    if n < 1:
        raise ValueError("need at least one control input")
    base = 1.0 / n
    total = 0.0
    for psi in arr:
        if psi == 0.0:
            total -= epsilon
        elif psi == base:
            total += base
        else:
            total += abs(base - psi)
    return total / arr.size


def reward_state(psis) -> float:
    """Mean state-transition score against a baseline probability of 1.

    Per entry: -1 at psi = 0, 1 at psi = 1, |1 - psi| otherwise.
    """
    arr = _check_psis(psis)
    total = 0.0
    for psi in arr:
        if psi == 0.0:
            total -= 1.0
        elif psi == 1.0:
            total += 1.0
        else:
            total += abs(1.0 - psi)
    return total / arr.size


def reward_observation(psis, n: int) -> float:
    """Mean observation score with baseline 1/n.

    Per entry: -0.1 at psi = 0, 1/n at psi = 1/n, |1/n - psi| otherwise.
    """
    arr = _check_psis(psis)
    if n < 1:
        raise ValueError("need at least one observable configuration")
    base = 1.0 / n
    total = 0.0
    for psi in arr:
        if psi == 0.0:
            total -= OBS_ZERO_PENALTY
        elif psi == base:
            total += base
        else:
            total += abs(base - psi)
    return total / arr.size


@dataclass(frozen=True)
class RewardBreakdown:
    """Per-step reward split into its three terms; total is their sum."""

    control: float
    state: float
    observation: float

    @property
    def total(self) -> float:
        return self.control + self.state + self.observation


def advance_probability(model, state: int, action: int) -> float:
    """Mass the input-conditioned kernel puts on leaving the state
    (or on holding it, once the state is absorbing)."""
    row = model.action_kernel(action)[state]
    if model.matrix[state, state] == 1.0:
        # Absorbing: holding is completing.
        return float(row[state])
    return float(row.sum() - row[state])


def build_reward_table(model, observation_model, epsilon: float = DEFAULT_EPSILON):
    """Immediate reward R(s, u) for planning over the twin's own dynamics.

    The control term scores the input's likelihood under the control
    table at that state, the state term scores the probability of making
    progress, and the observation term scores the prior mass of the
    reading the state is expected to produce.
    """
    n_states = model.n_states
    n_actions = model.n_actions
    rewards = np.zeros((n_states, n_actions))
    for s in range(n_states):
        obs_prior = observation_model.observation_prior(observation_model.means[s])
        for u in range(n_actions):
            psi_control = 0.0
            for nxt in np.nonzero(model.matrix[s])[0]:
                psi_control += model.matrix[s, int(nxt)] * model.transition_weight(
                    s, int(nxt), u
                )
            breakdown = RewardBreakdown(
                control=reward_control([psi_control], n_actions, epsilon),
                state=reward_state([advance_probability(model, s, u)]),
                observation=reward_observation([obs_prior], n_actions),
            )
            rewards[s, u] = breakdown.total
    return rewards


def step_rewards(
    model,
    observation_model,
    belief,
    action_scores: np.ndarray,
    obs,
    epsilon: float = DEFAULT_EPSILON,
) -> RewardBreakdown:
    """Realized reward of one trajectory step.

    Control scores the normalised input-activation distribution, state
    scores the belief mass at its mode, and observation scores the prior
    mass of the assimilated reading.
    """
    total = action_scores.sum()
    if total > 0.0:
        psis_control = action_scores / total
    else:
        psis_control = np.zeros_like(action_scores)
    return RewardBreakdown(
        control=reward_control(psis_control, model.n_actions, epsilon),
        state=reward_state([belief.probs[belief.argmax()]]),
        observation=reward_observation(
            [observation_model.observation_prior(obs)], model.n_actions
        ),
    )
