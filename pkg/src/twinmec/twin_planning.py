"""Control planning over the twin's dynamics via value iteration."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConvergenceError
from .twin_filter import StateBelief, observation_scores
from .twin_rewards import RewardBreakdown, build_reward_table, step_rewards

DEFAULT_DISCOUNT = 0.6


@dataclass(frozen=True)
class Policy:
    """Deterministic control map keyed by (digital state, reading bucket).

    Readings are bucketed by the state label of the nearest dataset row;
    ``actions`` therefore has one row per state and one column per
    bucket.  The default construction plans on the state alone, so all
    columns agree.
    """

    actions: np.ndarray
    discount: float = DEFAULT_DISCOUNT
    values: np.ndarray | None = None

    def __post_init__(self):
        arr = np.asarray(self.actions, dtype=np.int64)
        object.__setattr__(self, "actions", arr)
        if arr.ndim != 2:
            raise ValueError("policy table must be (n_states, n_buckets)")
        if not 0.0 <= self.discount < 1.0:
            raise ValueError(f"discount must be in [0, 1), got {self.discount}")

    def action_for(self, state: int, bucket: int | None = None) -> int:
        if bucket is None:
            bucket = state
        return int(self.actions[state, bucket])


@dataclass
class PlanResult:
    policy: Policy
    values: np.ndarray
    residuals: np.ndarray
    sweeps: int


def value_iteration(
    trans: np.ndarray,
    rewards: np.ndarray,
    gamma: float = DEFAULT_DISCOUNT,
    tol: float = 1e-9,
    max_sweeps: int = 10_000,
):
    """Greedy policy and values for (A, S, S) dynamics and (S, A) rewards.

    Ties in the greedy extraction break toward the lowest input id.
    Raises ConvergenceError (carrying the final residual) if the sup-norm
    change has not dropped below tol within max_sweeps sweeps.
    """
    trans = np.ascontiguousarray(trans, dtype=float)
    rewards = np.ascontiguousarray(rewards, dtype=float)
    if not 0.0 <= gamma < 1.0:
        raise ValueError(f"discount must be in [0, 1), got {gamma}")
    values, residuals, sweeps = kernels.value_iteration(
        trans, rewards, gamma, tol, max_sweeps
    )
    residuals = residuals[:sweeps]
    if residuals[-1] > tol:
        raise ConvergenceError(
            f"value iteration residual {residuals[-1]:.3e} > {tol:.1e} "
            f"after {sweeps} sweeps",
            residual=float(residuals[-1]),
        )
    actions = kernels.greedy_actions(trans, rewards, gamma, values)
    return values, actions, residuals


def plan(
    model,
    observation_model,
    gamma: float = DEFAULT_DISCOUNT,
    tol: float = 1e-9,
    max_sweeps: int = 10_000,
    epsilon: float = 0.05,
) -> PlanResult:
    """Plan over the twin's own dynamics and stage rewards."""
    trans = np.stack([model.action_kernel(u) for u in range(model.n_actions)])
    rewards = build_reward_table(model, observation_model, epsilon)
    values, actions, residuals = value_iteration(trans, rewards, gamma, tol, max_sweeps)
    table = np.repeat(actions[:, None], model.n_states, axis=1)
    policy = Policy(actions=table, discount=gamma, values=values)
    return PlanResult(policy, values, residuals, len(residuals))


def reading_bucket(observation_model, obs) -> int:
    """State label of the dataset row nearest to a reading (z-scored)."""
    scale = np.sqrt(np.maximum(observation_model.variances.mean(axis=0), 1e-12))
    arr = (np.asarray(obs, dtype=float) - observation_model.means) / scale
    return int(np.argmin(np.sum(arr * arr, axis=1)))


@dataclass
class TrajectoryStep:
    belief: StateBelief
    action_probs: np.ndarray | None = None
    reward: RewardBreakdown | None = None


def predict_forward(
    model,
    observation_model,
    belief: StateBelief,
    policy: Policy,
    n_steps: int,
    observations=None,
    mode: str = "discrete",
    epsilon: float = 0.05,
) -> list[TrajectoryStep]:
    """Roll the belief forward under a policy without assimilation.

    Passing ``observations`` re-enables assimilation for each step, which
    turns the rollout back into a filtering pass.  The first entry holds
    the starting belief; n_steps = 0 returns just that.
    """
    if n_steps < 0:
        raise ValueError("cannot roll a negative number of steps")
    if observations is not None and len(observations) != n_steps:
        raise ValueError("need one observation per rollout step")
    steps = [TrajectoryStep(belief)]
    current = belief
    for t in range(n_steps):
        action_probs = np.zeros(model.n_actions)
        mixed = np.zeros(current.n_states)
        for s in np.nonzero(current.probs)[0]:
            s = int(s)
            u = policy.action_for(s, reading_bucket(observation_model, observation_model.means[s]))
            action_probs[u] += current.probs[s]
            mixed += current.probs[s] * model.action_kernel(u)[s]
        nxt = StateBelief(mixed / mixed.sum())
        if observations is not None:
            scores = observation_scores(observation_model, observations[t], mode)
            post = nxt.probs * scores
            total = post.sum()
            if total > 0.0:
                nxt = StateBelief(post / total)
            obs_for_reward = observations[t]
        else:
            obs_for_reward = observation_model.means[nxt.argmax()]
        reward = step_rewards(
            model,
            observation_model,
            nxt,
            model.action_scores(nxt.probs),
            obs_for_reward,
            epsilon,
        )
        steps.append(TrajectoryStep(nxt, action_probs, reward))
        current = nxt
    return steps
