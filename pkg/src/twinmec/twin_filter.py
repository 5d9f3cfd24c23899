"""Belief filtering for the startup twin: propagate, assimilate, queries.

The belief is a probability vector over the digital states.  A filter
step propagates it through the control-conditioned transition kernel and
assimilates the current plant reading; diagnostic probability queries
report how much mass the model put on the realized step.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DegenerateEvidenceError
from .twin_model import ObservationModel, TransitionModel

logger = logging.getLogger(__name__)

BELIEF_TOL = 1e-9

# Likelihood modes for assimilation: bounded row-normalised conditionals
# (default) or raw density products.
MODE_DISCRETE = "discrete"
MODE_DENSITY = "density"


@dataclass(frozen=True)
class StateBelief:
    """Normalised probability vector over the digital states."""

    probs: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.probs, dtype=float)
        object.__setattr__(self, "probs", arr)
        if arr.ndim != 1:
            raise ValueError("belief must be a vector")
        if np.any(arr < -BELIEF_TOL):
            raise ValueError(f"belief has negative entries: {arr}")
        if abs(arr.sum() - 1.0) > BELIEF_TOL:
            raise ValueError(f"belief must sum to 1 within {BELIEF_TOL}, got {arr.sum()}")

    @classmethod
    def uniform(cls, n: int) -> "StateBelief":
        return cls(np.full(n, 1.0 / n))

    @classmethod
    def point(cls, n: int, state: int) -> "StateBelief":
        probs = np.zeros(n)
        probs[state] = 1.0
        return cls(probs)

    @property
    def n_states(self) -> int:
        return self.probs.shape[0]

    def argmax(self) -> int:
        return int(np.argmax(self.probs))

    def entropy(self) -> float:
        """Shannon entropy in bits."""
        p = self.probs[self.probs > 0.0]
        return float(-np.sum(p * np.log2(p)))


def propagate(model: TransitionModel, belief: StateBelief, action: int) -> StateBelief:
    """Predict the next-step belief under a control input."""
    kernel = model.action_kernel(action)
    return StateBelief(belief.probs @ kernel)


def assimilate(belief: StateBelief, likelihood: np.ndarray) -> StateBelief:
    """Condition a belief on an observation likelihood vector.

    Raises DegenerateEvidenceError when every posterior entry is zero;
    callers that prefer to continue can fall back to the prior.
    """
    likelihood = np.asarray(likelihood, dtype=float)
    if likelihood.shape != belief.probs.shape:
        raise ValueError("likelihood and belief dimensions differ")
    post = belief.probs * likelihood
    total = post.sum()
    if total <= 0.0:
        raise DegenerateEvidenceError(
            "all-zero posterior; observation is incompatible with the belief support"
        )
    return StateBelief(post / total)


def observation_scores(
    observation_model: ObservationModel, obs, mode: str = MODE_DISCRETE
) -> np.ndarray:
    """Likelihood vector for an observation in the configured mode."""
    if mode == MODE_DISCRETE:
        return observation_model.row_conditional(obs)
    if mode == MODE_DENSITY:
        logs = observation_model.log_likelihood_vector(obs)
        top = logs.max()
        if top == -np.inf:
            return np.zeros_like(logs)
        # Constant rescaling keeps the posterior unchanged while avoiding
        # underflow of the raw density product.
        return np.exp(logs - top)
    raise ValueError(f"unknown likelihood mode {mode!r}")


def step_update(
    model: TransitionModel,
    observation_model: ObservationModel,
    belief: StateBelief,
    action: int,
    obs,
    mode: str = MODE_DISCRETE,
) -> StateBelief:
    """One filter step: propagate under the input, then assimilate."""
    predicted = propagate(model, belief, action)
    return assimilate(predicted, observation_scores(observation_model, obs, mode))


def filter_sequence(
    model: TransitionModel,
    observation_model: ObservationModel,
    init: StateBelief,
    actions,
    observations,
    mode: str = MODE_DISCRETE,
) -> list[StateBelief]:
    """Run a fixed action/observation sequence through the filter.

    Uses the compiled forward-filter kernel; a step whose evidence is
    incompatible with the propagated belief keeps the prediction and logs
    a warning instead of raising.
    """
    actions = list(actions)
    observations = list(observations)
    if len(actions) != len(observations):
        raise ValueError("need one action per observation")
    n_steps = len(actions)
    n_states = init.n_states
    stack = np.empty((n_steps, n_states, n_states))
    logliks = np.empty((n_steps, n_states))
    for t, (action, obs) in enumerate(zip(actions, observations)):
        stack[t] = model.action_kernel(action)
        scores = observation_scores(observation_model, obs, mode)
        with np.errstate(divide="ignore"):
            logliks[t] = np.log(scores)
    beliefs, ok = kernels.forward_filter(stack, logliks, init.probs)
    for t in range(n_steps):
        if not ok[t]:
            logger.warning("degenerate evidence at step %d; kept predicted belief", t)
    return [StateBelief(beliefs[t]) for t in range(n_steps)]


def discrepancy(asserted: StateBelief, predicted: StateBelief) -> float:
    """Total variation distance between two beliefs."""
    if asserted.n_states != predicted.n_states:
        raise ValueError("belief dimensions differ")
    return 0.5 * float(np.abs(asserted.probs - predicted.probs).sum())


def select_action_min_discrepancy(
    model: TransitionModel,
    belief: StateBelief,
    target: StateBelief,
    constraint=None,
) -> int:
    """Control input whose predicted belief is closest to a target belief.

    ``constraint`` optionally maps a predicted belief to a bool; inputs
    whose prediction fails it are skipped (unless every input fails, in
    which case the unconstrained minimiser is returned).
    """
    best, best_gap = None, np.inf
    fallback, fallback_gap = 0, np.inf
    for action in range(model.n_actions):
        predicted = propagate(model, belief, action)
        gap = discrepancy(target, predicted)
        if gap < fallback_gap:
            fallback, fallback_gap = action, gap
        if constraint is not None and not constraint(predicted):
            continue
        if gap < best_gap:
            best, best_gap = action, gap
    return fallback if best is None else best


def state_queries(
    model: TransitionModel,
    observation_model: ObservationModel,
    prev_state: int,
    state: int,
    action: int,
    obs,
) -> dict[str, float]:
    """Factor-product probabilities of the realized state transition.

    prior:       band transition mass alone.
    full:        input-conditioned transition mass times the reading's
                 row-normalised score at the reached state.
    pair:        band transition mass times the same observation score.
    """
    row_cond = observation_model.row_conditional(obs)
    return {
        "prior": float(model.matrix[prev_state, state]),
        "full": float(model.action_kernel(action)[prev_state, state] * row_cond[state]),
        "pair": float(model.matrix[prev_state, state] * row_cond[state]),
    }


def observation_queries(
    model: TransitionModel,
    observation_model: ObservationModel,
    prev_state: int,
    state: int,
    obs,
    prev_obs=None,
) -> dict[str, float]:
    """Factor-product probabilities of the realized reading.

    current:    row-normalised score at the current state.
    pair:       score at the current state gated by the realized band move.
    posterior:  score averaged under the one-step predictive from the
                previous state.
    lagged:     like ``posterior`` but zeroed when the previous reading was
                already outside the model's row set.
    ahead:      one-step-ahead predictive score of the same reading.
    """
    row_cond = observation_model.row_conditional(obs)
    predictive = model.matrix[prev_state] @ row_cond
    ahead = model.matrix[state] @ row_cond
    lagged = float(predictive)
    if prev_obs is not None and observation_model.observation_prior(prev_obs) == 0.0:
        lagged = 0.0
    return {
        "current": float(row_cond[state]),
        "pair": float(model.matrix[prev_state, state] * row_cond[state]),
        "posterior": float(predictive),
        "lagged": lagged,
        "ahead": float(ahead),
    }
