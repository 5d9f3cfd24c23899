"""Hot numeric loops, JIT-compiled with numba unless disabled.

Each kernel is written once as a plain-numpy function (exported with a
``_py`` suffix) and compiled with ``numba.njit`` when available.  Setting
``TWINMEC_NO_NUMBA=1`` in the environment forces the interpreted path,
which produces identical results at reduced speed.  The script
``benchmarks/bench_kernels.py`` times both paths side by side.
"""

from __future__ import annotations

import os

import numpy as np


def value_iteration_py(trans, rewards, gamma, tol, max_sweeps):
    """Solve an infinite-horizon discounted MDP by synchronous sweeps.

    trans:   (A, S, S) row-stochastic transition matrices, one per action.
    rewards: (S, A) immediate rewards.
    Returns (values, residuals, n_sweeps); residuals[i] is the sup-norm
    change of sweep i and only the first n_sweeps entries are meaningful.
    """
    n_actions = trans.shape[0]
    n_states = trans.shape[1]
    values = np.zeros(n_states)
    residuals = np.zeros(max_sweeps)
    n_sweeps = 0
    for sweep in range(max_sweeps):
        new_values = np.empty(n_states)
        for s in range(n_states):
            best = -np.inf
            for a in range(n_actions):
                q = rewards[s, a]
                for s2 in range(n_states):
                    q += gamma * trans[a, s, s2] * values[s2]
                if q > best:
                    best = q
            new_values[s] = best
        residual = 0.0
        for s in range(n_states):
            diff = abs(new_values[s] - values[s])
            if diff > residual:
                residual = diff
        values = new_values
        residuals[sweep] = residual
        n_sweeps = sweep + 1
        if residual <= tol:
            break
    return values, residuals, n_sweeps


def greedy_actions_py(trans, rewards, gamma, values):
    """Extract the greedy policy for given state values (ties to lowest id)."""
    n_actions = trans.shape[0]
    n_states = trans.shape[1]
    actions = np.zeros(n_states, dtype=np.int64)
    for s in range(n_states):
        best = -np.inf
        best_a = 0
        for a in range(n_actions):
            q = rewards[s, a]
            for s2 in range(n_states):
                q += gamma * trans[a, s, s2] * values[s2]
            if q > best:
                best = q
                best_a = a
        actions[s] = best_a
    return actions


def forward_filter_py(kernels, logliks, init):
    """Run T propagate/assimilate steps of a discrete-state filter.

    kernels: (T, S, S) per-step transition matrices (row-stochastic).
    logliks: (T, S) log-likelihood of the observation at each step.
    init:    (S,) starting belief.
    Returns (beliefs, ok) where beliefs is (T, S) and ok[t] is False when
    the unnormalised posterior at step t summed to zero (the predicted
    belief is kept in that case).
    """
    n_steps = kernels.shape[0]
    n_states = kernels.shape[1]
    beliefs = np.zeros((n_steps, n_states))
    ok = np.ones(n_steps, dtype=np.bool_)
    belief = init.copy()
    for t in range(n_steps):
        pred = np.zeros(n_states)
        for s in range(n_states):
            b = belief[s]
            if b == 0.0:
                continue
            for s2 in range(n_states):
                pred[s2] += b * kernels[t, s, s2]
        top = -np.inf
        for s in range(n_states):
            if logliks[t, s] > top:
                top = logliks[t, s]
        post = np.zeros(n_states)
        total = 0.0
        for s in range(n_states):
            w = np.exp(logliks[t, s] - top) if top > -np.inf else 0.0
            post[s] = pred[s] * w
            total += post[s]
        if total <= 0.0:
            ok[t] = False
            post = pred
            total = 0.0
            for s in range(n_states):
                total += pred[s]
        for s in range(n_states):
            beliefs[t, s] = post[s] / total
        belief = beliefs[t].copy()
    return beliefs, ok


def mlp_forward_py(x, w1, b1, w2, b2, w3, b3):
    """Forward pass of a two-hidden-layer ReLU MLP; returns activations."""
    h1 = np.dot(x, w1) + b1
    h1 = np.maximum(h1, 0.0)
    h2 = np.dot(h1, w2) + b2
    h2 = np.maximum(h2, 0.0)
    out = np.dot(h2, w3) + b3
    return h1, h2, out


def mlp_backward_py(x, h1, h2, dout, w2, w3):
    """Backprop through the MLP given upstream gradient dout on the output."""
    dw3 = np.dot(h2.T, dout)
    db3 = dout.sum(axis=0)
    dh2 = np.dot(dout, w3.T)
    dh2 = dh2 * (h2 > 0.0)
    dw2 = np.dot(h1.T, dh2)
    db2 = dh2.sum(axis=0)
    dh1 = np.dot(dh2, w2.T)
    dh1 = dh1 * (h1 > 0.0)
    dw1 = np.dot(x.T, dh1)
    db1 = dh1.sum(axis=0)
    return dw1, db1, dw2, db2, dw3, db3


def sic_sinr_py(h_re, h_im, powers, order, noise):
    """Per-subsystem SINR under successive interference cancellation.

    h_re/h_im: (L, M) real and imaginary channel parts.
    order:     (M,) decode order, strongest first; subsystem order[i] sees
               residual interference from subsystems order[i+1:].
    """
    n_ant = h_re.shape[0]
    n_sub = h_re.shape[1]
    gains = np.zeros(n_sub)
    for m in range(n_sub):
        g = 0.0
        for l in range(n_ant):
            g += h_re[l, m] * h_re[l, m] + h_im[l, m] * h_im[l, m]
        gains[m] = g
    sinr = np.zeros(n_sub)
    for i in range(n_sub):
        m = order[i]
        interference = 0.0
        for j in range(i + 1, n_sub):
            n = order[j]
            dot_re = 0.0
            dot_im = 0.0
            for l in range(n_ant):
                dot_re += h_re[l, m] * h_re[l, n] + h_im[l, m] * h_im[l, n]
                dot_im += h_re[l, m] * h_im[l, n] - h_im[l, m] * h_re[l, n]
            proj = (dot_re * dot_re + dot_im * dot_im) / gains[m]
            interference += powers[n] * proj
        sinr[m] = powers[m] * gains[m] / (interference + noise)
    return sinr


def _want_numba() -> bool:
    flag = os.environ.get("TWINMEC_NO_NUMBA", "").strip().lower()
    return flag not in {"1", "true", "yes", "on"}


USING_NUMBA = False
if _want_numba():
    try:
        from numba import njit

        USING_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a hard dep, but be safe
        USING_NUMBA = False

if USING_NUMBA:
    value_iteration = njit(cache=True)(value_iteration_py)
    greedy_actions = njit(cache=True)(greedy_actions_py)
    forward_filter = njit(cache=True)(forward_filter_py)
    mlp_forward = njit(cache=True)(mlp_forward_py)
    mlp_backward = njit(cache=True)(mlp_backward_py)
    sic_sinr = njit(cache=True)(sic_sinr_py)
else:
    value_iteration = value_iteration_py
    greedy_actions = greedy_actions_py
    forward_filter = forward_filter_py
    mlp_forward = mlp_forward_py
    mlp_backward = mlp_backward_py
    sic_sinr = sic_sinr_py


def numba_version() -> str | None:
    """Version string of the active compiler, None on the fallback path."""
    if not USING_NUMBA:
        return None
    import numba

    return numba.__version__


def warmup():
    """Trigger JIT compilation of every kernel on tiny inputs."""
    trans = np.ones((1, 2, 2)) * 0.5
    rewards = np.zeros((2, 1))
    value_iteration(trans, rewards, 0.5, 1e-6, 4)
    greedy_actions(trans, rewards, 0.5, np.zeros(2))
    forward_filter(np.ones((1, 2, 2)) * 0.5, np.zeros((1, 2)), np.array([1.0, 0.0]))
    x = np.zeros((1, 2))
    w1 = np.zeros((2, 2))
    b1 = np.zeros(2)
    w3 = np.zeros((2, 1))
    h1, h2, out = mlp_forward(x, w1, b1, w1, b1, w3, np.zeros(1))
    mlp_backward(x, h1, h2, np.ones((1, 1)), w1, w3)
    sic_sinr(np.ones((1, 2)), np.zeros((1, 2)), np.ones(2), np.arange(2), 1.0)
