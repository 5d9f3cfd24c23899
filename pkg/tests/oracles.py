"""Independent reference computations used by the unit and acceptance tests.

Everything here is deliberately dumb: exact rational arithmetic, brute
enumeration, and library special functions.  Nothing imports the package
beyond plain constants, so agreement with the fast implementations is
meaningful evidence rather than a tautology.
"""

from fractions import Fraction
from itertools import product

import numpy as np


def rational_chain_kernels(stay: Fraction, n_states: int = 3):
    """Exact input-conditioned kernels of a forward-band chain.

    The band holds with probability ``stay`` and advances otherwise;
    input u enables the advance out of state u-1 only, every other state
    just holds.  The final state is absorbing.  Returns a dict
    action -> list of rows of Fractions, for actions 0..n_states.
    """
    advance = Fraction(1) - stay
    kernels = {}
    for u in range(n_states + 1):
        rows = []
        for s in range(n_states):
            row = [Fraction(0)] * n_states
            if s == n_states - 1:
                row[s] = Fraction(1)
            elif u == s + 1:
                row[s] = stay
                row[s + 1] = advance
            else:
                row[s] = Fraction(1)
            rows.append(row)
        kernels[u] = rows
    return kernels


def path_enumeration_posterior(prior, kernels, actions, likelihoods):
    """Filtering posterior by summing over every state path, exactly.

    prior: list of Fractions; kernels: action -> rows of Fractions;
    likelihoods[t][s]: Fraction score of the observation at step t for
    state s.  Returns the posterior after the last step as Fractions.
    """
    n = len(prior)
    steps = len(actions)
    total = [Fraction(0)] * n
    for path in product(range(n), repeat=steps + 1):
        weight = prior[path[0]]
        for t in range(steps):
            weight *= kernels[actions[t]][path[t]][path[t + 1]]
            weight *= likelihoods[t][path[t + 1]]
            if weight == 0:
                break
        else:
            total[path[-1]] += weight
    norm = sum(total)
    if norm == 0:
        raise ZeroDivisionError("all paths have zero weight")
    return [w / norm for w in total]


def enumerate_optimal_policy(trans, rewards, gamma):
    """Best deterministic policy of a small MDP by exhaustive enumeration.

    trans: (A, S, S) array, rewards: (S, A).  Each policy is evaluated
    exactly via the linear system (I - gamma * P_pi) v = r_pi.  Returns
    (best value vector, best policy tuple).
    """
    n_actions, n_states, _ = trans.shape
    best_v, best_pi = None, None
    for pi in product(range(n_actions), repeat=n_states):
        p = np.stack([trans[pi[s], s] for s in range(n_states)])
        r = np.array([rewards[s, pi[s]] for s in range(n_states)])
        v = np.linalg.solve(np.eye(n_states) - gamma * p, r)
        if best_v is None or np.all(v >= best_v - 1e-13):
            if best_v is None or np.any(v > best_v + 1e-13):
                best_v, best_pi = v, pi
    return best_v, best_pi


def q_tail_mpmath(x):
    """Gaussian tail probability via mpmath's complementary error function."""
    import mpmath

    return float(0.5 * mpmath.erfc(x / mpmath.sqrt(2)))


def finite_difference_gradient(fun, vec, h=1e-6):
    """Central finite differences of a scalar function of a flat vector."""
    vec = np.asarray(vec, dtype=float)
    grad = np.zeros_like(vec)
    for i in range(vec.size):
        up = vec.copy()
        dn = vec.copy()
        up[i] += h
        dn[i] -= h
        grad[i] = (fun(up) - fun(dn)) / (2.0 * h)
    return grad
