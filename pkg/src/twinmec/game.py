"""Best-response dynamics for the destination-assignment game.

Each subsystem picks one strategy: keep the task local, send it to the
edge server, or split it with one assisting node.  Payoffs come from a
precomputed (M, K+2) table, so a player's utility depends only on its
own column; the sum of utilities is therefore an exact potential, and
every unilateral improvement raises it by exactly the player's gain.

Coupling between players enters through feasibility only: an assisting
node serves at most one subsystem per slot, so a column occupied by
another player is off limits.  Strategies are column ids: 0 local,
1 edge server, j+1 assisting node j.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .errors import ConvergenceError, EmptyConfigurationError

LOCAL_STRATEGY = 0
ES_STRATEGY = 1

ARBITRATION_MODES = ("random", "roundrobin")


def potential(table: np.ndarray, strategies) -> float:
    """Sum of all players' payoffs under a joint strategy."""
    strategies = np.asarray(strategies, dtype=int)
    return float(table[np.arange(table.shape[0]), strategies].sum())


def occupied_nodes(strategies, skip: int = -1):
    """Set of CN strategy columns currently claimed by players other than skip."""
    taken = set()
    for m, s in enumerate(strategies):
        if m != skip and s >= 2:
            taken.add(int(s))
    return taken


def feasible_strategies(table: np.ndarray, strategies, m: int):
    """Columns player m may move to: anything not claimed by someone else."""
    taken = occupied_nodes(strategies, skip=m)
    return [s for s in range(table.shape[1]) if s not in taken]


def preference_order(n_strategies: int):
    """Tie-break order: edge server, then assisting nodes by id, then local."""
    return [ES_STRATEGY, *range(2, n_strategies), LOCAL_STRATEGY]


def best_response(table: np.ndarray, strategies, m: int):
    """(strategy, payoff) best available to player m, ties broken by preference."""
    taken = occupied_nodes(strategies, skip=m)
    best_s, best_u = None, -np.inf
    for s in preference_order(table.shape[1]):
        if s in taken:
            continue
        u = float(table[m, s])
        if u > best_u:
            best_s, best_u = s, u
    if best_s is None:
        raise EmptyConfigurationError(f"player {m} has no feasible strategy")
    return best_s, best_u


def initial_strategies(table: np.ndarray) -> np.ndarray:
    """Everyone starts at the edge server; players it would strand start local.

    An infinite-latency edge-server strategy has payoff -inf, and seating a
    player there would let later -inf terms mask real potential changes, so
    those players fall back to the always-feasible local strategy.
    """
    init = np.full(table.shape[0], ES_STRATEGY, dtype=int)
    init[~np.isfinite(table[:, ES_STRATEGY])] = LOCAL_STRATEGY
    return init


def improving_moves(table: np.ndarray, strategies):
    """All (player, strategy, gain) strict best-response improvements."""
    moves = []
    for m in range(table.shape[0]):
        s, u = best_response(table, strategies, m)
        gain = u - float(table[m, strategies[m]])
        if gain > 0.0:
            moves.append((m, s, gain))
    return moves


@dataclass(frozen=True)
class GameMove:
    """One applied best-response update."""

    iteration: int
    player: int
    old_strategy: int
    new_strategy: int
    gain: float
    potential: float

    def as_record(self) -> dict:
        return {
            "iter": self.iteration,
            "player": self.player,
            "from": self.old_strategy,
            "to": self.new_strategy,
            "gain": self.gain,
            "potential": self.potential,
        }


@dataclass
class GameResult:
    """Outcome of one best-response run."""

    strategies: np.ndarray
    potential: float
    trace: np.ndarray
    moves: list = field(default_factory=list)
    n_iterations: int = 0
    converged: bool = True


def run_game(
    table: np.ndarray,
    init=None,
    arbitration: str = "random",
    rng: np.random.Generator | None = None,
    max_iterations: int | None = None,
) -> GameResult:
    """Iterate single-player best responses until no one can improve.

    arbitration picks which of the currently improving players moves:
    "random" draws one with the provided generator, "roundrobin" scans
    players cyclically.  Raises ConvergenceError if the iteration budget
    (default 10 * M * (K + 1)) runs out with improvements still pending.
    """
    if arbitration not in ARBITRATION_MODES:
        raise ValueError(f"arbitration must be one of {ARBITRATION_MODES}")
    table = np.asarray(table, dtype=float)
    n_players, n_strategies = table.shape
    if init is None:
        strategies = initial_strategies(table)
    else:
        strategies = np.asarray(init, dtype=int).copy()
        if strategies.shape != (n_players,):
            raise ValueError("init must give one strategy per player")
    if max_iterations is None:
        max_iterations = 10 * n_players * (n_strategies - 1)
    if rng is None:
        rng = np.random.default_rng(0)

    trace = [potential(table, strategies)]
    moves: list[GameMove] = []
    cursor = 0
    for iteration in range(1, max_iterations + 1):
        pending = improving_moves(table, strategies)
        if not pending:
            return GameResult(
                strategies=strategies,
                potential=trace[-1],
                trace=np.asarray(trace),
                moves=moves,
                n_iterations=iteration - 1,
                converged=True,
            )
        if arbitration == "random":
            m, s, gain = pending[rng.integers(len(pending))]
        else:
            by_player = {m: (m, s, g) for m, s, g in pending}
            while cursor % n_players not in by_player:
                cursor += 1
            m, s, gain = by_player[cursor % n_players]
            cursor += 1
        old = int(strategies[m])
        strategies[m] = s
        phi = potential(table, strategies)
        moves.append(GameMove(iteration, m, old, s, gain, phi))
        trace.append(phi)
    if not improving_moves(table, strategies):
        return GameResult(
            strategies=strategies,
            potential=trace[-1],
            trace=np.asarray(trace),
            moves=moves,
            n_iterations=max_iterations,
            converged=True,
        )
    raise ConvergenceError(
        f"no equilibrium within {max_iterations} iterations",
        residual=float(len(improving_moves(table, strategies))),
    )


def equilibrium_violations(table: np.ndarray, strategies):
    """Players that could still strictly improve; empty at an equilibrium."""
    return improving_moves(table, strategies)


def admissible_profiles(table: np.ndarray):
    """All joint strategies with finite payoffs and no shared assisting node."""
    n_players, n_strategies = table.shape
    per_player = [
        [s for s in range(n_strategies) if np.isfinite(table[m, s])]
        for m in range(n_players)
    ]
    for joint in product(*per_player):
        cn_choices = [s for s in joint if s >= 2]
        if len(cn_choices) == len(set(cn_choices)):
            yield np.asarray(joint, dtype=int)


def verify_potential_identity(table: np.ndarray, rel_tol: float = 1e-9):
    """Exhaustively check potential change == deviating player's utility change.

    Enumerates every admissible joint strategy and every admissible
    unilateral deviation.  Returns (max relative error, checks done).
    Intended for small tables; the profile count grows as (K+2)^M.
    """
    table = np.asarray(table, dtype=float)
    worst = 0.0
    checked = 0
    for joint in admissible_profiles(table):
        phi = potential(table, joint)
        for m in range(table.shape[0]):
            taken = occupied_nodes(joint, skip=m)
            for s in range(table.shape[1]):
                if s == joint[m] or s in taken or not np.isfinite(table[m, s]):
                    continue
                deviated = joint.copy()
                deviated[m] = s
                d_phi = potential(table, deviated) - phi
                d_u = float(table[m, s] - table[m, joint[m]])
                scale = max(abs(d_phi), abs(d_u), 1.0)
                worst = max(worst, abs(d_phi - d_u) / scale)
                checked += 1
    return worst, checked
