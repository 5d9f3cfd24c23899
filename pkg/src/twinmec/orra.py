"""Learning work-split and capacity-share ratios for offloading slots.

Each subsystem's agent head sees the flattened one-hot request matrix
of the whole network and picks a point on an 11 x 11 grid: the share
of its task to run at an assisting node (phi) and the fraction of that
node's capacity to request (beta).  Requested capacity shares are
projected onto the common budget by proportional scaling whenever they
sum past one, so asking for a lot when others also ask yields little.
The best-response game then assigns destinations given those ratios.

Training reward is the summed improvement of each subsystem's assigned
strategy over shipping its whole task to the edge server, the fixed
reference that full offloading conventionally means here.  The training
game enforces the latency deadline, exactly like the evaluation metric;
a deadline miss at the assigned profile (possible when callers hand
slot_reward strategies from a relaxed game) contributes a penalty
proportional to the full-offload stake instead of a saving.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .agent import DoubleQTrainer, epsilon_at
from .errors import EmptyConfigurationError
from .game import run_game
from .offload import ES_NODE, OffloadProfile, e2e_latency
from .scenario import NetworkScenario

N_GRID = 11
PENALTY_SCALE = 10.0
TASK_PERSISTENCE = 0.7

EVAL_MODES = ("ddqn", "rand", "mec")


def action_grids(n_grid: int = N_GRID):
    """The shared phi and beta grids, both uniform on [0, 1]."""
    grid = np.linspace(0.0, 1.0, n_grid)
    return grid, grid.copy()


def decode_actions(actions, n_grid: int = N_GRID):
    """Map per-subsystem grid indices to (phi, beta) arrays with projection."""
    actions = np.asarray(actions, dtype=int)
    phi_grid, beta_grid = action_grids(n_grid)
    phi = phi_grid[actions // n_grid]
    beta = beta_grid[actions % n_grid].copy()
    total = beta.sum()
    if total > 1.0:
        beta /= total
    return phi, beta


def full_offload_utility(scenario: NetworkScenario, m: int) -> float:
    """Utility of shipping the whole task to the edge server, deadline ignored.

    This is the reward's fixed reference.  Anchoring it to the
    conventional full-offload destination keeps it independent of the
    current allocation: a reference at the game-chosen node would pay a
    bounty equal to how bad full offloading happens to be there, and the
    learned optimum becomes parking zero-work splits at slow nodes.
    """
    ref = scenario.strategy_utility(m, ES_NODE, 1.0, 0.0, enforce_cap=False)
    return ref if np.isfinite(ref) else 0.0


def slot_reward(scenario: NetworkScenario, phi, beta, strategies, table) -> float:
    """Training reward: per-subsystem savings over full edge-server offloading.

    A subsystem whose assigned profile misses its deadline contributes a
    penalty scaled to its full-offload stake instead of a saving.
    """
    total = 0.0
    for m, strategy in enumerate(strategies):
        strategy = int(strategy)
        reference = full_offload_utility(scenario, m)
        node = strategy - 1
        if node >= 0:
            if node == ES_NODE:
                profile = OffloadProfile(ES_NODE)
            else:
                profile = OffloadProfile(node, lam=float(phi[m]), beta=float(beta[m]))
            rate = float(scenario.rates_bps[m])
            latency = e2e_latency(scenario.tasks[m], profile, scenario.fleet, rate)
            if latency > scenario.tasks[m].t_max_s:
                total -= PENALTY_SCALE * abs(reference)
                continue
        total += float(table[m, strategy]) - reference
    return total


def allocation_welfare(
    scenario: NetworkScenario,
    phi,
    beta,
    arbitration: str = "roundrobin",
    rng: np.random.Generator | None = None,
) -> float:
    """Equilibrium welfare of an allocation under the deadline-enforcing game."""
    table = scenario.payoff_table(phi, beta, enforce_cap=True)
    return run_game(table, arbitration=arbitration, rng=rng).potential


def mec_only_welfare(
    scenario: NetworkScenario,
    arbitration: str = "roundrobin",
    rng: np.random.Generator | None = None,
) -> float:
    """Welfare when no assisting nodes exist: local versus edge server only."""
    zeros = np.zeros(scenario.n_subsystems)
    table = scenario.payoff_table(zeros, zeros, enforce_cap=True)[:, :2]
    return run_game(table, arbitration=arbitration, rng=rng).potential


class OrraEnv:
    """Slot-by-slot allocation episodes over one network scenario.

    Observations are the flattened one-hot request matrix, shared by all
    subsystem heads.  Round-robin arbitration keeps the slot reward a
    deterministic function of (requests, actions), which removes one
    noise source from the value targets.
    """

    def __init__(
        self,
        scenario: NetworkScenario,
        rng: np.random.Generator,
        slots_per_episode: int = 25,
        task_persistence: float = TASK_PERSISTENCE,
        n_grid: int = N_GRID,
        arbitration: str = "roundrobin",
    ):
        self.scenario = scenario
        self.rng = rng
        self.slots_per_episode = slots_per_episode
        self.task_persistence = task_persistence
        self.n_grid = n_grid
        self.arbitration = arbitration
        self.slot = 0

    @property
    def n_actions(self) -> int:
        return self.n_grid * self.n_grid

    @property
    def n_features(self) -> int:
        return self.scenario.n_subsystems * self.scenario.n_request_states

    def reset(self) -> np.ndarray:
        self.slot = 0
        self.scenario.set_requests(
            self.rng.integers(
                self.scenario.n_request_states, size=self.scenario.n_subsystems
            )
        )
        return self.scenario.request_one_hot().ravel()

    def step(self, actions):
        """Apply one slot's allocation; returns (obs, reward, done, info).

        The assignment game runs with deadlines enforced, matching the
        evaluation metric.  A relaxed-deadline game instead seats
        hopeless tasks at assisting nodes (a zero-utility tie), and the
        reward's infeasibility penalty then punishes seating artifacts
        rather than the agent's allocation.
        """
        phi, beta = decode_actions(actions, self.n_grid)
        table = self.scenario.payoff_table(phi, beta, enforce_cap=True)
        result = run_game(table, arbitration=self.arbitration, rng=self.rng)
        reward = slot_reward(self.scenario, phi, beta, result.strategies, table)
        info = {
            "phi": phi,
            "beta": beta,
            "strategies": result.strategies.copy(),
            "potential": result.potential,
            "n_iterations": result.n_iterations,
        }
        self.slot += 1
        done = self.slot >= self.slots_per_episode
        self.scenario.step_requests(self.rng, self.task_persistence)
        return self.scenario.request_one_hot().ravel(), reward, done, info


def validation_welfare(
    scenario: NetworkScenario,
    trainer: DoubleQTrainer,
    n_slots: int = 40,
    n_grid: int = N_GRID,
    seed: int = 1,
) -> float:
    """Greedy-policy welfare on a fixed held-out request stream.

    The scenario's live request state is restored afterwards, so this is
    safe to call between training episodes.
    """
    saved = scenario.requests.copy()
    rng = np.random.default_rng(seed)
    scenario.set_requests(
        rng.integers(scenario.n_request_states, size=scenario.n_subsystems)
    )
    out = evaluate_modes(
        scenario, trainer, rng, n_slots=n_slots, n_grid=n_grid, modes=("ddqn",)
    )
    scenario.set_requests(saved)
    return out["ddqn"]


@dataclass
class TrainResult:
    """Trained agent plus per-episode learning curves.

    episode arrays cover the episodes this call actually ran
    (start_episode..n_episodes-1).  final_state holds the parameters as
    they stood when training stopped, before any best-validation reload;
    a checkpoint wanting to resume training later needs those, while the
    returned trainer carries best_state when keep_best is set.
    """

    trainer: DoubleQTrainer
    episode_returns: np.ndarray
    episode_losses: np.ndarray
    losses: np.ndarray
    epsilons: np.ndarray
    n_episodes: int
    stop_episode: int
    slots_per_episode: int
    validations: list
    best_welfare: float
    final_state: dict | None = None
    best_state: dict | None = None


def train_agent(
    scenario: NetworkScenario,
    rng: np.random.Generator,
    n_episodes: int = 120,
    slots_per_episode: int = 25,
    n_grid: int = N_GRID,
    task_persistence: float = TASK_PERSISTENCE,
    arbitration: str = "roundrobin",
    lr: float = 1e-3,
    gamma: float = 0.9,
    batch_size: int = 64,
    buffer_capacity: int = 10000,
    target_refresh: int = 200,
    hidden=(64, 64),
    trainer: DoubleQTrainer | None = None,
    validate_every: int = 0,
    keep_best: bool = True,
    start_episode: int = 0,
    stop_episode: int | None = None,
    best_welfare: float = -np.inf,
    best_state: dict | None = None,
) -> TrainResult:
    """Run the full training loop on one scenario and return the agent.

    Every `validate_every` episodes (0 picks a spacing of about 20
    checkpoints per run) the greedy policy is scored on a held-out
    request stream; with `keep_best` the returned agent carries the
    parameters of the best validation point rather than the last.

    An interrupted run (stop_episode before n_episodes) resumes by
    passing the saved trainer (with its replay buffer and generator
    state restored), start_episode, and the best-validation pair;
    exploration and validation schedules key off the absolute episode
    index and the total n_episodes, so the continued run matches an
    uninterrupted one step for step.
    """
    if n_episodes < 1:
        raise EmptyConfigurationError("need at least one training episode")
    stop = n_episodes if stop_episode is None else min(stop_episode, n_episodes)
    if not 0 <= start_episode < stop:
        raise EmptyConfigurationError(
            f"start episode {start_episode} outside 0..{stop - 1}"
        )
    if validate_every <= 0:
        validate_every = max(1, n_episodes // 20)
    env = OrraEnv(
        scenario,
        rng,
        slots_per_episode=slots_per_episode,
        task_persistence=task_persistence,
        n_grid=n_grid,
        arbitration=arbitration,
    )
    if trainer is None:
        trainer = DoubleQTrainer(
            scenario.n_subsystems,
            env.n_features,
            env.n_actions,
            hidden=hidden,
            lr=lr,
            gamma=gamma,
            batch_size=batch_size,
            buffer_capacity=buffer_capacity,
            target_refresh=target_refresh,
            rng=rng,
        )
    n_run = stop - start_episode
    returns = np.zeros(n_run)
    ep_losses = np.full(n_run, np.nan)
    epsilons = np.zeros(n_run)
    losses = []
    validations = []
    for episode in range(start_episode, stop):
        i = episode - start_episode
        eps = epsilon_at(episode, n_episodes)
        epsilons[i] = eps
        obs = env.reset()
        ep_return = 0.0
        ep_loss_sum, ep_loss_n = 0.0, 0
        done = False
        while not done:
            actions = trainer.act(obs, eps, rng)
            next_obs, reward, done, _ = env.step(actions)
            trainer.remember(obs, actions, reward, next_obs, done)
            loss = trainer.train_step(rng)
            if loss is not None:
                losses.append(loss)
                ep_loss_sum += loss
                ep_loss_n += 1
            obs = next_obs
            ep_return += reward
        returns[i] = ep_return
        if ep_loss_n:
            ep_losses[i] = ep_loss_sum / ep_loss_n
        last = episode == n_episodes - 1
        if (episode + 1) % validate_every == 0 or last:
            welfare = validation_welfare(scenario, trainer, n_grid=n_grid)
            validations.append((episode, welfare))
            if welfare > best_welfare:
                best_welfare = welfare
                best_state = trainer.state_dict()
    final_state = trainer.state_dict()
    if keep_best and best_state is not None:
        trainer.load_state_dict(best_state)
    return TrainResult(
        trainer=trainer,
        episode_returns=returns,
        episode_losses=ep_losses,
        losses=np.asarray(losses),
        epsilons=epsilons,
        n_episodes=n_episodes,
        stop_episode=stop,
        slots_per_episode=slots_per_episode,
        validations=validations,
        best_welfare=best_welfare,
        final_state=final_state,
        best_state=best_state,
    )


def evaluate_modes(
    scenario: NetworkScenario,
    trainer: DoubleQTrainer | None,
    rng: np.random.Generator,
    n_slots: int = 40,
    n_grid: int = N_GRID,
    task_persistence: float = TASK_PERSISTENCE,
    arbitration: str = "roundrobin",
    modes=EVAL_MODES,
) -> dict:
    """Mean equilibrium welfare of each allocation mode on a shared request stream.

    All modes see the identical request sequence, so per-seed results
    can be compared pairwise.  "ddqn" uses the trained agent greedily,
    "rand" draws uniform grid actions, "mec" disables assisting nodes
    entirely.
    """
    if "ddqn" in modes and trainer is None:
        raise EmptyConfigurationError("ddqn evaluation needs a trained agent")
    totals = {mode: 0.0 for mode in modes}
    greedy_rng = np.random.default_rng(0)  # epsilon is 0, never consulted for ddqn
    for _ in range(n_slots):
        obs = scenario.request_one_hot().ravel()
        for mode in modes:
            if mode == "ddqn":
                actions = trainer.act(obs, 0.0, greedy_rng)
                phi, beta = decode_actions(actions, n_grid)
                totals[mode] += allocation_welfare(scenario, phi, beta, arbitration)
            elif mode == "rand":
                actions = rng.integers(n_grid * n_grid, size=scenario.n_subsystems)
                phi, beta = decode_actions(actions, n_grid)
                totals[mode] += allocation_welfare(scenario, phi, beta, arbitration)
            elif mode == "mec":
                totals[mode] += mec_only_welfare(scenario, arbitration)
            else:
                raise ValueError(f"unknown evaluation mode {mode!r}")
        scenario.step_requests(rng, task_persistence)
    return {mode: total / n_slots for mode, total in totals.items()}
