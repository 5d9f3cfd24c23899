"""Random network scenarios: geometry, channel, fleet, and task requests.

A scenario bundles everything physical that a resource-allocation slot
needs: one uplink channel realization shared by all subsystems, the
compute fleet, a small catalogue of task types, and the request state
saying which type (or none) each subsystem currently wants to run.
Because uplink rates and node capacities do not depend on who offloads
where, each subsystem's payoff for each destination can be tabulated
once per slot; the game and the learning agent both work from that
table.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelRealization, generate_channel
from .errors import EmptyConfigurationError
from .offload import ES_NODE, ComputeFleet, OffloadProfile, Task, utility

DEFAULT_AREA_M = 200.0
DEFAULT_ANTENNAS = 8
DEFAULT_BANDWIDTH_HZ = 10e6
DEFAULT_BLOCKLENGTH = 256
DEFAULT_EPS = 1e-9
DEFAULT_TX_POWER_W = 0.5
NOISE_DBM_PER_HZ = -174.0

# Six canonical task types as (input bits, cycles) anchors.  Types 1-3
# move a lot of data with a light compute load, so splitting the upload
# across two destinations can beat shipping everything to the edge
# server.  Types 4-6 are compute heavy at small size; within a 15 ms
# budget they are cheapest where they sit.  Scenario draws jitter the
# anchors so no two scenarios share exact task sizes.
TASK_TYPES = (
    (6.0e5, 6.0e6),
    (8.0e5, 1.0e7),
    (1.2e6, 1.5e7),
    (1.5e5, 3.0e8),
    (1.0e5, 6.0e8),
    (1.2e5, 1.0e9),
)

# Which catalogue a scenario carries: all six types, a data- or
# compute-heavy subset, or a single type (the task-type sweep axis).
TASK_PRESETS = {
    "default": (1, 2, 3, 4, 5, 6),
    "data": (1, 2, 3),
    "compute": (4, 5, 6),
    "type1": (1,),
    "type2": (2,),
    "type3": (3,),
    "type4": (4,),
    "type5": (5,),
    "type6": (6,),
}

IDLE = 0  # request id for "no task this slot"


def noise_power_w(bandwidth_hz: float) -> float:
    """Thermal noise power over the band at -174 dBm/Hz."""
    return 10.0 ** (NOISE_DBM_PER_HZ / 10.0) * 1e-3 * bandwidth_hz


def draw_task(
    rng: np.random.Generator,
    type_id: int,
    t_max_s: float = 0.015,
    jitter: float = 0.2,
) -> Task:
    """Sample one task near the anchor sizes of a canonical type (1-based)."""
    if not 1 <= type_id <= len(TASK_TYPES):
        raise EmptyConfigurationError(f"unknown task type {type_id!r}")
    bits, cycles = TASK_TYPES[type_id - 1]
    lo, hi = 1.0 - jitter, 1.0 + jitter
    return Task(
        input_bits=float(bits * rng.uniform(lo, hi)),
        cycles=float(cycles * rng.uniform(lo, hi)),
        t_max_s=t_max_s,
    )


@dataclass
class NetworkScenario:
    """One network's physical context plus the current request state."""

    task_catalogue: list
    requests: np.ndarray
    fleet: ComputeFleet
    channel: ChannelRealization
    rates_bps: np.ndarray
    latency_gain: float = 2.5
    task_preset: str = "default"
    _payoffs: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.requests = np.asarray(self.requests, dtype=int)
        if self.requests.min(initial=0) < 0 or self.requests.max(initial=0) > self.n_task_types:
            raise ValueError("request ids must lie in 0..n_task_types")
        self._idle_task = Task(0.0, 0.0, t_max_s=self.task_catalogue[0].t_max_s)

    @property
    def n_subsystems(self) -> int:
        return self.requests.shape[0]

    @property
    def n_cn(self) -> int:
        return self.fleet.n_cn

    @property
    def n_task_types(self) -> int:
        return len(self.task_catalogue)

    @property
    def n_request_states(self) -> int:
        """Task types plus the idle state."""
        return self.n_task_types + 1

    @property
    def n_strategies(self) -> int:
        """local, edge server, and one strategy per assisting node."""
        return self.n_cn + 2

    @property
    def tasks(self) -> list:
        """Current task per subsystem; idle subsystems get a zero task."""
        return [
            self._idle_task if r == IDLE else self.task_catalogue[r - 1]
            for r in self.requests
        ]

    def set_requests(self, requests) -> None:
        """Move to a new slot's request state and drop cached payoffs."""
        requests = np.asarray(requests, dtype=int)
        if requests.shape != self.requests.shape:
            raise ValueError("request vector must keep its length")
        if requests.min() < 0 or requests.max() > self.n_task_types:
            raise ValueError("request ids must lie in 0..n_task_types")
        self.requests = requests
        self._payoffs.clear()

    def step_requests(self, rng: np.random.Generator, persistence: float = 0.7) -> None:
        """Keep each request with the persistence probability, else redraw."""
        nxt = self.requests.copy()
        for m in range(self.n_subsystems):
            if rng.random() >= persistence:
                nxt[m] = rng.integers(self.n_request_states)
        self.set_requests(nxt)

    def request_one_hot(self) -> np.ndarray:
        """(M, F+1) one-hot encoding of the request state."""
        eye = np.eye(self.n_request_states)
        return eye[self.requests]

    def strategy_utility(
        self,
        m: int,
        node: int,
        lam: float,
        beta: float,
        enforce_cap: bool = True,
    ) -> float:
        """Utility of subsystem m choosing a destination node."""
        if node == -1:
            return 0.0
        if node == ES_NODE:
            profile = OffloadProfile(ES_NODE)
        else:
            profile = OffloadProfile(node, lam=lam, beta=beta)
        return utility(
            self.tasks[m],
            profile,
            self.fleet,
            float(self.rates_bps[m]),
            latency_gain=self.latency_gain,
            enforce_cap=enforce_cap,
        )

    def payoff_table(self, phi, beta, enforce_cap: bool = True) -> np.ndarray:
        """Per-subsystem utility of every destination, as an (M, K+2) array.

        Column 0 is the local (no offload) strategy, column 1 the edge
        server, column j+1 assisting node j.  phi[m] and beta[m] are the
        work and capacity shares subsystem m would use at an assisting
        node.  Infeasible entries are -inf.
        """
        phi = np.asarray(phi, dtype=float)
        beta = np.asarray(beta, dtype=float)
        key = (phi.tobytes(), beta.tobytes(), enforce_cap)
        cached = self._payoffs.get(key)
        if cached is not None:
            return cached
        m_count, k_count = self.n_subsystems, self.n_cn
        table = np.zeros((m_count, k_count + 2))
        for m in range(m_count):
            table[m, 1] = self.strategy_utility(m, ES_NODE, 1.0, 0.0, enforce_cap)
            for j in range(1, k_count + 1):
                table[m, j + 1] = self.strategy_utility(
                    m, j, float(phi[m]), float(beta[m]), enforce_cap
                )
        self._payoffs[key] = table
        return table

    def fingerprint(self) -> str:
        """Short stable hash of the scenario's numeric content."""
        digest = hashlib.sha256()
        for task in self.task_catalogue:
            digest.update(np.array([task.input_bits, task.cycles, task.t_max_s]).tobytes())
        digest.update(self.requests.tobytes())
        digest.update(self.fleet.cn_capacities_hz.tobytes())
        digest.update(np.array([self.fleet.es_capacity_hz, self.fleet.deviation]).tobytes())
        digest.update(self.channel.h.tobytes())
        digest.update(self.rates_bps.tobytes())
        return digest.hexdigest()[:16]


def generate_scenario(
    rng: np.random.Generator,
    n_subsystems: int,
    n_cn: int,
    area_m: float = DEFAULT_AREA_M,
    n_antennas: int = DEFAULT_ANTENNAS,
    tx_power_w: float = DEFAULT_TX_POWER_W,
    bandwidth_hz: float = DEFAULT_BANDWIDTH_HZ,
    blocklength: int = DEFAULT_BLOCKLENGTH,
    eps: float = DEFAULT_EPS,
    cn_capacity_range_hz=(1e9, 10e9),
    es_capacity_hz: float = 30e9,
    deviation: float = 0.02,
    task_preset: str = "default",
    t_max_s: float = 0.015,
    latency_gain: float = 2.5,
) -> NetworkScenario:
    """Draw a full scenario: placements, channel, fleet, tasks, requests."""
    if n_subsystems < 1 or n_cn < 1:
        raise EmptyConfigurationError("need at least one subsystem and one node")
    if task_preset not in TASK_PRESETS:
        raise EmptyConfigurationError(f"unknown task preset {task_preset!r}")
    positions = rng.uniform(0.0, area_m, size=(n_subsystems, 2))
    ap_position = np.array([area_m / 2.0, area_m / 2.0])
    channel = generate_channel(
        rng,
        positions,
        ap_position,
        n_antennas=n_antennas,
        tx_power_w=tx_power_w,
        noise_w=noise_power_w(bandwidth_hz),
        bandwidth_hz=bandwidth_hz,
        blocklength=blocklength,
        eps=eps,
        area_m=area_m,
    )
    rates = channel.rates()
    caps = rng.uniform(cn_capacity_range_hz[0], cn_capacity_range_hz[1], size=n_cn)
    fleet = ComputeFleet(caps, es_capacity_hz=es_capacity_hz, deviation=deviation)
    catalogue = [draw_task(rng, tid, t_max_s) for tid in TASK_PRESETS[task_preset]]
    requests = rng.integers(len(catalogue) + 1, size=n_subsystems)
    return NetworkScenario(
        task_catalogue=catalogue,
        requests=requests,
        fleet=fleet,
        channel=channel,
        rates_bps=rates,
        latency_gain=latency_gain,
        task_preset=task_preset,
    )
