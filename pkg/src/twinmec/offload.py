"""Computation offloading: tasks, split execution latencies, utilities.

A subsystem's task (I bits of input, C cycles of work) can be split
between one assisting compute node (share lam of the work) and the edge
server (share aleph = 1 - lam).  Each node's twin over-reports capacity
by a small deviation f_dev, so the latency actually incurred uses the
degraded rate f - f_dev while the twin's estimate uses f:

    estimated = lam * C / f
    gap       = lam * C * f_dev / (f * (f - f_dev))
    actual    = estimated + gap = lam * C / (f - f_dev)

The offloading utility rewards end-to-end latency saved relative to
running everything at the edge server, minus a price proportional to the
chosen node's capacity:

    U = g * (T_ref - T_e2e) - price * share * C

with C priced in gigacycles.  A profile that offloads nothing has
utility exactly zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import tx_latency
from .errors import ConstraintViolationError, InvalidTwinDeviationError

GIGA = 1e9

ES_NODE = 0  # strategy/node id of the edge server; assisting nodes are 1..K
LOCAL = -1  # no offloading at all


@dataclass(frozen=True)
class Task:
    """One offloadable workload."""

    input_bits: float
    cycles: float
    t_max_s: float = 0.015

    def __post_init__(self):
        if self.input_bits < 0.0 or self.cycles < 0.0:
            raise ValueError("task sizes must be non-negative")
        if self.t_max_s <= 0.0:
            raise ValueError("latency bound must be positive")

    @property
    def intensity(self) -> float:
        """Cycles of work per input bit."""
        return self.cycles / self.input_bits if self.input_bits > 0.0 else 0.0


@dataclass(frozen=True)
class ComputeFleet:
    """Edge server plus assisting in-network compute nodes."""

    cn_capacities_hz: np.ndarray
    es_capacity_hz: float = 30e9
    deviation: float = 0.02  # twin's capacity over-report, fraction of capacity
    price_per_10ghz: float = 0.1

    def __post_init__(self):
        caps = np.asarray(self.cn_capacities_hz, dtype=float)
        object.__setattr__(self, "cn_capacities_hz", caps)
        if np.any(caps <= 0.0) or self.es_capacity_hz <= 0.0:
            raise ValueError("capacities must be positive")
        if not 0.0 <= self.deviation < 1.0:
            raise InvalidTwinDeviationError(
                f"deviation must be in [0, 1), got {self.deviation}"
            )

    @property
    def n_cn(self) -> int:
        return self.cn_capacities_hz.shape[0]

    def node_capacity(self, node: int) -> float:
        """Capacity of strategy node id (0 = edge server, 1..K = CN)."""
        if node == ES_NODE:
            return self.es_capacity_hz
        if not 1 <= node <= self.n_cn:
            raise IndexError(f"node id {node} out of range")
        return float(self.cn_capacities_hz[node - 1])

    def price(self, node: int) -> float:
        """Per-gigacycle offloading price: 0.1 per 10 GHz of capacity."""
        return self.price_per_10ghz * self.node_capacity(node) / 10e9


def compute_latency(share: float, cycles: float, capacity_hz: float, deviation: float):
    """(estimated, gap, actual) processing times of a workload share.

    deviation is the twin's absolute capacity over-report in Hz; the
    node really delivers capacity - deviation.
    """
    if share < 0.0:
        raise ValueError(f"work share must be non-negative, got {share}")
    if share == 0.0:
        return 0.0, 0.0, 0.0
    if capacity_hz <= 0.0:
        raise ValueError(f"capacity must be positive, got {capacity_hz}")
    if deviation < 0.0 or deviation >= capacity_hz:
        raise InvalidTwinDeviationError(
            f"deviation {deviation} must lie in [0, capacity)"
        )
    estimated = share * cycles / capacity_hz
    gap = share * cycles * deviation / (capacity_hz * (capacity_hz - deviation))
    actual = share * cycles / (capacity_hz - deviation)
    return estimated, gap, actual


def cn_latency(task: Task, lam: float, capacity_hz: float, deviation_hz: float):
    """Assisting-node processing times for the lam share of the work."""
    return compute_latency(lam, task.cycles, capacity_hz, deviation_hz)


def es_latency(task: Task, aleph: float, capacity_hz: float, deviation_hz: float):
    """Edge-server processing times for the aleph share of the work."""
    return compute_latency(aleph, task.cycles, capacity_hz, deviation_hz)


@dataclass(frozen=True)
class OffloadProfile:
    """One subsystem's offloading decision for a slot.

    node: LOCAL (keep the task), ES_NODE, or an assisting node id 1..K.
    lam:  share of the work done at the assisting node; the edge server
          runs the remaining 1 - lam.  The transmission splits the input
          the same way.
    beta: fraction of the assisting node's capacity granted to this
          subsystem.
    """

    node: int
    lam: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        if self.node < LOCAL:
            raise ValueError(f"invalid node id {self.node}")
        if not 0.0 <= self.lam <= 1.0:
            raise ConstraintViolationError(
                f"work share must be in [0, 1], got {self.lam}", constraint="12a"
            )
        if not 0.0 <= self.beta <= 1.0:
            raise ConstraintViolationError(
                f"capacity share must be in [0, 1], got {self.beta}", constraint="12d"
            )

    @property
    def aleph(self) -> float:
        if self.node == LOCAL:
            return 0.0
        return 1.0 - self.lam if self.node != ES_NODE else 1.0


def e2e_latency(task: Task, profile: OffloadProfile, fleet: ComputeFleet, rate_bps: float) -> float:
    """Actual end-to-end latency of a profile: upload plus both compute legs."""
    if profile.node == LOCAL:
        return 0.0
    es_dev = fleet.deviation * fleet.es_capacity_hz
    if profile.node == ES_NODE:
        upload = tx_latency({"es": 1.0}, task.input_bits, {"es": rate_bps})
        _, _, es_actual = es_latency(task, 1.0, fleet.es_capacity_hz, es_dev)
        return upload + es_actual
    cn_cap = profile.beta * fleet.node_capacity(profile.node)
    if profile.lam > 0.0 and cn_cap <= 0.0:
        raise ConstraintViolationError(
            "assisting node share must be positive to run work there",
            constraint="12d",
        )
    upload = tx_latency(
        {"cn": profile.lam, "es": profile.aleph},
        task.input_bits,
        {"cn": rate_bps, "es": rate_bps},
    )
    cn_actual = 0.0
    if profile.lam > 0.0:
        _, _, cn_actual = cn_latency(task, profile.lam, cn_cap, fleet.deviation * cn_cap)
    _, _, es_actual = es_latency(task, profile.aleph, fleet.es_capacity_hz, es_dev)
    return cn_actual + upload + es_actual


def full_es_latency(task: Task, fleet: ComputeFleet, rate_bps: float) -> float:
    """Reference latency: the whole task shipped to the edge server."""
    return e2e_latency(task, OffloadProfile(ES_NODE), fleet, rate_bps)


def utility(
    task: Task,
    profile: OffloadProfile,
    fleet: ComputeFleet,
    rate_bps: float,
    latency_gain: float = 2.5,
    enforce_cap: bool = True,
) -> float:
    """Offloading utility of one subsystem's profile.

    Latency saved against the full-edge-server reference, valued at
    latency_gain, minus the chosen node's price for its share of the
    work.  Profiles that miss the task deadline are worth -inf when
    enforce_cap is set.  A LOCAL profile is worth exactly 0.
    """
    if profile.node == LOCAL:
        return 0.0
    if rate_bps <= 0.0:
        return float("-inf")
    try:
        latency = e2e_latency(task, profile, fleet, rate_bps)
    except ConstraintViolationError:
        return float("-inf")
    if enforce_cap and latency > task.t_max_s:
        return float("-inf")
    reference = full_es_latency(task, fleet, rate_bps)
    share = 1.0 if profile.node == ES_NODE else profile.lam
    cost = fleet.price(profile.node) * share * task.cycles / GIGA
    return latency_gain * (reference - latency) - cost


def check_profile(
    task: Task,
    profile: OffloadProfile,
    fleet: ComputeFleet,
    rate_bps: float,
    occupied_nodes=(),
    beta_total: float = 0.0,
) -> None:
    """Validate a profile against the feasibility constraints.

    Raises ConstraintViolationError tagged with the failing constraint:
    12a (shares sum to one), 12b (assisting node already serving another
    subsystem), 12c (deadline), 12d (capacity shares within budget).
    """
    if profile.node >= 1:
        if profile.node in occupied_nodes:
            raise ConstraintViolationError(
                f"node {profile.node} already serves another subsystem",
                constraint="12b",
            )
        if beta_total + profile.beta > 1.0 + 1e-12:
            raise ConstraintViolationError(
                f"capacity shares exceed the unit budget: {beta_total + profile.beta}",
                constraint="12d",
            )
    if profile.node != LOCAL:
        latency = e2e_latency(task, profile, fleet, rate_bps)
        if latency > task.t_max_s:
            raise ConstraintViolationError(
                f"end-to-end latency {latency:.4f}s exceeds {task.t_max_s}s",
                constraint="12c",
            )
