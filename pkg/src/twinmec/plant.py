"""Plant startup data: anchor states, control inputs, and interpolation.

The startup procedure is described by a small table of anchor operating
points over six measured parameters:

    pl   pressurizer level               [%]
    rct  reactor coolant temperature     [deg F]
    rcp  reactor coolant pressure        [psig]
    sgp  steam generator pressure        [psig]
    sgl  steam generator level           [%]
    rp   reactor power                   [%]

A high-resolution dataset is produced by linear interpolation between
adjacent anchors; each interpolated row is assigned a digital-state label
(nearest anchor, except that rows whose reactor power exceeds the
hot-standby level are folded into the power-operation state).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidObservationError, InvalidResolutionError

PARAM_NAMES = ("pl", "rct", "rcp", "sgp", "sgl", "rp")
N_PARAMS = 6

# Anchor operating points for the five startup stages, in PARAM_NAMES order.
STARTUP_ANCHORS = np.array(
    [
        [100.0, 60.0, 27.0, 1.0, 100.0, 0.0],
        [100.0, 176.0, 27.0, 1.0, 60.0, 0.0],
        [20.0, 176.0, 156.0, 76.6, 100.0, 0.0],
        [50.0, 294.0, 157.0, 76.6, 50.0, 2.0],
        [50.0, 308.0, 157.0, 76.6, 50.0, 100.0],
    ]
)

BORON_INCREASE = "increase"
BORON_DECREASE = "decrease"

# Control input configurations: rod banks A-D, boron concentration
# direction, three feedwater pumps, three condensate pumps.
CONTROL_TABLE = (
    ((1, 1, 0, 0), BORON_INCREASE, (1, 0, 0), (1, 0, 0)),
    ((1, 1, 0, 0), BORON_INCREASE, (1, 0, 0), (1, 0, 0)),
    ((0, 1, 1, 0), BORON_INCREASE, (1, 0, 0), (1, 0, 0)),
    ((0, 0, 1, 1), BORON_INCREASE, (1, 0, 0), (1, 0, 0)),
    ((1, 1, 1, 1), BORON_DECREASE, (1, 1, 1), (1, 1, 1)),
)


@dataclass(frozen=True)
class ControlAction:
    """One discrete control input: rod banks, boron direction, pump states."""

    id: int
    rods: tuple[int, int, int, int]
    boron: str
    feed_pumps: tuple[int, int, int]
    cond_pumps: tuple[int, int, int]

    def __post_init__(self):
        if self.id < 0:
            raise ValueError(f"action id must be non-negative, got {self.id}")
        if self.boron not in (BORON_INCREASE, BORON_DECREASE):
            raise ValueError(f"unknown boron direction {self.boron!r}")
        for bits in (self.rods, self.feed_pumps, self.cond_pumps):
            if any(b not in (0, 1) for b in bits):
                raise ValueError(f"pump/rod states must be 0/1 bits, got {bits}")


def build_control_actions(n_actions: int = 6) -> list[ControlAction]:
    """Control inputs u_0..u_{n-1}; ids beyond the table reuse its last row."""
    if n_actions < 1:
        raise ValueError("need at least one control action")
    actions = []
    for i in range(n_actions):
        rods, boron, feed, cond = CONTROL_TABLE[min(i, len(CONTROL_TABLE) - 1)]
        actions.append(ControlAction(i, rods, boron, feed, cond))
    return actions


@dataclass(frozen=True)
class ObservationVector:
    """A single six-parameter plant reading."""

    pl: float
    rct: float
    rcp: float
    sgp: float
    sgl: float
    rp: float

    def as_array(self) -> np.ndarray:
        return np.array([self.pl, self.rct, self.rcp, self.sgp, self.sgl, self.rp])

    @classmethod
    def from_array(cls, values) -> "ObservationVector":
        arr = np.asarray(values, dtype=float)
        if arr.shape != (N_PARAMS,):
            raise InvalidObservationError(
                f"observation must have {N_PARAMS} entries, got shape {arr.shape}"
            )
        return cls(*arr.tolist())

    def require_finite(self) -> None:
        arr = self.as_array()
        if not np.all(np.isfinite(arr)):
            raise InvalidObservationError(f"non-finite observation entries: {arr}")


def as_observation_array(obs) -> np.ndarray:
    """Accept an ObservationVector or a length-6 array; validate finiteness."""
    if isinstance(obs, ObservationVector):
        obs.require_finite()
        return obs.as_array()
    arr = np.asarray(obs, dtype=float)
    if arr.shape != (N_PARAMS,):
        raise InvalidObservationError(
            f"observation must have {N_PARAMS} entries, got shape {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise InvalidObservationError(f"non-finite observation entries: {arr}")
    return arr


@dataclass(frozen=True)
class PlantStateTable:
    """Anchor rows plus the interpolation resolution between adjacent rows."""

    anchors: np.ndarray = field(default_factory=lambda: STARTUP_ANCHORS.copy())
    n_steps: int = 10

    def __post_init__(self):
        anchors = np.asarray(self.anchors, dtype=float)
        object.__setattr__(self, "anchors", anchors)
        if anchors.ndim != 2 or anchors.shape[1] != N_PARAMS:
            raise ValueError(f"anchor table must be (n, {N_PARAMS}), got {anchors.shape}")
        if anchors.shape[0] < 2:
            raise ValueError("need at least two anchor rows to interpolate")
        if self.n_steps < 1:
            raise InvalidResolutionError(
                f"interpolation resolution must be >= 1, got {self.n_steps}"
            )
        rp = anchors[:, PARAM_NAMES.index("rp")]
        if rp[-1] < rp[-2]:
            raise ValueError("reactor power must not decrease over the final segment")

    @property
    def n_anchors(self) -> int:
        return self.anchors.shape[0]


def interpolate_pair(table: PlantStateTable, pair_index: int) -> np.ndarray:
    """Rows for steps s = 0..n between anchors pair_index and pair_index+1."""
    if not 0 <= pair_index < table.n_anchors - 1:
        raise IndexError(f"pair index {pair_index} out of range")
    lo = table.anchors[pair_index]
    hi = table.anchors[pair_index + 1]
    fracs = np.arange(table.n_steps + 1) / table.n_steps
    return lo[None, :] + fracs[:, None] * (hi - lo)[None, :]


def build_dataset(
    table: PlantStateTable, rp_threshold: float = 2.0
) -> tuple[np.ndarray, np.ndarray]:
    """Interpolated dataset and per-row digital-state labels.

    Rows are the deduplicated union of all pairwise interpolations
    ((n_anchors - 1) * n_steps + 1 rows).  A row in segment i at fraction
    f gets label i for f < 0.5 and i + 1 otherwise, except that any row
    with reactor power above ``rp_threshold`` belongs to the
    power-operation state (the last anchor's label): power escalation is
    what distinguishes that stage, not geometric proximity.
    """
    rows = []
    labels = []
    power_label = table.n_anchors - 1
    rp_col = PARAM_NAMES.index("rp")
    for seg in range(table.n_anchors - 1):
        pair_rows = interpolate_pair(table, seg)
        last = table.n_steps if seg == table.n_anchors - 2 else table.n_steps - 1
        for s in range(last + 1):
            frac = s / table.n_steps
            label = seg if frac < 0.5 else seg + 1
            if pair_rows[s, rp_col] > rp_threshold:
                label = power_label
            rows.append(pair_rows[s])
            labels.append(label)
    return np.array(rows), np.array(labels, dtype=np.int64)


def operational_envelope(rows: np.ndarray, margin: float = 0.0) -> np.ndarray:
    """Per-parameter [min, max] bounds over a dataset, widened by margin.

    margin is a fraction of each parameter's span.
    """
    lo = rows.min(axis=0)
    hi = rows.max(axis=0)
    span = hi - lo
    return np.stack([lo - margin * span, hi + margin * span])


def check_operational_constraints(obs, operational_bounds, safety_bounds=None) -> bool:
    """True when the reading sits inside the operational (and safety) bounds."""
    arr = as_observation_array(obs)
    bounds = [operational_bounds]
    if safety_bounds is not None:
        bounds.append(safety_bounds)
    for b in bounds:
        b = np.asarray(b, dtype=float)
        if np.any(arr < b[0]) or np.any(arr > b[1]):
            return False
    return True
