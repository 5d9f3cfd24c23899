"""Run configuration: defaults, JSON loading, validation, stable hashing.

A run is described by four sections (twin, scenario, game, train) plus a
seed.  JSON files may set any subset of fields; everything else keeps
its default.  Unknown sections or fields are rejected with the full
field path so typos do not silently fall back to defaults.  The
canonical hash of a configuration is embedded in output files so runs
can be matched to their settings later.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace

from .errors import ConfigSchemaError
from .game import ARBITRATION_MODES
from .scenario import TASK_PRESETS
from .twin_filter import MODE_DENSITY, MODE_DISCRETE


@dataclass(frozen=True)
class TwinConfig:
    """Reactor-startup twin run settings."""

    n_operation_steps: int = 8
    observation_noise: float = 0.0
    discount: float = 0.6
    assimilation: str = MODE_DISCRETE


@dataclass(frozen=True)
class ScenarioConfig:
    """Network scenario generation settings."""

    n_subsystems: int = 8
    n_cn: int = 6
    area_m: float = 200.0
    n_antennas: int = 8
    bandwidth_hz: float = 10e6
    blocklength: int = 256
    eps: float = 1e-9
    tx_power_w: float = 0.5
    cn_capacity_min_hz: float = 1e9
    cn_capacity_max_hz: float = 10e9
    es_capacity_hz: float = 30e9
    deviation: float = 0.02
    task_preset: str = "default"
    t_max_s: float = 0.015
    latency_gain: float = 2.5


@dataclass(frozen=True)
class GameConfig:
    """Best-response dynamics settings."""

    arbitration: str = "random"
    max_iterations: int = 0  # 0 means the 10 * M * (K + 1) default


@dataclass(frozen=True)
class TrainConfig:
    """Agent training and evaluation settings."""

    n_episodes: int = 120
    slots_per_episode: int = 25
    lr: float = 1e-3
    gamma: float = 0.9
    batch_size: int = 64
    buffer_capacity: int = 10000
    target_refresh: int = 200
    hidden: tuple = (64, 64)
    n_grid: int = 11
    eval_slots: int = 40


@dataclass(frozen=True)
class RunConfig:
    """Everything one CLI invocation needs."""

    seed: int = 0
    twin: TwinConfig = field(default_factory=TwinConfig)
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    game: GameConfig = field(default_factory=GameConfig)
    train: TrainConfig = field(default_factory=TrainConfig)


_SECTIONS = {
    "twin": TwinConfig,
    "scenario": ScenarioConfig,
    "game": GameConfig,
    "train": TrainConfig,
}


def _coerce(name: str, value, default):
    """Match a JSON value to the default's type, or fail with the field path."""
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigSchemaError(f"expected a boolean, got {value!r}", field=name)
        return value
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigSchemaError(f"expected an integer, got {value!r}", field=name)
        if isinstance(value, float) and not value.is_integer():
            raise ConfigSchemaError(f"expected an integer, got {value!r}", field=name)
        return int(value)
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigSchemaError(f"expected a number, got {value!r}", field=name)
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigSchemaError(f"expected a string, got {value!r}", field=name)
        return value
    if isinstance(default, tuple):
        if not isinstance(value, (list, tuple)):
            raise ConfigSchemaError(f"expected a list, got {value!r}", field=name)
        return tuple(int(v) for v in value)
    raise ConfigSchemaError(f"unsupported field type for {value!r}", field=name)


def _build_section(section: str, cls, data: dict):
    known = {f.name: f for f in fields(cls)}
    defaults = cls()
    updates = {}
    for key, value in data.items():
        path = f"{section}.{key}"
        if key not in known:
            raise ConfigSchemaError("unknown field", field=path)
        updates[key] = _coerce(path, value, getattr(defaults, key))
    return replace(defaults, **updates)


def _validate(cfg: RunConfig) -> RunConfig:
    def need(cond: bool, path: str, message: str):
        if not cond:
            raise ConfigSchemaError(message, field=path)

    s, g, t, w = cfg.scenario, cfg.game, cfg.train, cfg.twin
    need(s.n_subsystems >= 1, "scenario.n_subsystems", "must be at least 1")
    need(s.n_cn >= 1, "scenario.n_cn", "must be at least 1")
    need(s.area_m > 0, "scenario.area_m", "must be positive")
    need(s.n_antennas >= 1, "scenario.n_antennas", "must be at least 1")
    need(s.bandwidth_hz > 0, "scenario.bandwidth_hz", "must be positive")
    need(s.blocklength >= 1, "scenario.blocklength", "must be at least 1")
    need(0.0 < s.eps < 1.0, "scenario.eps", "must lie in (0, 1)")
    need(s.tx_power_w > 0, "scenario.tx_power_w", "must be positive")
    need(
        0 < s.cn_capacity_min_hz <= s.cn_capacity_max_hz,
        "scenario.cn_capacity_min_hz",
        "capacity range must be positive and ordered",
    )
    need(s.es_capacity_hz > 0, "scenario.es_capacity_hz", "must be positive")
    need(0.0 <= s.deviation < 1.0, "scenario.deviation", "must lie in [0, 1)")
    need(s.task_preset in TASK_PRESETS, "scenario.task_preset",
         f"must be one of {sorted(TASK_PRESETS)}")
    need(s.t_max_s > 0, "scenario.t_max_s", "must be positive")
    need(g.arbitration in ARBITRATION_MODES, "game.arbitration",
         f"must be one of {ARBITRATION_MODES}")
    need(g.max_iterations >= 0, "game.max_iterations", "must be non-negative")
    need(t.n_episodes >= 1, "train.n_episodes", "must be at least 1")
    need(t.slots_per_episode >= 1, "train.slots_per_episode", "must be at least 1")
    need(t.lr > 0, "train.lr", "must be positive")
    need(0.0 <= t.gamma < 1.0, "train.gamma", "must lie in [0, 1)")
    need(t.batch_size >= 1, "train.batch_size", "must be at least 1")
    need(t.buffer_capacity >= t.batch_size, "train.buffer_capacity",
         "must be at least the batch size")
    need(t.target_refresh >= 1, "train.target_refresh", "must be at least 1")
    need(len(t.hidden) == 2 and all(h >= 1 for h in t.hidden), "train.hidden",
         "must be two positive layer widths")
    need(t.n_grid >= 2, "train.n_grid", "must be at least 2")
    need(t.eval_slots >= 1, "train.eval_slots", "must be at least 1")
    need(w.n_operation_steps >= 0, "twin.n_operation_steps", "must be non-negative")
    need(w.observation_noise >= 0, "twin.observation_noise", "must be non-negative")
    need(0.0 < w.discount < 1.0, "twin.discount", "must lie in (0, 1)")
    need(w.assimilation in (MODE_DISCRETE, MODE_DENSITY), "twin.assimilation",
         f"must be {MODE_DISCRETE!r} or {MODE_DENSITY!r}")
    return cfg


def config_from_dict(data: dict) -> RunConfig:
    """Build and validate a RunConfig from parsed JSON."""
    if not isinstance(data, dict):
        raise ConfigSchemaError("top level must be an object", field="<root>")
    sections = {}
    seed = 0
    for key, value in data.items():
        if key == "seed":
            seed = _coerce("seed", value, 0)
        elif key in _SECTIONS:
            if not isinstance(value, dict):
                raise ConfigSchemaError("section must be an object", field=key)
            sections[key] = _build_section(key, _SECTIONS[key], value)
        else:
            raise ConfigSchemaError("unknown section", field=key)
    return _validate(RunConfig(seed=seed, **sections))


def load_config(path=None) -> RunConfig:
    """Read a JSON config file; None gives all defaults."""
    if path is None:
        return _validate(RunConfig())
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigSchemaError(f"config file not found: {path}", field="<file>") from exc
    except json.JSONDecodeError as exc:
        raise ConfigSchemaError(f"invalid JSON: {exc}", field="<file>") from exc
    return config_from_dict(data)


def config_to_dict(cfg: RunConfig) -> dict:
    out = asdict(cfg)
    out["train"]["hidden"] = list(out["train"]["hidden"])
    return out


def config_hash(cfg: RunConfig) -> str:
    """Short stable digest of the full configuration."""
    canon = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:12]
