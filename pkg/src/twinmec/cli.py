"""Command line front end.

Subcommands:
  twin        run the reactor-startup twin and log each phase
  game        play the destination game across a block of seeds
  train       train the allocation agent on a scenario and evaluate it
  sweep       compare allocation modes along an experiment axis
  verify-epg  exhaustively check the potential identity on a small scenario

All outputs land in --out as CSV (first line carries the config hash
and module versions), JSON lines for game moves, and an npz checkpoint
holding network parameters, replay buffer, and generator state.  Exit
codes: 0 success, 2 bad configuration, 3 solver or game failed to
converge.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .agent import DoubleQTrainer
from .config import RunConfig, config_hash, config_to_dict, load_config
from .errors import ConfigSchemaError, ConvergenceError, TwinmecError
from .game import run_game, verify_potential_identity
from .orra import decode_actions, evaluate_modes, mec_only_welfare, train_agent
from .scenario import generate_scenario
from .twin_engine import StartupTwin, phase_means

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONVERGENCE = 3

SWEEP_AXES = {
    "subsystems": tuple(range(4, 13)),
    "coin_nodes": tuple(range(1, 11)),
    "task_type": tuple(f"type{i}" for i in range(1, 7)),
}


def _versions() -> str:
    numba = kernels.numba_version() or "off"
    return f"twinmec={__version__} numpy={np.__version__} numba={numba}"


def _spawn_rngs(seed: int, count: int):
    """Independent child generators so stages cannot disturb each other."""
    seq = np.random.SeedSequence(seed)
    return [np.random.default_rng(child) for child in seq.spawn(count)]


def _write_csv(path: Path, cfg: RunConfig, columns, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# config_hash={config_hash(cfg)} seed={cfg.seed} {_versions()}\n")
        writer = csv.writer(fh)
        writer.writerow(columns)
        writer.writerows(rows)


def _scenario(cfg: RunConfig, rng: np.random.Generator):
    s = cfg.scenario
    return generate_scenario(
        rng,
        s.n_subsystems,
        s.n_cn,
        area_m=s.area_m,
        n_antennas=s.n_antennas,
        tx_power_w=s.tx_power_w,
        bandwidth_hz=s.bandwidth_hz,
        blocklength=s.blocklength,
        eps=s.eps,
        cn_capacity_range_hz=(s.cn_capacity_min_hz, s.cn_capacity_max_hz),
        es_capacity_hz=s.es_capacity_hz,
        deviation=s.deviation,
        task_preset=s.task_preset,
        t_max_s=s.t_max_s,
        latency_gain=s.latency_gain,
    )


def _even_allocation(n_subsystems: int):
    """Reference allocation for one-shot games: half the work, equal shares."""
    phi = np.full(n_subsystems, 0.5)
    beta = np.full(n_subsystems, 1.0 / n_subsystems)
    return phi, beta


def _game_iterations(cfg: RunConfig):
    return cfg.game.max_iterations if cfg.game.max_iterations > 0 else None


TWIN_COLUMNS = (
    "t", "state", "action", "entropy",
    "reward_control", "reward_state", "reward_observation", "reward_total",
    "state_prior", "state_full", "state_pair",
    "obs_current", "obs_pair", "obs_posterior", "obs_lagged", "obs_ahead",
    "degenerate",
)


def _twin_row(r):
    def probs(source, keys):
        return tuple(f"{source[k]:.6g}" if source else "" for k in keys)

    return (
        r.t,
        r.state,
        r.action,
        f"{r.entropy:.6f}",
        f"{r.reward_control:.6f}",
        f"{r.reward_state:.6f}",
        f"{r.reward_observation:.6f}",
        f"{r.reward_total:.6f}",
        *probs(r.state_probs, ("prior", "full", "pair")),
        *probs(r.obs_probs, ("current", "pair", "posterior", "lagged", "ahead")),
        int(r.degenerate),
    )


def cmd_twin(cfg: RunConfig, out: Path, args) -> int:
    twin = StartupTwin(
        discount=cfg.twin.discount, likelihood_mode=cfg.twin.assimilation
    )
    (rng,) = _spawn_rngs(cfg.seed, 1)
    records = twin.run(
        n_operation_steps=cfg.twin.n_operation_steps,
        observation_noise=cfg.twin.observation_noise,
        rng=rng,
    )
    for phase in ("calibration", "operation"):
        _write_csv(
            out / f"twin_{phase}.csv",
            cfg,
            TWIN_COLUMNS,
            [_twin_row(r) for r in records if r.phase == phase],
        )
    means = phase_means(records)
    print(f"final state {records[-1].state} after {len(records)} steps")
    for phase, value in means.items():
        print(f"mean state query [{phase}]: {value:.4f}")
    print(f"wrote {out / 'twin_calibration.csv'} and {out / 'twin_operation.csv'}")
    return EXIT_OK


def _build_trainer(cfg: RunConfig, scenario) -> DoubleQTrainer:
    """Trainer with the architecture the config describes, parameters unset."""
    t = cfg.train
    return DoubleQTrainer(
        scenario.n_subsystems,
        scenario.n_subsystems * scenario.n_request_states,
        t.n_grid * t.n_grid,
        hidden=t.hidden,
        lr=t.lr,
        gamma=t.gamma,
        batch_size=t.batch_size,
        buffer_capacity=t.buffer_capacity,
        target_refresh=t.target_refresh,
        rng=np.random.default_rng(0),
    )


def _config_sans_seed(data: dict) -> dict:
    data = dict(data)
    data.pop("seed", None)
    return data


def _load_checkpoint(path, cfg: RunConfig, scenario, require_seed: bool = False):
    """Trainer carrying a checkpoint's best parameters, plus the raw blobs.

    The stored configuration must match the current one (including the
    seed when require_seed is set, as for resuming a run).
    """
    try:
        blobs = np.load(path)
    except FileNotFoundError as exc:
        raise ConfigSchemaError(f"checkpoint not found: {path}", field="<checkpoint>") from exc
    stored = json.loads(str(blobs["config_json"]))
    current = config_to_dict(cfg)
    if require_seed:
        matches = stored == current
    else:
        matches = _config_sans_seed(stored) == _config_sans_seed(current)
    if not matches:
        raise ConfigSchemaError(
            f"checkpoint {path} was written under a different configuration",
            field="<checkpoint>",
        )
    trainer = _build_trainer(cfg, scenario)
    trainer.load_state_dict({k: blobs[k] for k in blobs.files if not k.startswith(("live_", "buffer_", "rng_", "config", "episode", "best_"))})
    return trainer, blobs


def cmd_game(cfg: RunConfig, out: Path, args) -> int:
    mode = args.mode
    trainer = None
    rows = []
    breakdown = []
    welfare_vals, mec_vals, iter_vals = [], [], []
    log_path = out / "game_log.jsonl"
    log_fh = open(log_path, "w", encoding="utf-8")
    try:
        for offset in range(args.n_seeds):
            seed_cfg = replace(cfg, seed=cfg.seed + offset)
            rng_scenario, rng_game, rng_eval, rng_mec = _spawn_rngs(seed_cfg.seed, 4)
            scenario = _scenario(seed_cfg, rng_scenario)
            n_grid = cfg.train.n_grid
            if mode == "mec":
                zeros = np.zeros(scenario.n_subsystems)
                table = scenario.payoff_table(zeros, zeros, enforce_cap=True)[:, :2]
            else:
                if mode == "ddqn":
                    if trainer is None:
                        if args.checkpoint is None:
                            raise ConfigSchemaError(
                                "ddqn game mode needs --checkpoint",
                                field="<checkpoint>",
                            )
                        trainer, _ = _load_checkpoint(args.checkpoint, seed_cfg, scenario)
                    actions = trainer.act(scenario.request_one_hot().ravel(), 0.0, rng_eval)
                else:
                    actions = rng_eval.integers(
                        n_grid * n_grid, size=scenario.n_subsystems
                    )
                phi, beta = decode_actions(actions, n_grid)
                table = scenario.payoff_table(phi, beta, enforce_cap=True)
            result = run_game(
                table,
                arbitration=seed_cfg.game.arbitration,
                rng=rng_game,
                max_iterations=_game_iterations(seed_cfg),
            )
            mec = mec_only_welfare(
                scenario, arbitration=seed_cfg.game.arbitration, rng=rng_mec
            )
            rows.append(
                (
                    seed_cfg.seed,
                    mode,
                    f"{result.potential:.6f}",
                    f"{mec:.6f}",
                    result.n_iterations,
                )
            )
            welfare_vals.append(result.potential)
            mec_vals.append(mec)
            iter_vals.append(result.n_iterations)
            for m, s in enumerate(result.strategies):
                breakdown.append(
                    (seed_cfg.seed, m, int(s), f"{table[m, s]:.6g}")
                )
            meta = {
                "seed": seed_cfg.seed,
                "scenario": scenario.fingerprint(),
                "welfare": result.potential,
                "moves": [move.as_record() for move in result.moves],
            }
            log_fh.write(json.dumps(meta, sort_keys=True) + "\n")
    finally:
        log_fh.close()
    agg = (
        "aggregate",
        mode,
        f"{np.mean(welfare_vals):.6f}±{np.std(welfare_vals):.6f}",
        f"{np.mean(mec_vals):.6f}±{np.std(mec_vals):.6f}",
        f"{np.mean(iter_vals):.2f}±{np.std(iter_vals):.2f}",
    )
    _write_csv(
        out / "game_result.csv",
        cfg,
        ("seed", "mode", "welfare", "welfare_mec", "iterations"),
        rows + [agg],
    )
    _write_csv(
        out / "game_breakdown.csv",
        cfg,
        ("seed", "player", "strategy", "payoff"),
        breakdown,
    )
    print(
        f"{mode}: welfare {np.mean(welfare_vals):.6f}±{np.std(welfare_vals):.6f}, "
        f"mec {np.mean(mec_vals):.6f}±{np.std(mec_vals):.6f} "
        f"over {args.n_seeds} seeds"
    )
    print(f"wrote {out / 'game_result.csv'}")
    return EXIT_OK


def _save_checkpoint(path: Path, cfg: RunConfig, result, rngs) -> None:
    """Best-validation model, plus everything needed to resume training."""
    best = result.best_state if result.best_state is not None else result.final_state
    blobs = {k: np.asarray(v) for k, v in best.items()}
    for k, v in result.final_state.items():
        blobs[f"live_{k}"] = np.asarray(v)
    for k, v in result.trainer.buffer.dump().items():
        blobs[f"buffer_{k}"] = v
    blobs["episode"] = np.asarray(result.stop_episode)
    blobs["best_welfare"] = np.asarray(result.best_welfare)
    blobs["config_hash"] = np.asarray(config_hash(cfg))
    blobs["config_json"] = np.asarray(json.dumps(config_to_dict(cfg), sort_keys=True))
    for name, rng in rngs.items():
        blobs[f"rng_{name}"] = np.asarray(json.dumps(rng.bit_generator.state))
    np.savez(path, **blobs)


def _resume_state(blobs, cfg: RunConfig, scenario, rng_train):
    """Rebuild the live trainer and schedule position a checkpoint froze."""
    trainer = _build_trainer(cfg, scenario)
    live = {
        k[len("live_"):]: blobs[k] for k in blobs.files if k.startswith("live_")
    }
    trainer.load_state_dict(live)
    buffer = {
        k[len("buffer_"):]: blobs[k] for k in blobs.files if k.startswith("buffer_")
    }
    trainer.buffer.load(buffer)
    rng_train.bit_generator.state = json.loads(str(blobs["rng_train"]))
    best_state = {
        k: np.asarray(blobs[k])
        for k in blobs.files
        if not k.startswith(("live_", "buffer_", "rng_", "config", "episode", "best_"))
    }
    return (
        trainer,
        int(blobs["episode"]),
        float(blobs["best_welfare"]),
        best_state,
    )


def cmd_train(cfg: RunConfig, out: Path, args) -> int:
    rng_scenario, rng_train, rng_eval = _spawn_rngs(cfg.seed, 3)
    scenario = _scenario(cfg, rng_scenario)
    t = cfg.train
    trainer = None
    if args.mode == "ddqn":
        start_episode = 0
        best_welfare = -np.inf
        best_state = None
        if args.resume is not None:
            loaded, blobs = _load_checkpoint(
                args.resume, cfg, scenario, require_seed=True
            )
            trainer, start_episode, best_welfare, best_state = _resume_state(
                blobs, cfg, scenario, rng_train
            )
            if start_episode >= t.n_episodes:
                print(
                    f"checkpoint already covers {start_episode} episodes; "
                    "evaluating as-is"
                )
                trainer = loaded
        if args.resume is None or start_episode < t.n_episodes:
            result = train_agent(
                scenario,
                rng_train,
                n_episodes=t.n_episodes,
                slots_per_episode=t.slots_per_episode,
                n_grid=t.n_grid,
                arbitration=cfg.game.arbitration,
                lr=t.lr,
                gamma=t.gamma,
                batch_size=t.batch_size,
                buffer_capacity=t.buffer_capacity,
                target_refresh=t.target_refresh,
                hidden=t.hidden,
                trainer=trainer,
                start_episode=start_episode,
                stop_episode=args.stop_after,
                best_welfare=best_welfare,
                best_state=best_state,
            )
            trainer = result.trainer
            curve = [
                (
                    start_episode + i,
                    f"{ret / t.slots_per_episode:.6f}",
                    "" if np.isnan(loss) else f"{loss:.6f}",
                    f"{eps:.4f}",
                )
                for i, (ret, loss, eps) in enumerate(
                    zip(result.episode_returns, result.episode_losses, result.epsilons)
                )
            ]
            _write_csv(
                out / "training_curve.csv",
                cfg,
                ("episode", "mean_utility", "loss", "epsilon"),
                curve,
            )
            _save_checkpoint(
                out / "checkpoint.npz", cfg, result,
                {"train": rng_train, "eval": rng_eval},
            )
    modes = ("ddqn", "rand", "mec") if args.mode == "ddqn" else (args.mode,)
    summary = evaluate_modes(
        scenario,
        trainer,
        rng_eval,
        n_slots=t.eval_slots,
        n_grid=t.n_grid,
        arbitration=cfg.game.arbitration,
        modes=modes,
    )
    _write_csv(
        out / "eval_summary.csv",
        cfg,
        ("mode", "mean_welfare"),
        [(mode, f"{value:.6f}") for mode, value in summary.items()],
    )
    for mode, value in summary.items():
        print(f"{mode}: mean welfare {value:.6f} over {t.eval_slots} slots")
    print(f"wrote {out / 'eval_summary.csv'}")
    return EXIT_OK


def _cell_config(cfg: RunConfig, axis: str | None, cell) -> RunConfig:
    if axis is None:
        return cfg
    s = cfg.scenario
    if axis == "subsystems":
        return replace(cfg, scenario=replace(s, n_subsystems=int(cell)))
    if axis == "coin_nodes":
        return replace(cfg, scenario=replace(s, n_cn=int(cell)))
    return replace(cfg, scenario=replace(s, task_preset=str(cell)))


def cmd_sweep(cfg: RunConfig, out: Path, args) -> int:
    modes = ("ddqn", "rand", "mec") if args.mode is None else (args.mode,)
    cells = SWEEP_AXES[args.axis] if args.axis else (None,)
    axis_name = args.axis or "none"
    rows = []
    summary_rows = []
    for cell in cells:
        cell_cfg = _cell_config(cfg, args.axis, cell)
        cell_name = "-" if cell is None else cell
        per_mode = {mode: [] for mode in modes}
        for offset in range(args.n_seeds):
            seed_cfg = replace(cell_cfg, seed=cell_cfg.seed + offset)
            rng_scenario, rng_train, rng_eval = _spawn_rngs(seed_cfg.seed, 3)
            scenario = _scenario(seed_cfg, rng_scenario)
            trainer = None
            if "ddqn" in modes:
                t = seed_cfg.train
                trainer = train_agent(
                    scenario,
                    rng_train,
                    n_episodes=t.n_episodes,
                    slots_per_episode=t.slots_per_episode,
                    n_grid=t.n_grid,
                    arbitration=seed_cfg.game.arbitration,
                    lr=t.lr,
                    gamma=t.gamma,
                    batch_size=t.batch_size,
                    buffer_capacity=t.buffer_capacity,
                    target_refresh=t.target_refresh,
                    hidden=t.hidden,
                ).trainer
            summary = evaluate_modes(
                scenario,
                trainer,
                rng_eval,
                n_slots=seed_cfg.train.eval_slots,
                n_grid=seed_cfg.train.n_grid,
                arbitration=seed_cfg.game.arbitration,
                modes=modes,
            )
            for mode, value in summary.items():
                rows.append(
                    (axis_name, cell_name, seed_cfg.seed, mode, f"{value:.6f}")
                )
                per_mode[mode].append(value)
        for mode, values in per_mode.items():
            summary_rows.append(
                (
                    axis_name,
                    cell_name,
                    mode,
                    args.n_seeds,
                    f"{np.mean(values):.6f}",
                    f"{np.std(values):.6f}",
                )
            )
    _write_csv(
        out / "sweep.csv",
        cfg,
        ("axis", "cell", "seed", "mode", "mean_welfare"),
        rows,
    )
    _write_csv(
        out / "sweep_summary.csv",
        cfg,
        ("axis", "cell", "mode", "n_seeds", "mean_welfare", "std_welfare"),
        summary_rows,
    )
    for row in summary_rows:
        print(
            f"{row[0]}={row[1]} {row[2]}: {row[4]} mean welfare "
            f"over {row[3]} seeds"
        )
    print(f"wrote {out / 'sweep.csv'}")
    return EXIT_OK


def cmd_verify_epg(cfg: RunConfig, out: Path, args) -> int:
    rng_scenario, _ = _spawn_rngs(cfg.seed, 2)
    scenario = _scenario(cfg, rng_scenario)
    n_profiles = float(scenario.n_strategies) ** scenario.n_subsystems
    if n_profiles > 5e5:
        print(
            "scenario too large for exhaustive verification "
            f"({scenario.n_strategies}^{scenario.n_subsystems} profiles); "
            "shrink scenario.n_subsystems or scenario.n_cn",
            file=sys.stderr,
        )
        return EXIT_CONFIG
    phi, beta = _even_allocation(scenario.n_subsystems)
    table = scenario.payoff_table(phi, beta, enforce_cap=True)
    worst, checked = verify_potential_identity(table)
    report = {
        "config_hash": config_hash(cfg),
        "seed": cfg.seed,
        "scenario": scenario.fingerprint(),
        "checked_deviations": checked,
        "max_relative_error": worst,
    }
    with open(out / "verify_epg.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")
    print(f"checked {checked} unilateral deviations, max relative error {worst:.3g}")
    if worst > 1e-9:
        print("potential identity violated", file=sys.stderr)
        return 1
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twinmec",
        description="Digital-twin reactor startup and edge offloading toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None, help="JSON config file")
        p.add_argument("--seed", type=int, default=None, help="override the seed")
        p.add_argument("--out", default="out", help="output directory")

    p_twin = sub.add_parser("twin", help="run the startup twin")
    common(p_twin)
    p_twin.set_defaults(func=cmd_twin)

    p_game = sub.add_parser("game", help="play destination games across seeds")
    common(p_game)
    p_game.add_argument("--mode", choices=("ddqn", "rand", "mec"), default="rand")
    p_game.add_argument("--n-seeds", type=int, default=30)
    p_game.add_argument(
        "--checkpoint", default=None, help="trained agent for --mode ddqn"
    )
    p_game.add_argument(
        "--arbitration", choices=("random", "roundrobin"), default=None
    )
    p_game.set_defaults(func=cmd_game)

    p_train = sub.add_parser("train", help="train and evaluate the agent")
    common(p_train)
    p_train.add_argument("--mode", choices=("ddqn", "rand", "mec"), default="ddqn")
    p_train.add_argument(
        "--resume", default=None, help="continue training from a checkpoint"
    )
    p_train.add_argument(
        "--stop-after", type=int, default=None,
        help="checkpoint and stop after this many episodes",
    )
    p_train.add_argument(
        "--arbitration", choices=("random", "roundrobin"), default=None
    )
    p_train.set_defaults(func=cmd_train)

    p_sweep = sub.add_parser("sweep", help="compare modes along an axis")
    common(p_sweep)
    p_sweep.add_argument("--mode", choices=("ddqn", "rand", "mec"), default=None)
    p_sweep.add_argument(
        "--axis", choices=tuple(SWEEP_AXES), default=None,
        help="experiment axis; omitted runs the configured cell only",
    )
    p_sweep.add_argument("--n-seeds", type=int, default=30)
    p_sweep.add_argument(
        "--arbitration", choices=("random", "roundrobin"), default=None
    )
    p_sweep.set_defaults(func=cmd_sweep)

    p_verify = sub.add_parser("verify-epg", help="check the potential identity")
    common(p_verify)
    p_verify.set_defaults(func=cmd_verify_epg)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        if getattr(args, "arbitration", None):
            cfg = replace(cfg, game=replace(cfg.game, arbitration=args.arbitration))
    except ConfigSchemaError as exc:
        where = f" [{exc.field}]" if exc.field else ""
        print(f"config error{where}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        return args.func(cfg, out, args)
    except ConfigSchemaError as exc:
        where = f" [{exc.field}]" if exc.field else ""
        print(f"config error{where}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"failed to converge: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except TwinmecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
