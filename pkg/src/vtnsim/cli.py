"""Command-line interface: seeded sweeps, training, evaluation, oracle runs.

Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 training
divergence.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .config import MODES, ConfigError, ExperimentConfig, load_experiment_config
from .env import OffloadEnv
from .ppo import TrainingDiverged, save_checkpoint, train
from .report import render_figures, render_training_curve
from .sweep import (
    emit_results,
    grid_points,
    network_for_point,
    run_point,
    run_sweep,
    write_manifest,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vtnsim",
        description="Authenticated task-offloading simulator: train, evaluate, "
                    "sweep and oracle-check offloading policies.")
    parser.add_argument("--config", type=Path, default=None,
                        help="TOML experiment file")
    parser.add_argument("--mode", choices=MODES, default=None,
                        help="overrides the config file's mode")
    parser.add_argument("--seed", type=int, default=None,
                        help="replaces the seed list with this single seed")
    parser.add_argument("--out", type=Path, default=None,
                        help="output directory (default from config)")
    parser.add_argument("--override", action="append", default=[],
                        metavar="KEY=VALUE",
                        help="dotted-path scalar override, e.g. train.iterations=5 "
                             "(repeatable)")
    return parser


def _resolve(args: argparse.Namespace) -> ExperimentConfig:
    config = load_experiment_config(args.config, args.override)
    updates = {}
    if args.mode is not None:
        updates["mode"] = args.mode
    if args.seed is not None:
        updates["seeds"] = (args.seed,)
    if args.out is not None:
        updates["out_dir"] = str(args.out)
    return dataclasses.replace(config, **updates) if updates else config


def _run_train(config: ExperimentConfig, out_dir: Path) -> None:
    point = grid_points(config)[0]
    net = network_for_point(config, point)
    train_cfg = dataclasses.replace(config.train, seed=point[-1])
    env = OffloadEnv(net)
    agent, curve = train(env, train_cfg)
    save_checkpoint(out_dir / "checkpoint.bin", agent,
                    iteration=train_cfg.iterations, curve=curve, env=env)
    lines = ["iteration,mean_reward"]
    lines += [f"{i + 1},{r:.6f}" for i, r in enumerate(curve)]
    (out_dir / "training_curve.csv").write_text("\n".join(lines) + "\n")
    if config.emit_plots and curve:
        render_training_curve(curve, out_dir)
    row = run_point(dataclasses.replace(
        config, checkpoint=str(out_dir / "checkpoint.bin")), point)
    emit_results([row], "csv", out_dir / "results.csv")
    emit_results([row], "json", out_dir / "results.json")
    print(f"trained {train_cfg.iterations} iterations; "
          f"final mean reward {curve[-1]:.6f}" if curve
          else "trained 0 iterations")
    print(f"checkpoint: {out_dir / 'checkpoint.bin'}")


def _run_grid(config: ExperimentConfig, out_dir: Path) -> None:
    if config.mode == "evaluate" and config.policy == "trained" \
            and config.checkpoint is None:
        raise ConfigError(
            "evaluate mode with policy='trained' needs output.checkpoint; "
            "use mode='sweep' to train in place or pick a baseline policy")
    rows = run_sweep(config, out_dir)
    csv_path = emit_results(rows, "csv", out_dir / "results.csv")
    emit_results(rows, "json", out_dir / "results.json")
    if config.emit_plots:
        for path in render_figures(rows, out_dir):
            print(f"figure: {path}")
    print(f"{len(rows)} rows -> {csv_path}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _resolve(args)
        out_dir = Path(config.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_manifest(config, out_dir)
        if config.mode == "train":
            _run_train(config, out_dir)
        else:
            _run_grid(config, out_dir)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except TrainingDiverged as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
