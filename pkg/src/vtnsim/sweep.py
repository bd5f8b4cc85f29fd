"""Seeded experiment orchestration and result emission.

A sweep is the cartesian product of network size, task size, data rate
and authentication mode, run once per seed.  Every row is recomputable
from library calls with the same seed; the CLI adds no logic of its own.
Grid points run in a process pool capped by the ``VTN_SIM_THREADS``
environment variable.
"""

from __future__ import annotations

import dataclasses
import itertools
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from . import __version__
from .config import ConfigError, ExperimentConfig
from .env import (
    AlwaysLocalPolicy,
    AlwaysOffloadPolicy,
    NetworkConfig,
    OffloadEnv,
    RandomPolicy,
    evaluate_policy,
    frozen_instance,
    project_action,
    state_from_profiles,
)
from .latency import CloudProfile, total_latency
from .oracle import EXHAUSTIVE_LIMIT, exhaustive_best
from .ppo import PPOAgent, load_checkpoint, save_checkpoint, train

CSV_HEADER = "n,task_size_bytes,rate_mbps,ibc_mode,seed,avg_latency_ms,offload_pct,mean_reward,oracle_gap"

GridPoint = Tuple[int, float, float, str, int]


@dataclass(frozen=True)
class ResultRow:
    """One evaluated (grid point, seed) cell."""

    n: int
    task_size_bytes: float
    rate_mbps: float
    ibc_mode: str
    seed: int
    avg_latency_ms: float
    offload_pct: float
    mean_reward: float
    oracle_gap: Optional[float] = None

    def as_record(self) -> dict:
        """Emission record with metrics rounded to 4 decimals (CSV parity)."""
        return {
            "n": self.n,
            "task_size_bytes": round(self.task_size_bytes, 4),
            "rate_mbps": round(self.rate_mbps, 4),
            "ibc_mode": self.ibc_mode,
            "seed": self.seed,
            "avg_latency_ms": round(self.avg_latency_ms, 4),
            "offload_pct": round(self.offload_pct, 4),
            "mean_reward": round(self.mean_reward, 4),
            "oracle_gap": None if self.oracle_gap is None else round(self.oracle_gap, 4),
        }


def grid_points(config: ExperimentConfig) -> List[GridPoint]:
    return [(n, size, rate, ibc, seed)
            for n, size, rate, ibc, seed in itertools.product(
                config.n_list, config.task_size_list, config.rate_list,
                config.ibc_modes, config.seeds)]


def network_for_point(config: ExperimentConfig, point: GridPoint) -> NetworkConfig:
    n, size, rate, ibc, seed = point
    try:
        return dataclasses.replace(
            config.network, n=n, task_size_bytes=size, rate_mbps=rate,
            with_ibc=(ibc == "with"), seed=seed,
            episode_length=config.train.steps_per_episode)
    except ValueError as exc:
        raise ConfigError(f"grid point {point} is invalid: {exc}") from exc


def _make_policy(config: ExperimentConfig, net: NetworkConfig, seed: int,
                 checkpoint_dir: Optional[Path]):
    if config.policy == "random":
        return RandomPolicy(net, seed=seed)
    if config.policy == "always_local":
        return AlwaysLocalPolicy(net)
    if config.policy == "always_offload":
        return AlwaysOffloadPolicy(net)
    if config.checkpoint is not None:
        agent, _, _ = load_checkpoint(config.checkpoint)
        if agent.network_config.n != net.n:
            raise ConfigError(
                f"checkpoint was trained for n={agent.network_config.n}, "
                f"grid point has n={net.n}")
        return agent.policy(deterministic=True)
    train_cfg = dataclasses.replace(config.train, seed=seed)
    env = OffloadEnv(net)
    agent, curve = train(env, train_cfg)
    if checkpoint_dir is not None:
        tag = (f"n{net.n}_s{int(net.task_size_bytes)}_r{int(net.rate_mbps)}_"
               f"{'with' if net.with_ibc else 'without'}_seed{seed}")
        save_checkpoint(checkpoint_dir / f"checkpoint_{tag}.bin", agent,
                        iteration=train_cfg.iterations, curve=curve, env=env)
    return agent.policy(deterministic=True)


def _oracle_gap(policy, net: NetworkConfig) -> float:
    """Relative excess of the policy's frozen-instance latency over the optimum."""
    instance = frozen_instance(net)
    best = exhaustive_best(instance)
    state = state_from_profiles(instance.vehicles)
    projected = project_action(policy.act(state), net.cloud_capacity_ghz)
    achieved = total_latency(
        tuple(bool(b) for b in projected.offload), instance.vehicles,
        CloudProfile(net.cloud_capacity_ghz, tuple(projected.requests_ghz)),
        net.constants)
    return (achieved - best.total_latency_s) / best.total_latency_s


def run_point(config: ExperimentConfig, point: GridPoint,
              checkpoint_dir: Optional[Path] = None) -> ResultRow:
    """Train (when configured) and evaluate one grid cell."""
    n, size, rate, ibc, seed = point
    net = network_for_point(config, point)
    policy = _make_policy(config, net, seed, checkpoint_dir)
    metrics = evaluate_policy(policy, net, episodes=config.eval_episodes)
    gap = None
    if config.mode == "oracle":
        if n > EXHAUSTIVE_LIMIT:
            raise ConfigError(
                f"oracle mode needs n <= {EXHAUSTIVE_LIMIT}, grid has n={n}")
        gap = _oracle_gap(policy, net)
    return ResultRow(n=n, task_size_bytes=size, rate_mbps=rate, ibc_mode=ibc,
                     seed=seed, avg_latency_ms=metrics.avg_latency_ms,
                     offload_pct=metrics.offload_percentage,
                     mean_reward=metrics.mean_reward, oracle_gap=gap)


def _worker(args) -> Tuple[int, ResultRow]:
    index, config, point, checkpoint_dir = args
    return index, run_point(config, point, checkpoint_dir)


def worker_count(n_points: int) -> int:
    cap = os.environ.get("VTN_SIM_THREADS")
    limit = int(cap) if cap else (os.cpu_count() or 1)
    return max(1, min(n_points, limit))


def run_sweep(config: ExperimentConfig,
              out_dir: Optional[Path] = None) -> List[ResultRow]:
    """Evaluate every grid cell; deterministic per seed, order-stable."""
    points = grid_points(config)
    checkpoint_dir = None
    if out_dir is not None and config.policy == "trained" and config.checkpoint is None:
        checkpoint_dir = Path(out_dir) / "checkpoints"
        checkpoint_dir.mkdir(parents=True, exist_ok=True)
    workers = worker_count(len(points))
    if workers == 1:
        return [run_point(config, point, checkpoint_dir) for point in points]
    args = [(i, config, point, checkpoint_dir) for i, point in enumerate(points)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        indexed = list(pool.map(_worker, args))
    indexed.sort(key=lambda pair: pair[0])
    return [row for _, row in indexed]


# -- emission ---------------------------------------------------------------------


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)


def emit_results(rows: Sequence[ResultRow], fmt: str, path) -> Path:
    """Write rows as CSV or JSON; refuses empty row sets."""
    if not rows:
        raise ConfigError("refusing to emit an empty result set")
    path = Path(path)
    if fmt == "csv":
        lines = [CSV_HEADER]
        for row in rows:
            rec = row.as_record()
            lines.append(",".join(_format_cell(rec[key])
                                  for key in CSV_HEADER.split(",")))
        path.write_text("\n".join(lines) + "\n")
    elif fmt == "json":
        path.write_text(json.dumps([row.as_record() for row in rows], indent=2,
                                   sort_keys=True) + "\n")
    else:
        raise ConfigError(f"unknown result format {fmt!r}")
    return path


def write_manifest(config: ExperimentConfig, out_dir) -> Path:
    """Record the fully-resolved configuration and code version."""
    manifest = {
        "package": "vtnsim",
        "version": __version__,
        "config": dataclasses.asdict(config),
    }
    path = Path(out_dir) / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path
