"""Experiment configuration: TOML files, defaults and CLI overrides.

Precedence is CLI flag > config file > built-in default.  Override
strings use dotted paths into the file structure, e.g.
``train.iterations=50`` or ``network.episode_length=20``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

from .env import NetworkConfig
from .latency import CostConstants
from .ppo import TrainConfig

MODES = ("train", "evaluate", "oracle", "sweep")
POLICIES = ("trained", "random", "always_offload", "always_local")
IBC_MODES = ("with", "without")


class ConfigError(ValueError):
    """Experiment configuration is malformed or inconsistent."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved experiment: sweep grid, schedules, policy and output knobs."""

    mode: str = "sweep"
    n_list: Tuple[int, ...] = (10,)
    task_size_list: Tuple[float, ...] = (50.0,)
    rate_list: Tuple[float, ...] = (100.0,)
    ibc_modes: Tuple[str, ...] = ("with",)
    seeds: Tuple[int, ...] = (0,)
    policy: str = "trained"
    eval_episodes: int = 2
    out_dir: str = "results"
    emit_plots: bool = True
    checkpoint: Optional[str] = None
    network: NetworkConfig = field(default_factory=NetworkConfig)
    train: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.policy not in POLICIES:
            raise ConfigError(f"policy must be one of {POLICIES}, got {self.policy!r}")
        for name in ("n_list", "task_size_list", "rate_list", "ibc_modes", "seeds"):
            if not getattr(self, name):
                raise ConfigError(f"sweep list {name} must be non-empty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seeds must be distinct")
        bad = [m for m in self.ibc_modes if m not in IBC_MODES]
        if bad:
            raise ConfigError(f"ibc modes must be drawn from {IBC_MODES}, got {bad}")
        if self.eval_episodes < 1:
            raise ConfigError("eval_episodes must be at least 1")


def _coerce_scalar(text: str):
    lowered = text.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            continue
    return text


def parse_override(spec: str) -> Tuple[Tuple[str, ...], object]:
    """Split ``a.b.c=value`` into a key path and a coerced scalar value."""
    if "=" not in spec:
        raise ConfigError(f"override {spec!r} is not of the form key=value")
    path, raw = spec.split("=", 1)
    keys = tuple(k for k in path.strip().split(".") if k)
    if not keys:
        raise ConfigError(f"override {spec!r} has an empty key path")
    return keys, _coerce_scalar(raw.strip())


def _apply_override(tree: dict, keys: Tuple[str, ...], value) -> None:
    node = tree
    for key in keys[:-1]:
        node = node.setdefault(key, {})
        if not isinstance(node, dict):
            raise ConfigError(f"override path {'.'.join(keys)} crosses a scalar")
    node[keys[-1]] = value


def _build_dataclass(cls, data: dict, *, label: str):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown {label} fields: {', '.join(sorted(unknown))}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {label} configuration: {exc}") from exc


def config_from_tree(tree: dict) -> ExperimentConfig:
    """Build an ExperimentConfig from the parsed file/override structure."""
    tree = dict(tree)
    sweep = dict(tree.pop("sweep", {}))
    output = dict(tree.pop("output", {}))
    network = dict(tree.pop("network", {}))
    train = dict(tree.pop("train", {}))

    def as_tuple(value):
        if isinstance(value, (list, tuple)):
            return tuple(value)
        return (value,)

    top: dict = {}
    if "mode" in tree:
        top["mode"] = tree.pop("mode")
    if tree:
        raise ConfigError(f"unknown top-level fields: {', '.join(sorted(tree))}")

    for src, dest in (("n", "n_list"), ("task_size_bytes", "task_size_list"),
                      ("rate_mbps", "rate_list"), ("ibc", "ibc_modes"),
                      ("seeds", "seeds")):
        if src in sweep:
            top[dest] = as_tuple(sweep.pop(src))
    if sweep:
        raise ConfigError(f"unknown sweep fields: {', '.join(sorted(sweep))}")

    for src, dest in (("dir", "out_dir"), ("plots", "emit_plots"),
                      ("policy", "policy"), ("eval_episodes", "eval_episodes"),
                      ("checkpoint", "checkpoint")):
        if src in output:
            top[dest] = output.pop(src)
    if output:
        raise ConfigError(f"unknown output fields: {', '.join(sorted(output))}")

    if "constants" in network:
        network["constants"] = _build_dataclass(
            CostConstants, dict(network["constants"]), label="cost-constants")
    if "initial_alloc_ghz" in network:
        network["initial_alloc_ghz"] = tuple(network["initial_alloc_ghz"])
    if "hidden_sizes" in train:
        train["hidden_sizes"] = tuple(train["hidden_sizes"])

    top["network"] = _build_dataclass(NetworkConfig, network, label="network")
    top["train"] = _build_dataclass(TrainConfig, train, label="train")
    return _build_dataclass(ExperimentConfig, top, label="experiment")


def load_experiment_config(path=None, overrides: Sequence[str] = ()) -> ExperimentConfig:
    """Read a TOML experiment file (optional) and apply dotted overrides."""
    tree: dict = {}
    if path is not None:
        try:
            import tomllib  # type: ignore[import-not-found]
        except ModuleNotFoundError:
            import tomli as tomllib
        try:
            with open(path, "rb") as fh:
                tree = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid TOML: {exc}") from exc
    for spec in overrides:
        keys, value = parse_override(spec)
        _apply_override(tree, keys, value)
    return config_from_tree(tree)
