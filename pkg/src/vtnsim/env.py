"""Offloading environment over the vehicular twin layer.

Gym-style reset/step episodes: the state is one normalized feature
vector per vehicle (task bytes, cycle costs, local compute, link
rates), the action is a hybrid of per-vehicle offload bits and
continuous cloud-cycle requests, and the reward is the negated total
latency of the projected action.  Task sizes and link rates resample
i.i.d. around their presets each step, so an episode is a sequence of
independent decision rounds under mild drift; the full trace is a pure
function of (config, seed, action sequence).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .auth import auth_overhead_bytes
from .curve import get_curve
from .latency import (
    CloudProfile,
    CostConstants,
    VehicleProfile,
    make_profile,
    per_vehicle_latencies,
    total_latency,
)
from .oracle import InstanceSpec

FEATURES_PER_VEHICLE = 6

# Fixed reference scales that bring all state features to comparable magnitude.
SIZE_SCALE_BYTES = 1e6
CYCLE_SCALE = 1e5
COMPUTE_SCALE_GHZ = 10.0
RATE_SCALE_BPS = 1e9


class EnvContractError(ValueError):
    """An action or configuration violates the environment contract."""


@dataclass(frozen=True)
class NetworkConfig:
    """Scenario parameters for one simulated network."""

    n: int = 10
    task_size_bytes: float = 50.0
    rate_mbps: float = 100.0
    cloud_capacity_ghz: float = 20.0
    vehicle_compute_ghz: float = 1.0
    vehicle_speed_mps: float = 25.0
    with_ibc: bool = True
    curve_preset: str = "secp256k1"
    seed: int = 0
    episode_length: int = 100
    size_jitter: float = 0.10
    rate_jitter: float = 0.05
    initial_alloc_ghz: Tuple[float, float] = (2.0, 4.0)
    reward_scale: float = 1.0
    constants: CostConstants = field(default_factory=CostConstants)

    def __post_init__(self) -> None:
        if self.n < 1:
            raise EnvContractError("need at least one vehicle")
        for name in ("task_size_bytes", "rate_mbps", "cloud_capacity_ghz",
                     "vehicle_compute_ghz", "reward_scale"):
            if getattr(self, name) <= 0:
                raise EnvContractError(f"{name} must be positive")
        if self.episode_length < 1:
            raise EnvContractError("episodes need at least one step")
        for name in ("size_jitter", "rate_jitter"):
            if not 0 <= getattr(self, name) < 1:
                raise EnvContractError(f"{name} must lie in [0, 1)")
        lo, hi = self.initial_alloc_ghz
        if not 0 < lo <= hi <= self.cloud_capacity_ghz:
            raise EnvContractError("initial allocation range must fit the cloud capacity")


@dataclass(frozen=True)
class EnvState:
    """Observation: per-vehicle features flattened to a 6n vector."""

    vector: np.ndarray
    profiles: Tuple[VehicleProfile, ...]
    step_index: int

    @property
    def n(self) -> int:
        return len(self.profiles)


@dataclass(frozen=True)
class EnvAction:
    """Hybrid action: offload bit and cloud-cycle request per vehicle."""

    offload: np.ndarray        # bool, shape (n,)
    requests_ghz: np.ndarray   # float, shape (n,)


@dataclass(frozen=True)
class StepOutcome:
    next_state: EnvState
    reward: float
    done: bool
    info: Dict


def state_from_profiles(profiles: Sequence[VehicleProfile],
                        step_index: int = 0) -> EnvState:
    vec = np.empty(len(profiles) * FEATURES_PER_VEHICLE)
    for i, v in enumerate(profiles):
        vec[6 * i:6 * i + 6] = (
            v.task_bytes / SIZE_SCALE_BYTES,
            v.sign_cycles / CYCLE_SCALE,
            v.verify_cycles / CYCLE_SCALE,
            v.compute_ghz / COMPUTE_SCALE_GHZ,
            v.up_mbps * 1e6 / RATE_SCALE_BPS,
            v.down_mbps * 1e6 / RATE_SCALE_BPS,
        )
    return EnvState(vector=vec, profiles=tuple(profiles), step_index=step_index)


def project_action(action: EnvAction, capacity_ghz: float) -> EnvAction:
    """Rescale offloaded requests so they exactly satisfy the capacity bound.

    Requests of non-offloaded vehicles pass through untouched; offloaded
    requests must be strictly positive, are proportionally rescaled when
    their sum exceeds the capacity, and are individually capped at it.
    """
    offload = np.asarray(action.offload, dtype=bool)
    requests = np.array(action.requests_ghz, dtype=float)
    if offload.shape != requests.shape:
        raise EnvContractError("offload bits and requests must have matching shapes")
    if not offload.any():
        return EnvAction(offload, requests)
    chosen = requests[offload]
    if (chosen <= 0).any():
        raise EnvContractError("offloaded vehicles need strictly positive requests")
    used = chosen.sum()
    if used > capacity_ghz:
        chosen = chosen * (capacity_ghz / used)
    requests[offload] = np.minimum(chosen, capacity_ghz)
    return EnvAction(offload, requests)


class OffloadEnv:
    """Single-threaded environment instance; run one per seed for sweeps."""

    def __init__(self, config: NetworkConfig) -> None:
        self.config = config
        curve = get_curve(config.curve_preset)
        self.overhead_bytes = auth_overhead_bytes(curve)
        self._rng = np.random.default_rng(config.seed)
        self._step_index = 0
        self.initial_allocations_ghz: Optional[np.ndarray] = None
        self._state: Optional[EnvState] = None

    # -- sampling -----------------------------------------------------------

    def _sample_profiles(self) -> Tuple[VehicleProfile, ...]:
        cfg = self.config
        sizes = cfg.task_size_bytes * (
            1.0 + self._rng.uniform(-cfg.size_jitter, cfg.size_jitter, cfg.n))
        rates = cfg.rate_mbps * (
            1.0 + self._rng.uniform(-cfg.rate_jitter, cfg.rate_jitter, cfg.n))
        return tuple(
            make_profile(float(sizes[i]), cfg.with_ibc, self.overhead_bytes,
                         cfg.constants, compute_ghz=cfg.vehicle_compute_ghz,
                         speed_mps=cfg.vehicle_speed_mps,
                         up_mbps=float(rates[i]), down_mbps=float(rates[i]))
            for i in range(cfg.n))

    def reset(self, seed: Optional[int] = None) -> EnvState:
        """Start a fresh episode; an explicit seed rewinds the RNG stream."""
        if seed is not None:
            self._rng = np.random.default_rng(seed)
        lo, hi = self.config.initial_alloc_ghz
        self.initial_allocations_ghz = self._rng.uniform(lo, hi, self.config.n)
        self._step_index = 0
        self._state = state_from_profiles(self._sample_profiles(), 0)
        return self._state

    def step(self, action: EnvAction) -> StepOutcome:
        """Apply a (possibly infeasible) action and advance one decision round."""
        if self._state is None:
            raise EnvContractError("call reset() before step()")
        cfg = self.config
        offload = np.asarray(action.offload)
        requests = np.asarray(action.requests_ghz)
        if offload.shape != (cfg.n,) or requests.shape != (cfg.n,):
            raise EnvContractError(
                f"action shapes {offload.shape}/{requests.shape} do not match n={cfg.n}")

        projected = project_action(EnvAction(offload, requests), cfg.cloud_capacity_ghz)
        decisions = tuple(bool(b) for b in projected.offload)
        cloud = CloudProfile(cfg.cloud_capacity_ghz, tuple(float(r) for r in projected.requests_ghz))
        profiles = self._state.profiles
        total = total_latency(decisions, profiles, cloud, cfg.constants)
        per_vehicle = per_vehicle_latencies(decisions, profiles, cloud, cfg.constants)
        reward = -total * cfg.reward_scale

        self._step_index += 1
        done = self._step_index >= cfg.episode_length
        next_state = state_from_profiles(self._sample_profiles(), self._step_index)
        self._state = next_state
        info = {
            "total_latency_s": total,
            "per_vehicle_latency_s": per_vehicle,
            "offload_count": int(projected.offload.sum()),
            "projected_action": projected,
        }
        return StepOutcome(next_state=next_state, reward=reward, done=done, info=info)


def frozen_instance(config: NetworkConfig) -> InstanceSpec:
    """Jitter-free instance at the config's preset values, for the oracle."""
    base = replace(config, size_jitter=0.0, rate_jitter=0.0)
    env = OffloadEnv(base)
    state = env.reset()
    return InstanceSpec(vehicles=state.profiles,
                        capacity_ghz=config.cloud_capacity_ghz,
                        constants=config.constants)


# -- evaluation -------------------------------------------------------------------


@dataclass(frozen=True)
class EvalMetrics:
    """Aggregates mirroring the reported offloading results."""

    avg_latency_ms: float       # mean over steps of per-vehicle average latency
    offload_percentage: float   # share of decisions that chose the cloud
    mean_reward: float
    steps: int


def evaluate_policy(policy, config: NetworkConfig, episodes: int) -> EvalMetrics:
    """Roll out a policy and aggregate latency and offloading statistics.

    ``policy`` is anything with an ``act(state: EnvState) -> EnvAction``
    method.  A fresh environment is built from the config, so results are
    a pure function of (policy, config, episodes).
    """
    env = OffloadEnv(config)
    latency_ms_sum = 0.0
    reward_sum = 0.0
    offloaded = 0
    steps = 0
    for _ in range(episodes):
        state = env.reset()
        done = False
        while not done:
            outcome = env.step(policy.act(state))
            latency_ms_sum += outcome.info["total_latency_s"] / config.n * 1e3
            reward_sum += outcome.reward
            offloaded += outcome.info["offload_count"]
            steps += 1
            state = outcome.next_state
            done = outcome.done
    return EvalMetrics(avg_latency_ms=latency_ms_sum / steps,
                       offload_percentage=100.0 * offloaded / (steps * config.n),
                       mean_reward=reward_sum / steps,
                       steps=steps)


class RandomPolicy:
    """Coin-flip offloading with uniform resource requests."""

    def __init__(self, config: NetworkConfig, seed: int = 0,
                 offload_prob: float = 0.5) -> None:
        self._rng = np.random.default_rng(seed)
        self._n = config.n
        self._range = config.initial_alloc_ghz
        self._prob = offload_prob

    def act(self, state: EnvState) -> EnvAction:
        lo, hi = self._range
        return EnvAction(offload=self._rng.random(self._n) < self._prob,
                         requests_ghz=self._rng.uniform(lo, hi, self._n))


class AlwaysLocalPolicy:
    def __init__(self, config: NetworkConfig) -> None:
        self._n = config.n

    def act(self, state: EnvState) -> EnvAction:
        return EnvAction(offload=np.zeros(self._n, dtype=bool),
                         requests_ghz=np.ones(self._n))


class AlwaysOffloadPolicy:
    """Offload everyone with an equal share of the cloud budget."""

    def __init__(self, config: NetworkConfig) -> None:
        self._n = config.n
        self._share = config.cloud_capacity_ghz / config.n

    def act(self, state: EnvState) -> EnvAction:
        return EnvAction(offload=np.ones(self._n, dtype=bool),
                         requests_ghz=np.full(self._n, self._share))
