"""Actor-critic PPO with a hybrid offload/allocation policy head.

The actor maps the environment state to per-vehicle Bernoulli offload
probabilities plus the mean and standard deviation of a Gaussian over
each resource request; the critic estimates the state value.  Training
maximizes the clipped surrogate with an entropy bonus, i.e. minimizes

    loss = -surrogate + value_weight * value_mse - entropy_coef * entropy

using one-step TD advantages.  Gaussian samples are drawn pre-squash;
the request handed to the environment is ``capacity * sigmoid(sample)``
while log-probabilities are taken on the pre-squash variable (the
environment's projection guarantees feasibility either way).

All gradients are analytic (see ``loss_and_grads``) and checked against
finite differences in the test suite.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .env import EnvAction, EnvState, FEATURES_PER_VEHICLE, NetworkConfig, OffloadEnv
from .latency import CostConstants
from .nets import MLP, Adam, SGD, softplus, stable_sigmoid

PROB_EPS = 1e-12      # probability clamp inside logs
STD_FLOOR = 1e-3      # additive floor under softplus-positive stds
SQUASH_FLOOR = 1e-2   # smallest request as a fraction of cloud capacity; an
                      # unfloored sigmoid squash emits ~0 GHz requests whose
                      # astronomic latencies destabilize the offload bits
LOG_2PI = math.log(2.0 * math.pi)


class TrainingDiverged(RuntimeError):
    """Loss or parameters became non-finite during an update."""


@dataclass(frozen=True)
class TrainConfig:
    """PPO hyperparameters; defaults follow the reported best settings."""

    learning_rate: float = 0.003
    entropy_coefficient: float = 0.08
    discount: float = 0.9
    clip_ratio: float = 0.2
    epochs_per_iteration: int = 4
    iterations: int = 100
    episodes_per_iteration: int = 100
    steps_per_episode: int = 100
    value_loss_weight: float = 0.5
    hidden_sizes: Tuple[int, ...] = (64, 64)
    optimizer: str = "adam"
    normalize_advantages: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0 < self.discount <= 1:
            raise ValueError("discount must lie in (0, 1]")
        if not 0 < self.clip_ratio < 1:
            raise ValueError("clip ratio must lie in (0, 1)")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError("optimizer must be 'adam' or 'sgd'")
        for name in ("epochs_per_iteration", "episodes_per_iteration",
                     "steps_per_episode"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.iterations < 0:
            raise ValueError("iterations must be non-negative")


@dataclass
class Trajectory:
    """Flat rollout storage; one row per environment step."""

    states: np.ndarray        # (T, 6n)
    bits: np.ndarray          # (T, n) 0/1 floats
    raw_requests: np.ndarray  # (T, n) pre-squash Gaussian draws
    log_probs: np.ndarray     # (T,) from the acting policy, frozen
    rewards: np.ndarray       # (T,)
    values: np.ndarray        # (T,) critic estimates from the acting policy
    dones: np.ndarray         # (T,) episode-terminal flags
    advantages: Optional[np.ndarray] = None
    returns: Optional[np.ndarray] = None


def compute_advantages(traj: Trajectory, discount: float) -> Trajectory:
    """One-step TD advantages and critic targets; terminal steps bootstrap zero."""
    next_values = np.append(traj.values[1:], 0.0)
    next_values[traj.dones] = 0.0
    returns = traj.rewards + discount * next_values
    return dataclasses.replace(traj, advantages=returns - traj.values, returns=returns)


# -- distribution pieces -----------------------------------------------------------


def bernoulli_log_prob(probs: np.ndarray, bits: np.ndarray) -> np.ndarray:
    p = np.clip(probs, PROB_EPS, 1.0 - PROB_EPS)
    return bits * np.log(p) + (1.0 - bits) * np.log1p(-p)


def gaussian_log_prob(x: np.ndarray, mean: np.ndarray, std: np.ndarray) -> np.ndarray:
    return -0.5 * ((x - mean) / std) ** 2 - np.log(std) - 0.5 * LOG_2PI


def hybrid_entropy(probs: np.ndarray, stds: np.ndarray) -> np.ndarray:
    """Per-sample total entropy: Bernoulli plus Gaussian, summed over vehicles."""
    p = np.clip(probs, PROB_EPS, 1.0 - PROB_EPS)
    bern = -(p * np.log(p) + (1.0 - p) * np.log1p(-p))
    gauss = np.log(stds) + 0.5 * (1.0 + LOG_2PI)
    return bern.sum(axis=-1) + gauss.sum(axis=-1)


def clipped_surrogate(log_prob_new: np.ndarray, log_prob_old: np.ndarray,
                      advantages: np.ndarray, clip_ratio: float) -> np.ndarray:
    """Per-sample min(ratio*A, clip(ratio)*A); the optimizer maximizes its mean."""
    with np.errstate(over="ignore"):
        ratio = np.exp(log_prob_new - log_prob_old)
    clipped = np.clip(ratio, 1.0 - clip_ratio, 1.0 + clip_ratio)
    return np.minimum(ratio * advantages, clipped * advantages)


def clipped_loss(log_prob_new: np.ndarray, log_prob_old: np.ndarray,
                 advantages: np.ndarray, clip_ratio: float) -> float:
    """Batch-mean clipped surrogate (the quantity being maximized)."""
    return float(np.mean(clipped_surrogate(log_prob_new, log_prob_old,
                                           advantages, clip_ratio)))


# -- agent --------------------------------------------------------------------------


@dataclass(frozen=True)
class ActionSample:
    action: EnvAction
    log_prob: float
    bits: np.ndarray
    raw_requests: np.ndarray
    value: float


class PPOAgent:
    """Separate actor and critic MLPs plus the sampling RNG and optimizer."""

    def __init__(self, network_config: NetworkConfig, train_config: TrainConfig) -> None:
        self.network_config = network_config
        self.train_config = train_config
        self.n = network_config.n
        self.capacity_ghz = network_config.cloud_capacity_ghz
        input_dim = FEATURES_PER_VEHICLE * self.n
        seed_seq = np.random.SeedSequence(train_config.seed)
        init_seq, act_seq = seed_seq.spawn(2)
        init_rng = np.random.default_rng(init_seq)
        hidden = list(train_config.hidden_sizes)
        self.actor = MLP([input_dim, *hidden, 3 * self.n], init_rng)
        self.critic = MLP([input_dim, *hidden, 1], init_rng)
        self._rng = np.random.default_rng(act_seq)
        self.optimizer = None

    # -- forward paths ------------------------------------------------------

    def _split_actor(self, actor_out: np.ndarray
                     ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        n = self.n
        logits = actor_out[..., :n]
        means = actor_out[..., n:2 * n]
        raw_std = actor_out[..., 2 * n:]
        return logits, means, raw_std

    def forward(self, states: np.ndarray
                ) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Batch policy outputs: (offload_probs, means, stds, values)."""
        states = np.atleast_2d(states)
        actor_out, _ = self.actor.forward(states)
        logits, means, raw_std = self._split_actor(actor_out)
        value_out, _ = self.critic.forward(states)
        return (stable_sigmoid(logits), means,
                softplus(raw_std) + STD_FLOOR, value_out[:, 0])

    def sample(self, state: EnvState) -> ActionSample:
        """Draw a hybrid action and record everything PPO needs later."""
        probs, means, stds, values = self.forward(state.vector)
        p, mean, std = probs[0], means[0], stds[0]
        bits = (self._rng.random(self.n) < p).astype(float)
        raw = mean + std * self._rng.standard_normal(self.n)
        log_prob = float(bernoulli_log_prob(p, bits).sum()
                         + gaussian_log_prob(raw, mean, std).sum())
        action = EnvAction(offload=bits.astype(bool),
                           requests_ghz=self._squash(raw))
        return ActionSample(action=action, log_prob=log_prob, bits=bits,
                            raw_requests=raw, value=float(values[0]))

    def _squash(self, raw: np.ndarray) -> np.ndarray:
        """Map unbounded draws into (0, capacity]; floored against underflow."""
        return self.capacity_ghz * np.clip(stable_sigmoid(raw), SQUASH_FLOOR, 1.0)

    def policy(self, deterministic: bool = True) -> "AgentPolicy":
        return AgentPolicy(self, deterministic)

    def parameters(self) -> List[np.ndarray]:
        return self.actor.parameters() + self.critic.parameters()

    def ensure_optimizer(self):
        if self.optimizer is None:
            cfg = self.train_config
            cls = Adam if cfg.optimizer == "adam" else SGD
            self.optimizer = cls(self.parameters(), cfg.learning_rate)
        return self.optimizer


class AgentPolicy:
    """Environment-facing adapter around a trained agent."""

    def __init__(self, agent: PPOAgent, deterministic: bool) -> None:
        self._agent = agent
        self._deterministic = deterministic

    def act(self, state: EnvState) -> EnvAction:
        if not self._deterministic:
            return self._agent.sample(state).action
        probs, means, _, _ = self._agent.forward(state.vector)
        return EnvAction(offload=probs[0] >= 0.5,
                         requests_ghz=self._agent._squash(means[0]))


def policy_forward(agent: PPOAgent, state: EnvState
                   ) -> Tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """Single-state policy outputs: (offload_probs, means, stds, state_value)."""
    probs, means, stds, values = agent.forward(state.vector)
    return probs[0], means[0], stds[0], float(values[0])


def action_log_probs(agent: PPOAgent, states: np.ndarray, bits: np.ndarray,
                     raw_requests: np.ndarray) -> np.ndarray:
    """Batched log-probability of stored hybrid actions under the current weights."""
    actor_out, _ = agent.actor.forward(states)
    logits, means, raw_std = agent._split_actor(actor_out)
    probs = stable_sigmoid(logits)
    stds = softplus(raw_std) + STD_FLOOR
    return (bernoulli_log_prob(probs, bits).sum(axis=1)
            + gaussian_log_prob(raw_requests, means, stds).sum(axis=1))


# -- loss and gradients ---------------------------------------------------------------


def loss_and_grads(agent: PPOAgent, states: np.ndarray, bits: np.ndarray,
                   raw_requests: np.ndarray, log_prob_old: np.ndarray,
                   advantages: np.ndarray, returns: np.ndarray,
                   cfg: TrainConfig
                   ) -> Tuple[float, List[np.ndarray], Dict[str, float]]:
    """Combined PPO loss and its analytic gradients w.r.t. every weight.

    Gradient sketch: d(logp)/d(logit) = bit - p for the Bernoulli head;
    d(logp)/d(mean) = (x-mean)/std^2 and d(logp)/d(std) =
    ((x-mean)^2/std^3 - 1/std) for the Gaussian head with
    d(std)/d(raw) = sigmoid(raw); the surrogate routes ratio*A through
    whichever min/clip branch is active, and entropy contributes
    -logit*p*(1-p) per logit and 1/std per std.
    """
    batch = states.shape[0]
    eps = cfg.clip_ratio

    # Overflow/invalid warnings are silenced: a diverging run is expected to
    # produce non-finite numbers here, and train() detects and reports them.
    with np.errstate(over="ignore", invalid="ignore"):
        actor_out, actor_cache = agent.actor.forward(states)
        logits, means, raw_std = agent._split_actor(actor_out)
        probs = stable_sigmoid(logits)
        stds = softplus(raw_std) + STD_FLOOR
        value_out, critic_cache = agent.critic.forward(states)
        values = value_out[:, 0]

        log_prob_new = (bernoulli_log_prob(probs, bits).sum(axis=1)
                        + gaussian_log_prob(raw_requests, means, stds).sum(axis=1))
        ratio = np.exp(log_prob_new - log_prob_old)
        unclipped = ratio * advantages
        clipped = np.clip(ratio, 1.0 - eps, 1.0 + eps) * advantages
        surrogate_terms = np.minimum(unclipped, clipped)
        surrogate = surrogate_terms.mean()

        entropies = hybrid_entropy(probs, stds)
        entropy = entropies.mean()
        value_err = values - returns
        value_loss = np.mean(value_err ** 2)

        loss = (-surrogate + cfg.value_loss_weight * value_loss
                - cfg.entropy_coefficient * entropy)

        # -- backward ------------------------------------------------------
        inside_band = (ratio >= 1.0 - eps) & (ratio <= 1.0 + eps)
        pass_through = (unclipped <= clipped) | inside_band
        dsurr_dlp = np.where(pass_through, ratio * advantages, 0.0)
        dloss_dlp = -dsurr_dlp / batch                          # (B,)

        ent_scale = cfg.entropy_coefficient / batch
        dlogits = (dloss_dlp[:, None] * (bits - probs)
                   + ent_scale * logits * probs * (1.0 - probs))
        centered = raw_requests - means
        dmeans = dloss_dlp[:, None] * centered / stds ** 2
        dlp_dstd = centered ** 2 / stds ** 3 - 1.0 / stds
        dstds = dloss_dlp[:, None] * dlp_dstd - ent_scale / stds
        draw_std = dstds * stable_sigmoid(raw_std)

        grad_actor_out = np.concatenate([dlogits, dmeans, draw_std], axis=1)
        aw, ab = agent.actor.backward(actor_cache, grad_actor_out)

        dvalues = 2.0 * cfg.value_loss_weight * value_err / batch
        cw, cb = agent.critic.backward(critic_cache, dvalues[:, None])

    grads: List[np.ndarray] = []
    for w, b in zip(aw, ab):
        grads.extend((w, b))
    for w, b in zip(cw, cb):
        grads.extend((w, b))
    stats = {"surrogate": float(surrogate), "entropy": float(entropy),
             "value_loss": float(value_loss), "mean_ratio": float(np.mean(ratio))}
    return float(loss), grads, stats


# -- training ----------------------------------------------------------------------


def collect_trajectory(agent: PPOAgent, env: OffloadEnv, episodes: int) -> Trajectory:
    """Roll out the current policy for a number of full episodes."""
    states, bits, raws, lps, rewards, values, dones = [], [], [], [], [], [], []
    for _ in range(episodes):
        state = env.reset()
        done = False
        while not done:
            sample = agent.sample(state)
            outcome = env.step(sample.action)
            states.append(state.vector)
            bits.append(sample.bits)
            raws.append(sample.raw_requests)
            lps.append(sample.log_prob)
            rewards.append(outcome.reward)
            values.append(sample.value)
            dones.append(outcome.done)
            state, done = outcome.next_state, outcome.done
    return Trajectory(states=np.asarray(states), bits=np.asarray(bits),
                      raw_requests=np.asarray(raws), log_probs=np.asarray(lps),
                      rewards=np.asarray(rewards), values=np.asarray(values),
                      dones=np.asarray(dones, dtype=bool))


def train(env: OffloadEnv, cfg: TrainConfig,
          agent: Optional[PPOAgent] = None) -> Tuple[PPOAgent, List[float]]:
    """PPO training loop; returns the agent and per-iteration mean rewards.

    Each iteration collects fresh episodes, freezes advantages, then runs
    ``epochs_per_iteration`` full-batch update passes.  Fully
    deterministic given the env's and agent's seeds.  Note the episode
    horizon comes from the env config; build the env with
    ``episode_length = cfg.steps_per_episode`` to follow the schedule.
    """
    if agent is None:
        agent = PPOAgent(env.config, cfg)
    optimizer = agent.ensure_optimizer()
    params = agent.parameters()
    curve: List[float] = []
    for iteration in range(cfg.iterations):
        traj = collect_trajectory(agent, env, cfg.episodes_per_iteration)
        traj = compute_advantages(traj, cfg.discount)
        advantages = traj.advantages
        if cfg.normalize_advantages:
            advantages = (advantages - advantages.mean()) / (advantages.std() + 1e-8)
        for _ in range(cfg.epochs_per_iteration):
            loss, grads, _ = loss_and_grads(
                agent, traj.states, traj.bits, traj.raw_requests, traj.log_probs,
                advantages, traj.returns, cfg)
            if not np.isfinite(loss):
                raise TrainingDiverged(f"non-finite loss at iteration {iteration}")
            optimizer.update(params, grads)
            if not all(np.isfinite(p).all() for p in params):
                raise TrainingDiverged(
                    f"non-finite parameters after update at iteration {iteration}")
        curve.append(float(traj.rewards.mean()))
    return agent, curve


# -- checkpointing -----------------------------------------------------------------

CHECKPOINT_VERSION = 1


def _network_config_to_dict(cfg: NetworkConfig) -> dict:
    return dataclasses.asdict(cfg)


def network_config_from_dict(d: dict) -> NetworkConfig:
    d = dict(d)
    d["constants"] = CostConstants(**d["constants"])
    d["initial_alloc_ghz"] = tuple(d["initial_alloc_ghz"])
    return NetworkConfig(**d)


def train_config_from_dict(d: dict) -> TrainConfig:
    d = dict(d)
    d["hidden_sizes"] = tuple(d["hidden_sizes"])
    return TrainConfig(**d)


def save_checkpoint(path, agent: PPOAgent, iteration: int = 0,
                    curve: Optional[List[float]] = None,
                    env: Optional[OffloadEnv] = None) -> None:
    """Dump weights, optimizer moments, RNG states and configs to one file.

    Together with the env state this is enough to resume training
    bit-exactly; the env's RNG is included when ``env`` is passed.
    """
    payload = {
        "version": np.asarray(CHECKPOINT_VERSION),
        "actor_flat": agent.actor.get_flat(),
        "critic_flat": agent.critic.get_flat(),
        "agent_rng": np.asarray(json.dumps(agent._rng.bit_generator.state)),
        "network_config": np.asarray(json.dumps(_network_config_to_dict(agent.network_config))),
        "train_config": np.asarray(json.dumps(dataclasses.asdict(agent.train_config))),
        "iteration": np.asarray(iteration),
        "curve": np.asarray(curve if curve is not None else []),
    }
    opt = agent.optimizer
    if isinstance(opt, Adam):
        payload["adam_m"] = np.concatenate([m.ravel() for m in opt.m])
        payload["adam_v"] = np.concatenate([v.ravel() for v in opt.v])
        payload["adam_t"] = np.asarray(opt.t)
    if env is not None:
        payload["env_rng"] = np.asarray(json.dumps(env._rng.bit_generator.state))
    with open(path, "wb") as fh:
        np.savez(fh, **payload)


def load_checkpoint(path, env: Optional[OffloadEnv] = None
                    ) -> Tuple[PPOAgent, int, List[float]]:
    """Rebuild an agent (and optionally restore an env's RNG) from a checkpoint."""
    with np.load(path, allow_pickle=False) as data:
        version = int(data["version"])
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        net_cfg = network_config_from_dict(json.loads(str(data["network_config"])))
        train_cfg = train_config_from_dict(json.loads(str(data["train_config"])))
        agent = PPOAgent(net_cfg, train_cfg)
        agent.actor.set_flat(data["actor_flat"])
        agent.critic.set_flat(data["critic_flat"])
        agent._rng.bit_generator.state = json.loads(str(data["agent_rng"]))
        if "adam_m" in data:
            opt = agent.ensure_optimizer()
            offset = 0
            flat_m, flat_v = data["adam_m"], data["adam_v"]
            for m, v in zip(opt.m, opt.v):
                m[...] = flat_m[offset:offset + m.size].reshape(m.shape)
                v[...] = flat_v[offset:offset + v.size].reshape(v.shape)
                offset += m.size
            opt.t = int(data["adam_t"])
        if env is not None and "env_rng" in data:
            env._rng.bit_generator.state = json.loads(str(data["env_rng"]))
        iteration = int(data["iteration"])
        curve = [float(x) for x in data["curve"]]
    return agent, iteration, curve
