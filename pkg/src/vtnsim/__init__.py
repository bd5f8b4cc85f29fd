"""Authenticated task-offloading simulator for cloud-based vehicular twin networks.

The pieces: identity-based signing and verification of vehicle tasks
(:mod:`vtnsim.curve`, :mod:`vtnsim.auth`), a local-vs-cloud latency
model (:mod:`vtnsim.latency`), an offloading RL environment with a PPO
agent (:mod:`vtnsim.env`, :mod:`vtnsim.ppo`), brute-force optimality
oracles (:mod:`vtnsim.oracle`), and a sweep/report CLI
(:mod:`vtnsim.cli`).
"""

__version__ = "0.1.0"

from .auth import (  # noqa: F401
    Pseudonym,
    SignedTask,
    TAContext,
    TwinRecord,
    VehicleCredentials,
    Verdict,
    auth_overhead_bytes,
    derive_ephemeral_keys,
    sign_task,
    ta_setup,
    verify_task,
)
from .curve import Curve, get_curve, load_curve_file  # noqa: F401
from .env import (  # noqa: F401
    EnvAction,
    EnvState,
    NetworkConfig,
    OffloadEnv,
    evaluate_policy,
    frozen_instance,
    project_action,
)
from .latency import (  # noqa: F401
    CloudProfile,
    CostConstants,
    VehicleProfile,
    cloud_latency,
    local_latency,
    make_profile,
    total_latency,
)
from .oracle import InstanceSpec, exhaustive_best, optimal_allocation  # noqa: F401
from .ppo import PPOAgent, TrainConfig, load_checkpoint, save_checkpoint, train  # noqa: F401
