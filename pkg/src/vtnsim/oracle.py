"""Brute-force baselines for the offloading problem.

For a frozen, jitter-free instance these routines certify optimality the
expensive way: a closed-form split of the cloud budget inside a fixed
offloaded set, and exhaustive enumeration of all 2^n decision vectors.
They exist to bound the RL agent's optimality gap on small instances
and to cross-check the environment's reward arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

from .latency import GHZ, CloudProfile, CostConstants, VehicleProfile, total_latency

EXHAUSTIVE_LIMIT = 20  # 2^n enumeration budget


class OracleBudgetError(ValueError):
    """Instance too large for exhaustive enumeration."""


@dataclass(frozen=True)
class InstanceSpec:
    """A frozen offloading instance: fixed vehicles, capacity and constants."""

    vehicles: Tuple[VehicleProfile, ...]
    capacity_ghz: float
    constants: CostConstants

    @property
    def n(self) -> int:
        return len(self.vehicles)


@dataclass(frozen=True)
class OracleResult:
    """Certified optimum: decisions, allocations for offloaders, and the latency."""

    decisions: Tuple[bool, ...]
    allocations_ghz: Tuple[float, ...]
    total_latency_s: float


def processing_weight(vehicle: VehicleProfile) -> float:
    """Cloud-processing cycle demand of one task."""
    return vehicle.task_bytes * vehicle.crypto_cycles


def optimal_allocation(weights: Sequence[float], capacity_ghz: float) -> Tuple[float, ...]:
    """Split the cloud budget to minimize summed processing time.

    Minimizing sum(w_i / f_i) under sum(f_i) = F is solved exactly by
    f_i = F * sqrt(w_i) / sum_j sqrt(w_j) (Lagrange stationarity, or
    Cauchy-Schwarz for the matching lower bound).  Transmission and
    propagation do not depend on the split, so this is also the optimal
    allocation for full cloud latency within a fixed offloaded set.
    """
    if not weights:
        raise ValueError("cannot allocate cloud cycles to an empty offload set")
    if capacity_ghz <= 0:
        raise ValueError("cloud capacity must be positive")
    if any(w <= 0 for w in weights):
        raise ValueError("processing weights must be strictly positive")
    roots = [math.sqrt(w) for w in weights]
    denom = sum(roots)
    return tuple(capacity_ghz * r / denom for r in roots)


def exhaustive_best(instance: InstanceSpec) -> OracleResult:
    """Global minimizer of total latency over every offload decision vector.

    Each of the 2^n subsets gets the closed-form allocation and the
    congestion divisor of its own size; candidates are visited in order
    of increasing offload count, and only strict improvements are kept,
    so ties break toward running locally.
    """
    n = instance.n
    if n > EXHAUSTIVE_LIMIT:
        raise OracleBudgetError(
            f"{n} vehicles means 2^{n} decision vectors; limit is {EXHAUSTIVE_LIMIT}")
    weights = [processing_weight(v) for v in instance.vehicles]

    best = None
    for mask in sorted(range(1 << n), key=lambda m: (m.bit_count(), m)):
        decisions = tuple(bool(mask >> i & 1) for i in range(n))
        offloaded = [i for i in range(n) if decisions[i]]
        allocs = [0.0] * n
        if offloaded:
            shares = optimal_allocation([weights[i] for i in offloaded],
                                        instance.capacity_ghz)
            for i, share in zip(offloaded, shares):
                allocs[i] = share
        total = total_latency(decisions, instance.vehicles,
                              CloudProfile(instance.capacity_ghz, tuple(allocs)),
                              instance.constants)
        if best is None or total < best.total_latency_s:
            best = OracleResult(decisions, tuple(allocs), total)
    return best


def optimality_gap(achieved_total_s: float, instance: InstanceSpec) -> float:
    """Relative excess of an achieved total latency over the certified optimum."""
    optimum = exhaustive_best(instance).total_latency_s
    return (achieved_total_s - optimum) / optimum
