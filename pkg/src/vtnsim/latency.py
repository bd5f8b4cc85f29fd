"""Deterministic latency model for authenticated task execution.

Local execution burns the signing+verification cycle cost on the
vehicle's own CPU.  Offloading pays upload, cloud processing, download
and round-trip propagation; simultaneous offloaders share the link, so
each sees its nominal data rate divided by the number of vehicles
offloading in the same step (the congestion divisor).

Unit conventions: task sizes in bytes (x8 for transmission), compute in
GHz (1e9 cycles/s), data rates in Mbps (1e6 bit/s), distances in km,
results in seconds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

GHZ = 1e9
MBPS = 1e6
BITS_PER_BYTE = 8

# Effective per-byte processing cost when tasks are not IBC-authenticated;
# the model needs some intrinsic cost or unauthenticated execution would be free.
DEFAULT_BASELINE_CYCLES_PER_BYTE = 10_000.0


class LatencyDomainError(ValueError):
    """A latency computation was fed a non-physical parameter."""


class AllocationConstraintError(ValueError):
    """Cloud-cycle allocations violate the shared-capacity constraint."""


@dataclass(frozen=True)
class CostConstants:
    """Cycle costs and propagation geometry shared by all vehicles."""

    sign_cycles_per_byte: float = 36_000.0
    verify_cycles_per_byte: float = 94_000.0
    light_speed_mps: float = 3.0e8
    cloud_distance_km: float = 100.0
    baseline_cycles_per_byte: float = DEFAULT_BASELINE_CYCLES_PER_BYTE

    def __post_init__(self) -> None:
        for name in ("sign_cycles_per_byte", "verify_cycles_per_byte",
                     "light_speed_mps", "baseline_cycles_per_byte"):
            if getattr(self, name) <= 0:
                raise LatencyDomainError(f"{name} must be positive")
        if self.cloud_distance_km < 0:
            raise LatencyDomainError("cloud_distance_km must be non-negative")


@dataclass(frozen=True)
class VehicleProfile:
    """Per-vehicle task and link parameters for one decision step.

    ``task_bytes`` is the on-the-wire size (payload plus any auth
    overhead); ``sign_cycles``/``verify_cycles`` are the effective
    per-byte processing costs for this task's authentication mode.
    """

    compute_ghz: float
    speed_mps: float
    payload_bytes: float
    task_bytes: float
    up_mbps: float
    down_mbps: float
    sign_cycles: float
    verify_cycles: float

    def __post_init__(self) -> None:
        if self.compute_ghz <= 0:
            raise LatencyDomainError("vehicle compute capacity must be positive")
        if self.up_mbps <= 0 or self.down_mbps <= 0:
            raise LatencyDomainError("link rates must be positive")
        if self.task_bytes < self.payload_bytes:
            raise LatencyDomainError("task bytes cannot undercut the raw payload")
        if self.payload_bytes < 0:
            raise LatencyDomainError("payload size must be non-negative")
        if self.sign_cycles <= 0 or self.verify_cycles <= 0:
            raise LatencyDomainError("cycle costs must be positive")

    @property
    def crypto_cycles(self) -> float:
        return self.sign_cycles + self.verify_cycles


@dataclass(frozen=True)
class CloudProfile:
    """Total cloud capacity and the per-vehicle dedicated shares."""

    capacity_ghz: float = 20.0
    allocations_ghz: Tuple[float, ...] = ()

    def check(self, offloaded: Sequence[bool]) -> None:
        """Enforce the shared-capacity constraint over the offloaded set."""
        used = 0.0
        for off, alloc in zip(offloaded, self.allocations_ghz):
            if not off:
                continue
            if not 0 < alloc <= self.capacity_ghz:
                raise AllocationConstraintError(
                    f"allocation {alloc} GHz outside (0, {self.capacity_ghz}]")
            used += alloc
        if used > self.capacity_ghz * (1 + 1e-9):
            raise AllocationConstraintError(
                f"offloaded allocations sum to {used:.6f} GHz, "
                f"exceeding capacity {self.capacity_ghz} GHz")


def make_profile(payload_bytes: float, with_ibc: bool, overhead_bytes: int,
                 constants: CostConstants, *, compute_ghz: float = 1.0,
                 speed_mps: float = 25.0, up_mbps: float = 100.0,
                 down_mbps: float = 100.0) -> VehicleProfile:
    """Vehicle profile for a task in the chosen authentication mode.

    With IBC the wire size grows by the envelope overhead and processing
    costs the signing+verification cycles; without it the task travels
    bare and pays only the baseline per-byte processing cost.
    """
    if with_ibc:
        task_bytes = payload_bytes + overhead_bytes
        sign, verify = constants.sign_cycles_per_byte, constants.verify_cycles_per_byte
    else:
        task_bytes = payload_bytes
        sign = verify = constants.baseline_cycles_per_byte
    return VehicleProfile(compute_ghz=compute_ghz, speed_mps=speed_mps,
                          payload_bytes=payload_bytes, task_bytes=task_bytes,
                          up_mbps=up_mbps, down_mbps=down_mbps,
                          sign_cycles=sign, verify_cycles=verify)


def local_latency(vehicle: VehicleProfile) -> float:
    """Seconds to process the task on the vehicle's own CPU."""
    return vehicle.task_bytes * vehicle.crypto_cycles / (vehicle.compute_ghz * GHZ)


def cloud_latency(vehicle: VehicleProfile, alloc_ghz: float,
                  constants: CostConstants, congestion_divisor: int = 1) -> float:
    """Seconds to offload: upload + cloud processing + download + propagation.

    ``congestion_divisor`` is the number of vehicles offloading in the
    same step; it divides both link rates and leaves the other terms
    untouched.
    """
    if alloc_ghz <= 0:
        raise LatencyDomainError("cloud allocation must be positive")
    if congestion_divisor < 1:
        raise LatencyDomainError("congestion divisor must be at least 1")
    bits = vehicle.task_bytes * BITS_PER_BYTE
    upload = bits / (vehicle.up_mbps * MBPS / congestion_divisor)
    processing = vehicle.task_bytes * vehicle.crypto_cycles / (alloc_ghz * GHZ)
    download = bits / (vehicle.down_mbps * MBPS / congestion_divisor)
    propagation = 2 * (constants.cloud_distance_km * 1000.0) / constants.light_speed_mps
    return upload + processing + download + propagation


def total_latency(decisions: Sequence[bool], vehicles: Sequence[VehicleProfile],
                  cloud: CloudProfile, constants: CostConstants) -> float:
    """Summed latency over all vehicles for one offload decision vector.

    Offloaded vehicles share links (divisor = offload count) and must
    respect the cloud capacity constraint; the rest run locally.
    """
    if not len(decisions) == len(vehicles) == len(cloud.allocations_ghz):
        raise LatencyDomainError(
            f"decision/vehicle/allocation lengths differ: "
            f"{len(decisions)}/{len(vehicles)}/{len(cloud.allocations_ghz)}")
    cloud.check(decisions)
    divisor = max(1, sum(map(bool, decisions)))
    total = 0.0
    for off, vehicle, alloc in zip(decisions, vehicles, cloud.allocations_ghz):
        if off:
            total += cloud_latency(vehicle, alloc, constants, divisor)
        else:
            total += local_latency(vehicle)
    return total


def per_vehicle_latencies(decisions: Sequence[bool],
                          vehicles: Sequence[VehicleProfile],
                          cloud: CloudProfile,
                          constants: CostConstants) -> Tuple[float, ...]:
    """Chosen-path latency of each vehicle under the same congestion coupling."""
    cloud.check(decisions)
    divisor = max(1, sum(map(bool, decisions)))
    return tuple(
        cloud_latency(v, alloc, constants, divisor) if off else local_latency(v)
        for off, v, alloc in zip(decisions, vehicles, cloud.allocations_ghz))
