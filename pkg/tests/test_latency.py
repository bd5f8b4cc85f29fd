"""Latency-model tests: frozen arithmetic oracles plus shape properties.

The frozen values were recomputed term by term with independent
calculator arithmetic before being asserted here.
"""

import random

import pytest

from vtnsim.auth import auth_overhead_bytes
from vtnsim.latency import (
    AllocationConstraintError,
    CloudProfile,
    CostConstants,
    LatencyDomainError,
    VehicleProfile,
    cloud_latency,
    local_latency,
    make_profile,
    per_vehicle_latencies,
    total_latency,
)

CONSTANTS = CostConstants()


def profile(task_bytes=189.0, payload=50.0, f=1.0, up=100.0, down=100.0,
            sign=36_000.0, verify=94_000.0):
    return VehicleProfile(compute_ghz=f, speed_mps=25.0, payload_bytes=payload,
                          task_bytes=task_bytes, up_mbps=up, down_mbps=down,
                          sign_cycles=sign, verify_cycles=verify)


# -- local execution ---------------------------------------------------------


def test_local_latency_frozen_value():
    # 189 B * 130_000 cycles/B / 1e9 cycles/s = 24.570 ms
    assert local_latency(profile()) == pytest.approx(24.570e-3, rel=1e-12)


def test_local_latency_zero_bytes_is_zero():
    assert local_latency(profile(task_bytes=0.0, payload=0.0)) == 0.0


def test_local_latency_halves_when_compute_doubles():
    assert local_latency(profile(f=2.0)) == pytest.approx(local_latency(profile()) / 2)


def test_nonpositive_compute_rejected():
    with pytest.raises(LatencyDomainError):
        profile(f=0.0)
    with pytest.raises(LatencyDomainError):
        profile(f=-1.0)


# -- cloud execution ----------------------------------------------------------


def test_cloud_latency_frozen_term_by_term():
    # up = 189*8/1e8, proc = 189*130000/3e9, down = up, prop = 2e5/3e8
    expected = 1.512e-5 + 8.19e-3 + 1.512e-5 + 2e5 / 3e8
    got = cloud_latency(profile(), alloc_ghz=3.0, constants=CONSTANTS,
                        congestion_divisor=1)
    assert got == pytest.approx(expected, rel=1e-12)
    assert got == pytest.approx(8.8869067e-3, rel=1e-6)


def test_congestion_divisor_scales_only_transmission():
    base = cloud_latency(profile(), 3.0, CONSTANTS, congestion_divisor=1)
    congested = cloud_latency(profile(), 3.0, CONSTANTS, congestion_divisor=2)
    assert congested - base == pytest.approx(2 * 1.512e-5, rel=1e-9)


def test_zero_distance_removes_propagation():
    near = CostConstants(cloud_distance_km=0.0)
    got = cloud_latency(profile(), 3.0, near, 1)
    assert got == pytest.approx(8.19e-3 + 2 * 1.512e-5, rel=1e-12)


def test_zero_byte_offload_is_pure_propagation():
    got = cloud_latency(profile(task_bytes=0.0, payload=0.0), 3.0, CONSTANTS, 1)
    assert got == pytest.approx(2e5 / 3e8, rel=1e-12)


def test_cloud_latency_input_validation():
    with pytest.raises(LatencyDomainError):
        cloud_latency(profile(), 0.0, CONSTANTS, 1)
    with pytest.raises(LatencyDomainError):
        cloud_latency(profile(), 3.0, CONSTANTS, 0)
    with pytest.raises(LatencyDomainError):
        profile(up=0.0)


# -- totals --------------------------------------------------------------------


def test_total_latency_all_local_is_sum_of_locals():
    vehicles = [profile(), profile(task_bytes=500.0, payload=100.0)]
    cloud = CloudProfile(20.0, (3.0, 3.0))
    got = total_latency([False, False], vehicles, cloud, CONSTANTS)
    assert got == pytest.approx(sum(local_latency(v) for v in vehicles), rel=1e-12)


def test_total_latency_single_offloader_matches_cloud_latency():
    v = profile()
    cloud = CloudProfile(20.0, (3.0,))
    got = total_latency([True], [v], cloud, CONSTANTS)
    assert got == pytest.approx(cloud_latency(v, 3.0, CONSTANTS, 1), rel=1e-12)


def test_total_latency_two_symmetric_offloaders():
    v = profile()
    cloud = CloudProfile(20.0, (3.0, 3.0))
    got = total_latency([True, True], [v, v], cloud, CONSTANTS)
    assert got == pytest.approx(2 * cloud_latency(v, 3.0, CONSTANTS, 2), rel=1e-12)


def test_total_latency_reports_violating_sum():
    v = profile()
    cloud = CloudProfile(20.0, (15.0, 15.0))
    with pytest.raises(AllocationConstraintError, match="30"):
        total_latency([True, True], [v, v], cloud, CONSTANTS)
    # same allocations are fine when only one vehicle offloads
    total_latency([True, False], [v, v], cloud, CONSTANTS)


def test_total_latency_checks_lengths():
    with pytest.raises(LatencyDomainError):
        total_latency([True], [profile(), profile()], CloudProfile(20.0, (3.0, 3.0)),
                      CONSTANTS)


def test_per_vehicle_latencies_match_choices():
    vehicles = [profile(), profile()]
    cloud = CloudProfile(20.0, (3.0, 3.0))
    lats = per_vehicle_latencies([True, False], vehicles, cloud, CONSTANTS)
    assert lats[0] == pytest.approx(cloud_latency(vehicles[0], 3.0, CONSTANTS, 1))
    assert lats[1] == pytest.approx(local_latency(vehicles[1]))


# -- authentication-mode profiles --------------------------------------------------


def test_make_profile_with_ibc_adds_overhead(k256):
    overhead = auth_overhead_bytes(k256)
    v = make_profile(50.0, with_ibc=True, overhead_bytes=overhead,
                     constants=CONSTANTS)
    assert v.task_bytes == 50.0 + overhead
    assert 90 <= v.task_bytes <= 350
    assert (v.sign_cycles, v.verify_cycles) == (36_000.0, 94_000.0)


def test_make_profile_without_ibc_travels_bare(k256):
    v = make_profile(50.0, with_ibc=False, overhead_bytes=auth_overhead_bytes(k256),
                     constants=CONSTANTS)
    assert v.task_bytes == 50.0
    assert v.sign_cycles == v.verify_cycles == CONSTANTS.baseline_cycles_per_byte


def test_ibc_size_penalty_constant_across_payloads(k256):
    overhead = auth_overhead_bytes(k256)
    deltas = set()
    for payload in (0.0, 50.0, 30_000.0, 300_000.0):
        w = make_profile(payload, True, overhead, CONSTANTS)
        wo = make_profile(payload, False, overhead, CONSTANTS)
        deltas.add(w.task_bytes - wo.task_bytes)
    assert deltas == {float(overhead)}


def test_with_ibc_never_faster_pointwise(k256):
    overhead = auth_overhead_bytes(k256)
    rng = random.Random(33)
    for _ in range(100):
        payload = rng.uniform(0, 1e5)
        kwargs = dict(compute_ghz=rng.uniform(0.5, 4), up_mbps=rng.uniform(100, 1000),
                      down_mbps=rng.uniform(100, 1000))
        w = make_profile(payload, True, overhead, CONSTANTS, **kwargs)
        wo = make_profile(payload, False, overhead, CONSTANTS, **kwargs)
        assert local_latency(w) >= local_latency(wo)
        alloc = rng.uniform(0.5, 20)
        div = rng.randrange(1, 10)
        assert cloud_latency(w, alloc, CONSTANTS, div) >= \
            cloud_latency(wo, alloc, CONSTANTS, div)


# -- monotonicity properties ---------------------------------------------------------


def test_latency_monotonic_under_perturbation():
    rng = random.Random(44)
    for _ in range(200):
        task = rng.uniform(1, 1e6)
        f = rng.uniform(0.2, 4)
        rate = rng.uniform(100, 1000)
        alloc = rng.uniform(0.5, 20)
        div = rng.randrange(1, 20)
        v = profile(task_bytes=task, payload=0.0, f=f, up=rate, down=rate)
        bigger = profile(task_bytes=task * (1 + rng.uniform(0.01, 1)), payload=0.0,
                         f=f, up=rate, down=rate)
        faster = profile(task_bytes=task, payload=0.0, f=f * 1.5, up=rate, down=rate)
        quicker_link = profile(task_bytes=task, payload=0.0, f=f,
                               up=rate * 1.5, down=rate * 1.5)
        assert local_latency(bigger) >= local_latency(v)
        assert local_latency(faster) <= local_latency(v)
        assert cloud_latency(bigger, alloc, CONSTANTS, div) >= \
            cloud_latency(v, alloc, CONSTANTS, div)
        assert cloud_latency(quicker_link, alloc, CONSTANTS, div) <= \
            cloud_latency(v, alloc, CONSTANTS, div)
        assert cloud_latency(v, alloc * 1.5, CONSTANTS, div) <= \
            cloud_latency(v, alloc, CONSTANTS, div)
        # growing the offloaded set never shrinks transmission time
        assert cloud_latency(v, alloc, CONSTANTS, div + 1) >= \
            cloud_latency(v, alloc, CONSTANTS, div)
