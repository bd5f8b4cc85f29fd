"""Registration, tracking, signing and envelope tests for the IBC layer."""

import random

import pytest

from vtnsim import auth
from vtnsim.auth import (
    Pseudonym,
    SignedTask,
    TwinRecord,
    UnknownIdentityError,
    Verdict,
    WireFormatError,
    alias_digest,
    auth_overhead_bytes,
    decode_signed_task,
    derive_ephemeral_keys,
    encode_signed_task,
    sign_task,
    ta_setup,
    verify_task,
)

NOW = 1_700_000_000_000  # fixed envelope clock for tests


def fresh_signer(curve, ta, rng, payload=b"brake-telemetry", t=NOW):
    creds, _ = ta.register_entity()
    sk, pk = derive_ephemeral_keys(curve, rng)
    return creds, sign_task(curve, creds, sk, pk, payload, t)


# -- TA setup and registration ---------------------------------------------------


def test_ta_public_key_matches_master_secret(toy):
    ta = ta_setup(toy, seed=0)
    assert ta.public_key == toy.mul(ta._sk, toy.generator)
    assert toy.is_on_curve(ta.public_key)


def test_distinct_seeds_give_distinct_master_keys(toy):
    assert ta_setup(toy, seed=1)._sk != ta_setup(toy, seed=2)._sk


def test_seeded_master_key_regression_anchor(toy, k256):
    # Frozen reproducibility anchors for the seeded RNG path.
    assert ta_setup(toy, seed=42)._sk == 4
    assert ta_setup(k256, seed=42)._sk == \
        0x23B8C1E9392456DE3EB13B9046685257BDD640FB06671AD11C80317FA3B1799E


def test_issued_credentials_satisfy_alias_identity(toy):
    # alias_key * G - binding * pk_TA == SID1, the identity verification rests on.
    ta = ta_setup(toy, seed=3)
    for _ in range(50):
        creds, _ = ta.register_entity()
        binding = toy.hash_to_scalar(
            2, [toy.encode_point(creds.pseudonym.point), creds.pseudonym.masked_id])
        lhs = toy.mul(creds.alias_key, toy.generator)
        rhs = toy.add(creds.pseudonym.point, toy.mul(binding, ta.public_key))
        assert lhs == rhs


def test_reregistration_keeps_identity_but_refreshes_pseudonym(toy):
    ta = ta_setup(toy, seed=4)
    first, handle1 = ta.register_entity(long_term_seed=99)
    second, handle2 = ta.register_entity(long_term_seed=99)
    assert first.identity == second.identity
    assert handle1 == handle2
    assert first.pseudonym != second.pseudonym


def test_tracking_roundtrip(k256):
    ta = ta_setup(k256, seed=5)
    for _ in range(10):
        creds, _ = ta.register_entity()
        assert ta.track_identity(creds.pseudonym) == creds.identity


def test_tracking_rejects_pseudonym_from_other_ta(toy):
    ta_a = ta_setup(toy, seed=6)
    ta_b = ta_setup(toy, seed=7)
    creds, _ = ta_a.register_entity()
    with pytest.raises(UnknownIdentityError):
        ta_b.track_identity(creds.pseudonym)


def test_tracking_rejects_every_single_bit_flip_in_mask(toy):
    # One registration per TA: a flipped mask can then never unmask to a
    # registered identity, so rejection is deterministic.
    flips, round_seed = 0, 0
    while flips < 100:
        ta = ta_setup(toy, seed=800 + round_seed)
        round_seed += 1
        creds, _ = ta.register_entity()
        masked = creds.pseudonym.masked_id
        for bit in range(len(masked) * 8):
            flipped = bytearray(masked)
            flipped[bit // 8] ^= 1 << (bit % 8)
            tampered = Pseudonym(creds.pseudonym.point, bytes(flipped))
            with pytest.raises(UnknownIdentityError):
                ta.track_identity(tampered)
            flips += 1


def test_twin_record_mirrors_credentials(toy):
    ta = ta_setup(toy, seed=9)
    creds, handle = ta.register_entity()
    twin = TwinRecord.from_credentials(creds, handle, compute_ghz=1.0, speed_mps=25.0)
    assert twin.identity == creds.identity
    assert twin.pseudonym == creds.pseudonym
    assert twin.alias_key == creds.alias_key
    assert twin.tracking_handle == handle
    assert (twin.compute_ghz, twin.speed_mps) == (1.0, 25.0)


# -- ephemeral keys and alias digests ----------------------------------------------


def test_ephemeral_keypair_definition(toy):
    rng = random.Random(10)
    sk, pk = derive_ephemeral_keys(toy, rng)
    assert 1 <= sk < toy.q
    assert pk == toy.mul(sk, toy.generator)


def test_consecutive_ephemeral_keys_differ(k256):
    rng = random.Random(11)
    assert derive_ephemeral_keys(k256, rng) != derive_ephemeral_keys(k256, rng)


def test_ephemeral_keys_reproducible_from_seed(toy):
    a = derive_ephemeral_keys(toy, random.Random(12))
    b = derive_ephemeral_keys(toy, random.Random(12))
    assert a == b


def test_alias_digest_properties(k256):
    ta = ta_setup(k256, seed=13)
    creds, _ = ta.register_entity()
    d1 = alias_digest(k256, creds.pseudonym, NOW)
    assert d1 == alias_digest(k256, creds.pseudonym, NOW)
    assert d1 != alias_digest(k256, creds.pseudonym, NOW + 1)
    assert len(d1) == 2 * k256.q_bytes


# -- sign / verify -----------------------------------------------------------------


def test_sign_verify_roundtrip_many_payloads(toy):
    ta = ta_setup(toy, seed=14)
    rng = random.Random(14)
    creds, _ = ta.register_entity()
    for _ in range(300):
        sk, pk = derive_ephemeral_keys(toy, rng)
        payload = rng.randbytes(rng.randrange(0, 64))
        task = sign_task(toy, creds, sk, pk, payload, NOW)
        assert verify_task(toy, task, ta.public_key, NOW) is Verdict.VALID


def test_signing_is_deterministic_given_inputs(toy):
    ta = ta_setup(toy, seed=15)
    creds, _ = ta.register_entity()
    sk, pk = derive_ephemeral_keys(toy, random.Random(15))
    a = sign_task(toy, creds, sk, pk, b"same", NOW)
    b = sign_task(toy, creds, sk, pk, b"same", NOW)
    assert a == b
    assert 0 <= a.signature < toy.q


def test_verify_flags_stale_timestamps_inclusive_window(toy):
    ta = ta_setup(toy, seed=16)
    _, task = fresh_signer(toy, ta, random.Random(16))
    window = 1000
    assert verify_task(toy, task, ta.public_key, NOW + window, window) is Verdict.VALID
    assert verify_task(toy, task, ta.public_key, NOW + window + 1,
                       window) is Verdict.STALE_TIMESTAMP
    # replay long after signing, and a timestamp from the far future
    assert verify_task(toy, task, ta.public_key, NOW + 10 * window,
                       window) is Verdict.STALE_TIMESTAMP
    assert verify_task(toy, task, ta.public_key, NOW - 10 * window,
                       window) is Verdict.STALE_TIMESTAMP


def test_verify_flags_revoked_pseudonym(toy):
    ta = ta_setup(toy, seed=17)
    creds, task = fresh_signer(toy, ta, random.Random(17))
    revoked = {creds.pseudonym.encode(toy)}
    assert verify_task(toy, task, ta.public_key, NOW, revoked=revoked) is Verdict.REVOKED
    assert verify_task(toy, task, ta.public_key, NOW, revoked=set()) is Verdict.VALID


def test_verify_rejects_signature_shifted_by_group_order(toy):
    ta = ta_setup(toy, seed=18)
    _, task = fresh_signer(toy, ta, random.Random(18))
    shifted = SignedTask(task.payload, task.timestamp_ms, task.public_key,
                         task.pseudonym, task.signature + toy.q)
    assert verify_task(toy, shifted, ta.public_key, NOW) is Verdict.BAD_SIGNATURE


def test_verify_flags_malformed_points(toy):
    ta = ta_setup(toy, seed=19)
    creds, task = fresh_signer(toy, ta, random.Random(19))
    off_curve = SignedTask(task.payload, task.timestamp_ms, (5, 2),
                           task.pseudonym, task.signature)
    assert verify_task(toy, off_curve, ta.public_key, NOW) is Verdict.MALFORMED_POINT
    identity_pk = SignedTask(task.payload, task.timestamp_ms, None,
                             task.pseudonym, task.signature)
    assert verify_task(toy, identity_pk, ta.public_key, NOW) is Verdict.MALFORMED_POINT
    bad_mask = SignedTask(task.payload, task.timestamp_ms, task.public_key,
                          Pseudonym(task.pseudonym.point, b"\x00"), task.signature)
    assert verify_task(toy, bad_mask, ta.public_key, NOW) is Verdict.MALFORMED_POINT


def test_wire_tamper_fuzz_never_verifies(k256):
    """Flipping any single bit beyond the length prefix must not verify.

    Tampered envelopes either fail to parse (malformed) or verify to a
    non-valid verdict; both count as rejections.  Runs on the 256-bit
    curve, where the residual chance of an algebraic collision in the
    verification equation is ~2^-256; the toy curve's 19-element scalar
    field would collide at rate ~1/19 and is unsuitable for this fuzz.
    """
    ta = ta_setup(k256, seed=20)
    rng = random.Random(20)
    creds, _ = ta.register_entity()
    sk, pk = derive_ephemeral_keys(k256, rng)
    task = sign_task(k256, creds, sk, pk, b"payload-under-test", NOW)
    wire = encode_signed_task(k256, task)
    bits = rng.sample(range(4 * 8, len(wire) * 8), 60)
    for bit in bits:
        tampered = bytearray(wire)
        tampered[bit // 8] ^= 1 << (bit % 8)
        try:
            parsed = decode_signed_task(k256, bytes(tampered))
        except WireFormatError:
            continue
        assert verify_task(k256, parsed, ta.public_key, NOW) is not Verdict.VALID


def test_envelopes_share_only_the_pseudonym(toy):
    ta = ta_setup(toy, seed=21)
    rng = random.Random(21)
    creds, _ = ta.register_entity()
    sk1, pk1 = derive_ephemeral_keys(toy, rng)
    sk2, pk2 = derive_ephemeral_keys(toy, rng)
    t1 = sign_task(toy, creds, sk1, pk1, b"first", NOW)
    t2 = sign_task(toy, creds, sk2, pk2, b"second", NOW + 1)
    assert t1.pseudonym == t2.pseudonym
    assert t1.payload != t2.payload
    assert t1.timestamp_ms != t2.timestamp_ms
    assert t1.public_key != t2.public_key
    assert t1.signature != t2.signature


# -- overhead and wire format --------------------------------------------------------


def test_auth_overhead_from_encoding_widths(toy, k256):
    # 8-byte timestamp + three point-width fields + one scalar width.
    assert auth_overhead_bytes(toy) == 8 + 3 * (toy.p_bytes + 2) + toy.q_bytes == 18
    assert auth_overhead_bytes(k256) == 8 + 3 * 34 + 32 == 142
    assert 40 <= auth_overhead_bytes(k256) <= 300


def test_overhead_independent_of_payload(toy):
    ta = ta_setup(toy, seed=22)
    rng = random.Random(22)
    for size in (0, 1, 50, 4096):
        _, task = fresh_signer(toy, ta, rng, payload=bytes(size))
        wire = encode_signed_task(toy, task)
        assert len(wire) - 4 - size == auth_overhead_bytes(toy)


def test_wire_layout_bit_exact(toy):
    ta = ta_setup(toy, seed=23)
    creds, _ = ta.register_entity()
    sk, pk = derive_ephemeral_keys(toy, random.Random(23))
    task = sign_task(toy, creds, sk, pk, b"abc", NOW)
    expected = (b"\x00\x00\x00\x03" + b"abc"
                + NOW.to_bytes(8, "big")
                + toy.encode_point(pk)
                + toy.encode_point(creds.pseudonym.point)
                + creds.pseudonym.masked_id
                + task.signature.to_bytes(1, "big"))
    assert encode_signed_task(toy, task) == expected


def test_wire_roundtrip(k256):
    ta = ta_setup(k256, seed=24)
    _, task = fresh_signer(k256, ta, random.Random(24))
    assert decode_signed_task(k256, encode_signed_task(k256, task)) == task


def test_wire_decode_rejects_bad_lengths(toy):
    ta = ta_setup(toy, seed=25)
    _, task = fresh_signer(toy, ta, random.Random(25))
    wire = encode_signed_task(toy, task)
    with pytest.raises(WireFormatError):
        decode_signed_task(toy, wire[:-1])
    with pytest.raises(WireFormatError):
        decode_signed_task(toy, wire + b"\x00")
    with pytest.raises(WireFormatError):
        decode_signed_task(toy, b"\x00\x00")
