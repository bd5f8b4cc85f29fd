"""Identity-based authentication for offloaded vehicle tasks.

A trusted authority (TA) holds a master scalar and issues each vehicle a
two-part pseudonym plus an alias signing key bound to that master
secret.  Vehicles sign task payloads with a fresh ephemeral keypair; the
cloud verifies one curve equation against the TA public key, without
learning the vehicle's long-term identity.  The TA alone can strip the
pseudonym mask and recover the identity (conditional tracking).

Randomness comes from caller-seeded ``random.Random`` streams so every
simulation run is reproducible; this is simulation-grade randomness, not
a hardened CSPRNG.
"""

from __future__ import annotations

import enum
import hashlib
import random
import threading
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple

from .curve import Curve, CurveError, Point

DEFAULT_FRESHNESS_WINDOW_MS = 300_000

# Domain-separation tags of the five hash roles: pseudonym mask, alias key
# binding, the two per-timestamp alias digests, and the task binding.
_TAG_MASK = 1
_TAG_ALIAS_KEY = 2
_TAG_ALIAS_T1 = 3
_TAG_ALIAS_T2 = 4
_TAG_TASK = 5


class AuthError(Exception):
    """Base class for authentication failures."""


class UnknownIdentityError(AuthError):
    """Tracking could not resolve a pseudonym to a registered identity."""


class WireFormatError(AuthError):
    """Signed-task bytes violate the envelope layout."""


class Verdict(enum.Enum):
    """Outcome of verifying a signed task; non-valid variants name the failed check."""

    VALID = "valid"
    STALE_TIMESTAMP = "stale-timestamp"
    REVOKED = "revoked"
    BAD_SIGNATURE = "bad-signature"
    MALFORMED_POINT = "malformed-point"

    def __bool__(self) -> bool:
        return self is Verdict.VALID


@dataclass(frozen=True)
class Pseudonym:
    """Two-tier pseudonym: a curve point and a masked identity string."""

    point: Point          # first tier, a public curve point
    masked_id: bytes      # second tier, XOR-masked encoding of the identity

    def encode(self, curve: Curve) -> bytes:
        """Canonical bytes, also used as the revocation-set key."""
        return curve.encode_point(self.point) + self.masked_id


@dataclass(frozen=True)
class VehicleCredentials:
    """What a registered entity holds: identity, pseudonym and alias signing key."""

    identity: Point
    pseudonym: Pseudonym
    alias_key: int        # scalar binding the pseudonym to the TA master secret


@dataclass(frozen=True)
class SignedTask:
    """Authenticated task envelope sent vehicle -> cloud."""

    payload: bytes
    timestamp_ms: int
    public_key: Point     # ephemeral verification key
    pseudonym: Pseudonym
    signature: int


@dataclass(frozen=True)
class TwinRecord:
    """Cloud-side digital-twin entry for one registered vehicle."""

    identity: Point
    pseudonym: Pseudonym
    alias_key: int
    tracking_handle: bytes
    compute_ghz: float
    speed_mps: float

    @classmethod
    def from_credentials(cls, creds: VehicleCredentials, handle: bytes,
                         compute_ghz: float, speed_mps: float) -> "TwinRecord":
        return cls(identity=creds.identity, pseudonym=creds.pseudonym,
                   alias_key=creds.alias_key, tracking_handle=handle,
                   compute_ghz=compute_ghz, speed_mps=speed_mps)


@dataclass
class _Registration:
    identity: Point
    long_term_scalar: int                 # r1, retained by the TA only
    blinding_scalars: List[int]           # r2 per issued pseudonym, TA only
    pseudonyms: List[Pseudonym]


def _expand_mask(curve: Curve, seed_scalar: int, width: int) -> bytes:
    """Stretch a scalar digest into a ``width``-byte XOR mask (counter-mode SHA-256)."""
    out = b""
    counter = 0
    seed = seed_scalar.to_bytes(curve.q_bytes, "big")
    while len(out) < width:
        out += hashlib.sha256(b"vtn-mask" + seed + counter.to_bytes(4, "big")).digest()
        counter += 1
    return out[:width]


def _xor(a: bytes, b: bytes) -> bytes:
    return bytes(x ^ y for x, y in zip(a, b))


class TAContext:
    """Trusted authority: master keypair plus the identity registry.

    Registration and tracking mutate or read the registry and are guarded
    by an internal lock; issued credentials are immutable and the
    sign/verify path never touches the TA.
    """

    def __init__(self, curve: Curve, seed: Optional[int] = None) -> None:
        self.curve = curve
        self._rng = random.Random(seed)
        self._sk = curve.random_scalar(self._rng)
        self.public_key: Point = curve.mul(self._sk, curve.generator)
        self._registry: Dict[bytes, _Registration] = {}
        self._lock = threading.Lock()

    # -- registration -----------------------------------------------------

    def _mask_for(self, pseudonym_point: Point) -> bytes:
        shared = self.curve.mul(self._sk, pseudonym_point)
        digest = self.curve.hash_to_scalar(
            _TAG_MASK,
            [self.curve.encode_point(shared), self.curve.encode_point(self.public_key)])
        return _expand_mask(self.curve, digest, self.curve.point_bytes)

    def register_entity(self, long_term_seed: Optional[int] = None
                        ) -> Tuple[VehicleCredentials, bytes]:
        """Issue credentials for a (possibly pre-existing) long-term identity.

        ``long_term_seed`` pins the long-term identity scalar, so the same
        seed re-registers the same identity under a fresh pseudonym.
        Returns the credentials and the TA-side tracking handle.
        """
        curve = self.curve
        with self._lock:
            if long_term_seed is None:
                r1 = curve.random_scalar(self._rng)
            else:
                r1 = curve.random_scalar(random.Random(long_term_seed))
            r2 = curve.random_scalar(self._rng)

            identity = curve.mul(r1, curve.generator)
            sid1 = curve.mul(r2, curve.generator)
            masked = _xor(curve.encode_point(identity), self._mask_for(sid1))
            pseudonym = Pseudonym(point=sid1, masked_id=masked)
            binding = curve.hash_to_scalar(
                _TAG_ALIAS_KEY, [curve.encode_point(sid1), masked])
            alias_key = (r2 + binding * self._sk) % curve.q

            handle = curve.encode_point(identity)
            record = self._registry.get(handle)
            if record is None:
                record = _Registration(identity, r1, [], [])
                self._registry[handle] = record
            record.blinding_scalars.append(r2)
            record.pseudonyms.append(pseudonym)

        return VehicleCredentials(identity, pseudonym, alias_key), handle

    def track_identity(self, pseudonym: Pseudonym) -> Point:
        """Recover the long-term identity behind a pseudonym this TA issued.

        Strips the XOR mask (recomputable only with the master secret),
        decodes the identity point and requires it to be registered.
        """
        curve = self.curve
        with self._lock:
            try:
                curve.validate(pseudonym.point)
                candidate = curve.decode_point(
                    _xor(pseudonym.masked_id, self._mask_for(pseudonym.point)))
            except CurveError as exc:
                raise UnknownIdentityError(f"pseudonym does not unmask: {exc}") from exc
            handle = curve.encode_point(candidate)
            if handle not in self._registry:
                raise UnknownIdentityError("unmasked identity is not registered here")
            return candidate


def ta_setup(curve: Curve, seed: Optional[int] = None) -> TAContext:
    """Create a TA with a fresh master keypair and empty registry."""
    return TAContext(curve, seed)


# -- per-task keys and signing ---------------------------------------------------


def derive_ephemeral_keys(curve: Curve, rng: random.Random) -> Tuple[int, Point]:
    """Fresh per-task keypair (sk in [1, q), pk = sk*G)."""
    sk = curve.random_scalar(rng)
    return sk, curve.mul(sk, curve.generator)


def alias_digest(curve: Curve, pseudonym: Pseudonym, timestamp_ms: int) -> bytes:
    """Per-timestamp second-tier alias: two scalar digests, fixed-width concatenated."""
    t8 = timestamp_ms.to_bytes(8, "big")
    first = curve.hash_to_scalar(_TAG_ALIAS_T1,
                                 [curve.encode_point(pseudonym.point), t8])
    second = curve.hash_to_scalar(_TAG_ALIAS_T2, [pseudonym.masked_id, t8])
    return curve.scalar_to_bytes(first) + curve.scalar_to_bytes(second)


def _task_binding(curve: Curve, public_key: Point, pseudonym: Pseudonym,
                  payload: bytes, timestamp_ms: int) -> int:
    t8 = timestamp_ms.to_bytes(8, "big")
    return curve.hash_to_scalar(
        _TAG_TASK,
        [curve.encode_point(public_key),
         alias_digest(curve, pseudonym, timestamp_ms),
         payload,
         t8])


def sign_task(curve: Curve, creds: VehicleCredentials, ephemeral_sk: int,
              ephemeral_pk: Point, payload: bytes, timestamp_ms: int) -> SignedTask:
    """Sign a task payload under the alias key and a fresh ephemeral key."""
    binding = _task_binding(curve, ephemeral_pk, creds.pseudonym, payload, timestamp_ms)
    sigma = (creds.alias_key + binding * ephemeral_sk) % curve.q
    return SignedTask(payload=payload, timestamp_ms=timestamp_ms,
                      public_key=ephemeral_pk, pseudonym=creds.pseudonym,
                      signature=sigma)


def verify_task(curve: Curve, task: SignedTask, ta_public_key: Point,
                now_ms: int,
                freshness_window_ms: int = DEFAULT_FRESHNESS_WINDOW_MS,
                revoked: Iterable[bytes] = frozenset()) -> Verdict:
    """Check a signed task: freshness, revocation, then the curve equation.

    The equation accepted is
    ``sigma*G == SID1 + binding*pk + alias_binding*pk_TA``;
    each failure mode maps to its own verdict.
    """
    if (not curve.is_on_curve(task.public_key) or task.public_key is None
            or not curve.is_on_curve(task.pseudonym.point)
            or task.pseudonym.point is None
            or len(task.pseudonym.masked_id) != curve.point_bytes):
        return Verdict.MALFORMED_POINT
    if abs(now_ms - task.timestamp_ms) > freshness_window_ms:
        return Verdict.STALE_TIMESTAMP
    if task.pseudonym.encode(curve) in revoked:
        return Verdict.REVOKED
    if not 0 <= task.signature < curve.q:
        return Verdict.BAD_SIGNATURE

    binding = _task_binding(curve, task.public_key, task.pseudonym,
                            task.payload, task.timestamp_ms)
    alias_binding = curve.hash_to_scalar(
        _TAG_ALIAS_KEY,
        [curve.encode_point(task.pseudonym.point), task.pseudonym.masked_id])
    lhs = curve.mul(task.signature, curve.generator)
    rhs = curve.add(
        task.pseudonym.point,
        curve.add(curve.mul(binding, task.public_key),
                  curve.mul(alias_binding, ta_public_key)))
    return Verdict.VALID if lhs == rhs else Verdict.BAD_SIGNATURE


# -- wire format ---------------------------------------------------------------


def auth_overhead_bytes(curve: Curve) -> int:
    """Serialized size of everything in the envelope except the payload.

    Timestamp (8) + ephemeral key + pseudonym point + mask bytes + signature;
    constant for a given curve, independent of payload size.
    """
    return 8 + 3 * curve.point_bytes + curve.q_bytes


def encode_signed_task(curve: Curve, task: SignedTask) -> bytes:
    """Envelope layout: S-length (4 BE) | S | t (8 BE ms) | pk | SID1 | SID2 | sigma."""
    if task.public_key is None or task.pseudonym.point is None:
        raise WireFormatError("wire format has no identity-point encoding")
    if len(task.pseudonym.masked_id) != curve.point_bytes:
        raise WireFormatError("masked pseudonym width does not match the curve")
    if not 0 <= task.timestamp_ms < 1 << 64:
        raise WireFormatError("timestamp out of unsigned 64-bit range")
    return (len(task.payload).to_bytes(4, "big")
            + task.payload
            + task.timestamp_ms.to_bytes(8, "big")
            + curve.encode_point(task.public_key)
            + curve.encode_point(task.pseudonym.point)
            + task.pseudonym.masked_id
            + (task.signature % curve.q).to_bytes(curve.q_bytes, "big"))


def decode_signed_task(curve: Curve, data: bytes) -> SignedTask:
    """Parse an envelope; raises WireFormatError on any structural violation."""
    if len(data) < 4:
        raise WireFormatError("truncated envelope: missing payload length")
    payload_len = int.from_bytes(data[:4], "big")
    expected = 4 + payload_len + auth_overhead_bytes(curve)
    if len(data) != expected:
        raise WireFormatError(
            f"envelope is {len(data)} bytes, expected {expected} for the declared payload")
    off = 4
    payload = data[off:off + payload_len]
    off += payload_len
    timestamp_ms = int.from_bytes(data[off:off + 8], "big")
    off += 8
    pb = curve.point_bytes
    try:
        public_key = curve.decode_point(data[off:off + pb])
        pseudonym_point = curve.decode_point(data[off + pb:off + 2 * pb])
    except CurveError as exc:
        raise WireFormatError(f"bad point encoding: {exc}") from exc
    off += 2 * pb
    masked_id = data[off:off + pb]
    off += pb
    signature = int.from_bytes(data[off:off + curve.q_bytes], "big")
    return SignedTask(payload=payload, timestamp_ms=timestamp_ms,
                      public_key=public_key,
                      pseudonym=Pseudonym(pseudonym_point, masked_id),
                      signature=signature)
