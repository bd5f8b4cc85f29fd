"""Prime-field short-Weierstrass elliptic curve arithmetic.

Affine group law over ``y^2 = x^3 + a*x + b (mod p)``, double-and-add
scalar multiplication, a domain-separated hash-to-scalar, and a compact
point encoding.  Everything here is variable-time: this backs a
simulator, not a hardened production signer.

Points are ``(x, y)`` tuples; the group identity is ``None``.
Scalars and field elements are plain Python ints, reduced modulo the
group order ``q`` (resp. the field prime ``p``) by the operations that
produce them.
"""

from __future__ import annotations

import hashlib
from typing import Optional, Sequence, Tuple

Point = Optional[Tuple[int, int]]

IDENTITY_MARKER = 0x01


class CurveError(Exception):
    """Base class for curve-level failures."""


class CurveParameterError(CurveError):
    """Curve parameters violate a construction invariant."""


class PointNotOnCurveError(CurveError):
    """A point handed to a group operation does not satisfy the curve equation."""


class PointDecodeError(CurveError):
    """Point bytes are malformed or name no curve point."""


def is_probable_prime(n: int, rounds: int = 16) -> bool:
    """Miller-Rabin primality test.

    Deterministic for n below ~3.3e24 via the first twelve prime bases;
    probabilistic (error < 4^-rounds) beyond that, which is plenty for
    vetting published curve constants.
    """
    if n < 2:
        return False
    small_primes = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)
    for sp in small_primes:
        if n % sp == 0:
            return n == sp
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    # Fixed bases keep the check reproducible; they are a valid witness set
    # for all n < 3.3e24 and a strong probabilistic filter above.
    bases = small_primes[: max(rounds, len(small_primes))]
    for a in bases:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def mod_sqrt(a: int, p: int) -> Optional[int]:
    """Square root of ``a`` modulo an odd prime ``p`` (Tonelli-Shanks).

    Returns one root in [0, p), or None when ``a`` is a non-residue.
    """
    a %= p
    if a == 0:
        return 0
    if pow(a, (p - 1) // 2, p) != 1:
        return None
    if p % 4 == 3:
        return pow(a, (p + 1) // 4, p)
    # Tonelli-Shanks for p = 1 (mod 4).
    s, q = 0, p - 1
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while pow(z, (p - 1) // 2, p) != p - 1:
        z += 1
    m, c = s, pow(z, q, p)
    t, r = pow(a, q, p), pow(a, (q + 1) // 2, p)
    while t != 1:
        t2, i = t * t % p, 1
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        m, c = i, b * b % p
        t, r = t * c % p, r * b % p
    return r


class Curve:
    """Short-Weierstrass curve with a prime-order generator.

    Construction validates the parameter set: ``p`` and ``q`` pass a
    probabilistic primality test, the discriminant is nonzero, the
    generator lies on the curve, and ``q * G`` is the identity.
    Instances are immutable after construction and safe to share between
    threads.
    """

    def __init__(self, name: str, p: int, a: int, b: int,
                 gx: int, gy: int, q: int, cofactor: int = 1) -> None:
        self.name = name
        if not is_probable_prime(p):
            raise CurveParameterError(f"field prime p={p} failed primality test")
        if not is_probable_prime(q):
            raise CurveParameterError(f"group order q={q} failed primality test")
        if cofactor < 1:
            raise CurveParameterError(f"cofactor must be positive, got {cofactor}")
        a %= p
        b %= p
        if (4 * a * a * a + 27 * b * b) % p == 0:
            raise CurveParameterError("singular curve: 4a^3 + 27b^2 = 0 (mod p)")
        self.p = p
        self.a = a
        self.b = b
        self.generator: Point = (gx % p, gy % p)
        self.q = q
        self.cofactor = cofactor
        self.p_bytes = (p.bit_length() + 7) // 8
        self.q_bytes = (q.bit_length() + 7) // 8
        # Non-identity encoding: x (p_bytes) | parity byte | marker byte.
        self.point_bytes = self.p_bytes + 2
        if not self.is_on_curve(self.generator):
            raise CurveParameterError("generator is not on the curve")
        if self.mul(q, self.generator) is not None:
            raise CurveParameterError("q*G is not the identity; q is not the generator order")

    def __repr__(self) -> str:
        return f"Curve({self.name!r}, p={self.p:#x}, q={self.q:#x})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Curve):
            return NotImplemented
        return (self.p, self.a, self.b, self.generator, self.q, self.cofactor) == \
               (other.p, other.a, other.b, other.generator, other.q, other.cofactor)

    def __hash__(self) -> int:
        return hash((self.p, self.a, self.b, self.generator, self.q))

    # -- group law ---------------------------------------------------------

    def is_on_curve(self, pt: Point) -> bool:
        if pt is None:
            return True
        x, y = pt
        if not (0 <= x < self.p and 0 <= y < self.p):
            return False
        return (y * y - (x * x * x + self.a * x + self.b)) % self.p == 0

    def validate(self, pt: Point) -> None:
        if not self.is_on_curve(pt):
            raise PointNotOnCurveError(f"point {pt} is not on {self.name}")

    def neg(self, pt: Point) -> Point:
        if pt is None:
            return None
        x, y = pt
        return (x, (-y) % self.p)

    def add(self, lhs: Point, rhs: Point) -> Point:
        """Group sum of two curve points (identity, inverse and doubling cases included)."""
        self.validate(lhs)
        self.validate(rhs)
        return self._add_raw(lhs, rhs)

    def _add_raw(self, lhs: Point, rhs: Point) -> Point:
        # Group law without membership checks; callers guarantee on-curve inputs.
        if lhs is None:
            return rhs
        if rhs is None:
            return lhs
        x1, y1 = lhs
        x2, y2 = rhs
        if x1 == x2 and (y1 + y2) % self.p == 0:
            return None
        if lhs == rhs:
            lam = (3 * x1 * x1 + self.a) * pow(2 * y1, -1, self.p) % self.p
        else:
            lam = (y2 - y1) * pow(x2 - x1, -1, self.p) % self.p
        x3 = (lam * lam - x1 - x2) % self.p
        y3 = (lam * (x1 - x3) - y1) % self.p
        return (x3, y3)

    def mul(self, k: int, pt: Point) -> Point:
        """Scalar multiple ``k * pt`` by double-and-add; ``0 * pt`` is the identity."""
        if k < 0:
            raise ValueError("scalar must be non-negative")
        self.validate(pt)
        result: Point = None
        addend = pt
        while k:
            if k & 1:
                result = self._add_raw(result, addend)
            k >>= 1
            if k:
                addend = self._add_raw(addend, addend)
        return result

    # -- scalars and hashing -------------------------------------------------

    def random_scalar(self, rng) -> int:
        """Uniform nonzero scalar in [1, q) from a ``random.Random``-like source."""
        return rng.randrange(1, self.q)

    def hash_to_scalar(self, domain_tag: int, parts: Sequence[bytes]) -> int:
        """SHA-256 digest of length-prefixed ``parts`` under a one-byte domain tag, mod q.

        Distinct tags give independent hash functions; the 4-byte length
        prefix per element makes the encoding of the input list unambiguous.
        """
        if not parts:
            raise ValueError("hash_to_scalar needs at least one input element")
        if not 0 <= domain_tag <= 0xFF:
            raise ValueError("domain tag must fit one byte")
        h = hashlib.sha256()
        h.update(bytes([domain_tag]))
        for part in parts:
            h.update(len(part).to_bytes(4, "big"))
            h.update(part)
        return int.from_bytes(h.digest(), "big") % self.q

    def scalar_to_bytes(self, k: int) -> bytes:
        return (k % self.q).to_bytes(self.q_bytes, "big")

    # -- point serialization ---------------------------------------------------

    def encode_point(self, pt: Point) -> bytes:
        """Compressed encoding.

        Identity is the single marker byte 0x01.  Other points are
        ``x`` big-endian over p_bytes, the parity of y, then a zero byte
        (marker cleared), giving a fixed ``point_bytes`` width.
        """
        if pt is None:
            return bytes([IDENTITY_MARKER])
        self.validate(pt)
        x, y = pt
        return x.to_bytes(self.p_bytes, "big") + bytes([y & 1, 0x00])

    def decode_point(self, data: bytes) -> Point:
        """Inverse of :meth:`encode_point`; raises PointDecodeError on malformed input."""
        if len(data) == 1:
            if data[0] == IDENTITY_MARKER:
                return None
            raise PointDecodeError("single byte is not the identity marker")
        if len(data) != self.point_bytes:
            raise PointDecodeError(
                f"expected {self.point_bytes} bytes (or 1 for identity), got {len(data)}")
        if data[-1] != 0x00:
            raise PointDecodeError("trailing marker byte must be zero for affine points")
        parity = data[-2]
        if parity not in (0, 1):
            raise PointDecodeError(f"parity byte must be 0 or 1, got {parity}")
        x = int.from_bytes(data[: self.p_bytes], "big")
        if x >= self.p:
            raise PointDecodeError("x coordinate exceeds field prime")
        y = mod_sqrt(x * x * x + self.a * x + self.b, self.p)
        if y is None:
            raise PointDecodeError("x coordinate is not on the curve")
        if y & 1 != parity:
            y = self.p - y
        return (x, y)


# -- parameter files and presets -------------------------------------------------

_REQUIRED_FIELDS = ("p", "a", "b", "Px", "Py", "q", "cofactor")


def curve_from_mapping(fields: dict, name: str = "custom") -> Curve:
    """Build a curve from a {p, a, b, Px, Py, q, cofactor} mapping.

    Values may be ints or decimal/hex strings ("0x..." accepted).
    """
    missing = [k for k in _REQUIRED_FIELDS if k not in fields]
    if missing:
        raise CurveParameterError(f"curve file missing fields: {', '.join(missing)}")

    def as_int(v) -> int:
        if isinstance(v, bool) or not isinstance(v, (int, str)):
            raise CurveParameterError(f"curve field has non-integer value {v!r}")
        return v if isinstance(v, int) else int(v, 0)

    vals = {k: as_int(fields[k]) for k in _REQUIRED_FIELDS}
    return Curve(name=str(fields.get("name", name)), p=vals["p"], a=vals["a"],
                 b=vals["b"], gx=vals["Px"], gy=vals["Py"], q=vals["q"],
                 cofactor=vals["cofactor"])


def load_curve_file(path) -> Curve:
    """Load curve parameters from a TOML file with decimal or hex big-integer fields."""
    try:
        import tomllib  # type: ignore[import-not-found]
    except ModuleNotFoundError:
        import tomli as tomllib
    with open(path, "rb") as fh:
        fields = tomllib.load(fh)
    return curve_from_mapping(fields, name=str(fields.get("name", "custom")))


def toy_curve() -> Curve:
    """Tiny 19-point curve (y^2 = x^3 + 2x + 2 over F_17) for brute-force tests."""
    return Curve(name="toy17", p=17, a=2, b=2, gx=5, gy=1, q=19, cofactor=1)


def secp256k1() -> Curve:
    """The 256-bit preset, from the published secp256k1 constants."""
    return Curve(
        name="secp256k1",
        p=0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEFFFFFC2F,
        a=0,
        b=7,
        gx=0x79BE667EF9DCBBAC55A06295CE870B07029BFCDB2DCE28D959F2815B16F81798,
        gy=0x483ADA7726A3C4655DA4FBFC0E1108A8FD17B448A68554199C47D08FFB10D4B8,
        q=0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141,
        cofactor=1,
    )


_PRESETS = {"toy": toy_curve, "secp256k1": secp256k1}
_CACHE: dict = {}


def get_curve(preset: str) -> Curve:
    """Bundled preset by name ("toy" or "secp256k1"); instances are cached."""
    try:
        factory = _PRESETS[preset]
    except KeyError:
        raise CurveParameterError(
            f"unknown curve preset {preset!r}; choose from {sorted(_PRESETS)}") from None
    if preset not in _CACHE:
        _CACHE[preset] = factory()
    return _CACHE[preset]


def preset_file(preset: str):
    """Path of the bundled parameter file for a preset (same constants as get_curve)."""
    from importlib import resources

    fname = {"toy": "toy.toml", "secp256k1": "secp256k1.toml"}.get(preset)
    if fname is None:
        raise CurveParameterError(f"unknown curve preset {preset!r}")
    return resources.files("vtnsim.data").joinpath(fname)
