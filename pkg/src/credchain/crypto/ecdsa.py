"""secp256k1 keys, keccak-256 digests and recoverable ECDSA signatures."""
from __future__ import annotations

import hashlib
import hmac
import secrets
from dataclasses import dataclass, field
from typing import Union

from ..errors import (
    InvalidEntropy,
    InvalidPrivateKey,
    MalformedKey,
    MalformedSignature,
)
from . import kernel
from ._pure import GX, GY, N, P
from .canonical import from_hex, to_hex

HALF_N = N // 2

Point = tuple[int, int]
PublicKey = Union[bytes, Point]


def digest(data: bytes) -> bytes:
    """keccak-256; always 32 bytes."""
    if not isinstance(data, (bytes, bytearray, memoryview)):
        raise TypeError(f"digest() needs bytes, got {type(data).__name__}")
    return kernel.keccak256(bytes(data))


# ---------------------------------------------------------------- keys


@dataclass(frozen=True)
class KeyPair:
    private_scalar: int = field(repr=False)
    public_uncompressed: bytes
    public_compressed: bytes

    @property
    def private_bytes(self) -> bytes:
        return self.private_scalar.to_bytes(32, "big")

    @classmethod
    def from_scalar(cls, scalar: int) -> "KeyPair":
        _check_scalar(scalar)
        x, y = kernel.mul_base(scalar)
        return cls(scalar, _encode_point(x, y, False), _encode_point(x, y, True))


def _check_scalar(scalar: int) -> None:
    if not isinstance(scalar, int) or isinstance(scalar, bool) or not 0 < scalar < N:
        raise InvalidPrivateKey("private scalar must be in [1, n-1]")


def generate_keypair(entropy: bytes | None = None) -> KeyPair:
    """New keypair; ``entropy`` (32 bytes) is taken as the scalar itself."""
    if entropy is None:
        return KeyPair.from_scalar(secrets.randbelow(N - 1) + 1)
    if len(entropy) != 32:
        raise InvalidEntropy(f"entropy must be 32 bytes, got {len(entropy)}")
    scalar = int.from_bytes(entropy, "big")
    if not 0 < scalar < N:
        raise InvalidEntropy("entropy maps to zero or to a value >= the group order")
    return KeyPair.from_scalar(scalar)


def _encode_point(x: int, y: int, compressed: bool) -> bytes:
    if compressed:
        return bytes([2 + (y & 1)]) + x.to_bytes(32, "big")
    return b"\x04" + x.to_bytes(32, "big") + y.to_bytes(32, "big")


def _on_curve(x: int, y: int) -> bool:
    return 0 <= x < P and 0 <= y < P and (y * y - x * x * x - 7) % P == 0


def _lift_x(x: int, odd: bool) -> Point | None:
    if not 0 <= x < P:
        return None
    rhs = (x * x * x + 7) % P
    y = pow(rhs, (P + 1) // 4, P)
    if y * y % P != rhs:
        return None
    if (y & 1) != odd:
        y = P - y
    return x, y


def public_point(public: PublicKey) -> Point:
    """Decode a 33/65-byte public key (or pass through an (x, y) tuple)."""
    if isinstance(public, tuple):
        x, y = public
        if not _on_curve(x, y):
            raise MalformedKey("point is not on secp256k1")
        return x, y
    raw = bytes(public)
    if len(raw) == 65 and raw[0] == 4:
        x = int.from_bytes(raw[1:33], "big")
        y = int.from_bytes(raw[33:], "big")
        if not _on_curve(x, y):
            raise MalformedKey("point is not on secp256k1")
        return x, y
    if len(raw) == 33 and raw[0] in (2, 3):
        pt = _lift_x(int.from_bytes(raw[1:], "big"), raw[0] == 3)
        if pt is None:
            raise MalformedKey("x coordinate is not on secp256k1")
        return pt
    raise MalformedKey(f"unrecognised public key encoding ({len(raw)} bytes, prefix {raw[:1].hex() or '-'})")


def compress_public(uncompressed: bytes) -> bytes:
    raw = bytes(uncompressed)
    if len(raw) != 65 or raw[0] != 4:
        raise MalformedKey("expected 65 bytes starting with 0x04")
    x, y = public_point(raw)
    return _encode_point(x, y, True)


def decompress_public(compressed: bytes) -> bytes:
    raw = bytes(compressed)
    if len(raw) != 33 or raw[0] not in (2, 3):
        raise MalformedKey("expected 33 bytes starting with 0x02 or 0x03")
    x, y = public_point(raw)
    return _encode_point(x, y, False)


# ---------------------------------------------------------- signatures


@dataclass(frozen=True)
class RecoverableSignature:
    r: int
    s: int
    v: int  # 27 or 28

    def to_bytes(self) -> bytes:
        return self.r.to_bytes(32, "big") + self.s.to_bytes(32, "big") + bytes([self.v])

    def hex(self) -> str:
        return to_hex(self.to_bytes())

    @classmethod
    def from_bytes(cls, raw: bytes) -> "RecoverableSignature":
        raw = bytes(raw)
        if len(raw) != 65:
            raise MalformedSignature(f"signature must be 65 bytes, got {len(raw)}")
        if raw[64] not in (27, 28):
            raise MalformedSignature(f"recovery byte must be 27 or 28, got {raw[64]}")
        return cls(int.from_bytes(raw[:32], "big"), int.from_bytes(raw[32:64], "big"), raw[64])

    @classmethod
    def from_hex(cls, text: str) -> "RecoverableSignature":
        try:
            raw = from_hex(text)
        except ValueError as exc:
            raise MalformedSignature(str(exc)) from None
        return cls.from_bytes(raw)


def _as_signature(sig: RecoverableSignature | bytes | str) -> RecoverableSignature:
    if isinstance(sig, RecoverableSignature):
        return sig
    if isinstance(sig, str):
        return RecoverableSignature.from_hex(sig)
    if isinstance(sig, (bytes, bytearray, memoryview)):
        return RecoverableSignature.from_bytes(sig)
    raise MalformedSignature(f"cannot read a signature from {type(sig).__name__}")


def _check_digest(d: bytes) -> int:
    if not isinstance(d, (bytes, bytearray)) or len(d) != 32:
        raise ValueError("digest must be 32 bytes")
    return int.from_bytes(d, "big")


def _rfc6979_nonces(private: int, d: bytes):
    """Deterministic nonce stream (RFC 6979, HMAC-SHA256)."""
    x = private.to_bytes(32, "big")
    h = (int.from_bytes(d, "big") % N).to_bytes(32, "big")
    v = b"\x01" * 32
    k = b"\x00" * 32
    k = hmac.new(k, v + b"\x00" + x + h, hashlib.sha256).digest()
    v = hmac.new(k, v, hashlib.sha256).digest()
    k = hmac.new(k, v + b"\x01" + x + h, hashlib.sha256).digest()
    v = hmac.new(k, v, hashlib.sha256).digest()
    while True:
        v = hmac.new(k, v, hashlib.sha256).digest()
        cand = int.from_bytes(v, "big")
        if 0 < cand < N:
            yield cand
        k = hmac.new(k, v + b"\x00", hashlib.sha256).digest()
        v = hmac.new(k, v, hashlib.sha256).digest()


def sign_digest(private_scalar: int, d: bytes) -> RecoverableSignature:
    """Deterministic low-s recoverable signature over a 32-byte digest."""
    _check_scalar(private_scalar)
    e = _check_digest(d)
    for k in _rfc6979_nonces(private_scalar, d):
        rx, ry = kernel.mul_base(k)
        if rx >= N:  # would need recovery id 2/3; draw again
            continue
        r = rx
        s = pow(k, -1, N) * (e + r * private_scalar) % N
        if s == 0:
            continue
        recid = ry & 1
        if s > HALF_N:
            s = N - s
            recid ^= 1
        return RecoverableSignature(r, s, 27 + recid)
    raise AssertionError("unreachable")


def verify_signature(public: PublicKey, d: bytes, sig: RecoverableSignature | bytes | str) -> bool:
    """True iff ``sig`` is a canonical signature on ``d`` by ``public``.

    The recovery byte is checked too (it must name the parity of R.y).
    Wrong-length or otherwise unreadable signatures raise
    ``MalformedSignature``; a bad public key raises ``MalformedKey``.
    """
    sig = _as_signature(sig)
    qx, qy = public_point(public)
    e = _check_digest(d)
    r, s = sig.r, sig.s
    if not (0 < r < N and 0 < s <= HALF_N):
        return False
    w = pow(s, -1, N)
    pt = kernel.mul_add(e * w % N, r * w % N, qx, qy)
    if pt is None:
        return False
    return pt[0] == r and (pt[1] & 1) == sig.v - 27


def recover_public(d: bytes, sig: RecoverableSignature | bytes | str) -> bytes:
    """Uncompressed public key that produced ``sig`` over ``d``."""
    sig = _as_signature(sig)
    e = _check_digest(d)
    r, s = sig.r, sig.s
    if not (0 < r < N and 0 < s <= HALF_N):
        raise MalformedSignature("r or s out of range")
    rpt = _lift_x(r, bool(sig.v - 27))
    if rpt is None:
        raise MalformedSignature("r is not the x coordinate of a curve point")
    rinv = pow(r, -1, N)
    q = kernel.mul_add(-e * rinv % N, s * rinv % N, *rpt)
    if q is None:
        raise MalformedSignature("signature recovers to the point at infinity")
    return _encode_point(q[0], q[1], False)


GENERATOR_COMPRESSED = _encode_point(GX, GY, True)
