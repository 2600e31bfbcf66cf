"""Crypto kernels checked against independent implementations.

pycryptodome supplies keccak-256 and coincurve (libsecp256k1) supplies curve
arithmetic and signatures; neither is a runtime dependency.
"""
from __future__ import annotations

import json
import os

import coincurve
import pytest
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.asymmetric import ec
from cryptography.hazmat.primitives.asymmetric.utils import Prehashed, encode_dss_signature
from Crypto.Hash import keccak as oracle_keccak
from hypothesis import given, settings
from hypothesis import strategies as st

from credchain.crypto import (
    RecoverableSignature,
    canonical_encode,
    compress_public,
    decompress_public,
    digest,
    from_hex,
    generate_keypair,
    public_point,
    recover_public,
    sign_digest,
    to_hex,
    verify_signature,
)
from credchain.crypto import kernel
from credchain.crypto._pure import N
from credchain.crypto.ecdsa import GENERATOR_COMPRESSED, KeyPair
from credchain.errors import (
    InvalidEntropy,
    InvalidPrivateKey,
    MalformedKey,
    MalformedSignature,
    UnsupportedValue,
)

KAMALESH_CONTROLLER_KEY = (
    "045f2c19148f0afb66ef9f3c7cc65464ba2d4e9339784d1a6a7239c059e1f75014"
    "9c8a5997fe2f713eb8d31db93b5b5e8716332fb17a9333643d3fd3f5748cbfc0"
)
KAMALESH_COMPRESSED = "025f2c19148f0afb66ef9f3c7cc65464ba2d4e9339784d1a6a7239c059e1f75014"


def _oracle_keccak(data: bytes) -> bytes:
    return oracle_keccak.new(digest_bits=256, data=data).digest()


# ---------------------------------------------------------------- keccak


@pytest.mark.parametrize(
    "message, expected",
    [
        (b"", "c5d2460186f7233c927e7db2dcc703c0e500b653ca82273b7bfad8045d85a470"),
        (b"abc", "4e03657aea45a94fc7d47ba826c8d667c0d1e6e33a64a036ec44f58fa12d6c45"),
        (
            b"The quick brown fox jumps over the lazy dog",
            "4d741b6f1eb29cb2a9b9911c82f56fa8d73b04959d3d9d222895df6c0b28aa15",
        ),
    ],
)
def test_keccak_vectors(backend, message, expected):
    assert digest(message).hex() == expected


def test_keccak_rate_boundaries(backend):
    # lengths around the 136-byte rate exercise the padding edge cases
    for n in (0, 1, 134, 135, 136, 137, 271, 272, 273, 1000):
        data = bytes((i * 7 + n) & 0xFF for i in range(n))
        assert digest(data) == _oracle_keccak(data), n


@settings(max_examples=200, deadline=None)
@given(st.binary(max_size=600))
def test_keccak_matches_oracle(data):
    assert digest(data) == _oracle_keccak(data)


def test_digest_rejects_str():
    with pytest.raises(TypeError):
        digest("abc")  # type: ignore[arg-type]


def test_backends_agree_on_keccak():
    if "cython" not in kernel.BACKENDS:
        pytest.skip("compiled kernel not built")
    for n in range(0, 300, 7):
        data = os.urandom(n)
        assert kernel.BACKENDS["python"].keccak256(data) == kernel.BACKENDS["cython"].keccak256(data)


def test_set_backend_rejects_unknown():
    with pytest.raises(RuntimeError):
        kernel.set_backend("fortran")


# ------------------------------------------------------------- keypairs


def test_generator_vector():
    kp = KeyPair.from_scalar(1)
    assert kp.public_compressed.hex() == "0279be667ef9dcbbac55a06295ce870b07029bfcdb2dce28d959f2815b16f81798"
    assert GENERATOR_COMPRESSED == kp.public_compressed


def test_keypair_matches_libsecp256k1(backend):
    for _ in range(20):
        kp = generate_keypair()
        ref = coincurve.PrivateKey(kp.private_bytes)
        assert kp.public_compressed == ref.public_key.format(compressed=True)
        assert kp.public_uncompressed == ref.public_key.format(compressed=False)


def test_keypair_from_entropy_is_deterministic():
    seed = bytes(range(1, 33))
    assert generate_keypair(seed) == generate_keypair(seed)
    assert generate_keypair(seed).private_bytes == seed


@pytest.mark.parametrize("bad", [b"", bytes(31), bytes(33)])
def test_entropy_length_checked(bad):
    with pytest.raises(InvalidEntropy):
        generate_keypair(bad)


@pytest.mark.parametrize("scalar", [0, N, N + 5])
def test_out_of_range_scalars(scalar):
    with pytest.raises(InvalidEntropy):
        generate_keypair(scalar.to_bytes(32, "big"))
    with pytest.raises(InvalidPrivateKey):
        KeyPair.from_scalar(scalar)


def test_private_key_not_in_repr():
    kp = generate_keypair()
    assert str(kp.private_scalar) not in repr(kp)


def test_sample_controller_key_compresses_to_did_hex():
    assert compress_public(bytes.fromhex(KAMALESH_CONTROLLER_KEY)).hex() == KAMALESH_COMPRESSED
    assert decompress_public(bytes.fromhex(KAMALESH_COMPRESSED)).hex() == KAMALESH_CONTROLLER_KEY


def test_compression_round_trip_against_oracle():
    for _ in range(30):
        ref = coincurve.PrivateKey().public_key
        full, short = ref.format(compressed=False), ref.format(compressed=True)
        assert compress_public(full) == short
        assert decompress_public(short) == full


@pytest.mark.parametrize(
    "raw",
    [
        b"\x04" + bytes(64),  # not on curve
        b"\x02" + bytes(31),  # wrong length
        b"\x05" + bytes(32),  # bad prefix
        bytes.fromhex("02" + "ff" * 32),  # x >= p
    ],
)
def test_malformed_keys(raw):
    with pytest.raises(MalformedKey):
        public_point(raw)


def test_decompress_rejects_x_without_root():
    # x = 5 has no square root of x^3 + 7 mod p
    with pytest.raises(MalformedKey):
        decompress_public(b"\x02" + (5).to_bytes(32, "big"))


# ------------------------------------------------------------ signatures


def test_signatures_match_libsecp256k1(backend):
    for i in range(15):
        kp = generate_keypair()
        d = digest(b"message %d" % i)
        ours = sign_digest(kp.private_scalar, d).to_bytes()
        ref = coincurve.PrivateKey(kp.private_bytes).sign_recoverable(d, hasher=None)
        assert ours[:64] == ref[:64]
        assert ours[64] == 27 + ref[64]


def test_sign_verify_recover(backend):
    kp = generate_keypair()
    d = digest(b"hello")
    sig = sign_digest(kp.private_scalar, d)
    assert sig.s <= N // 2
    assert sig.v in (27, 28)
    assert verify_signature(kp.public_compressed, d, sig)
    assert verify_signature(kp.public_uncompressed, d, sig.hex())
    assert recover_public(d, sig) == kp.public_uncompressed
    assert not verify_signature(kp.public_compressed, digest(b"hellp"), sig)
    other = generate_keypair()
    assert not verify_signature(other.public_compressed, d, sig)


def test_oracle_verifies_our_signatures():
    kp = generate_keypair()
    d = digest(b"cross-check")
    sig = sign_digest(kp.private_scalar, d)
    ref_pub = ec.EllipticCurvePublicKey.from_encoded_point(ec.SECP256K1(), kp.public_compressed)
    ref_pub.verify(encode_dss_signature(sig.r, sig.s), d, ec.ECDSA(Prehashed(hashes.SHA256())))
    recovered = coincurve.PublicKey.from_signature_and_message(
        sig.to_bytes()[:64] + bytes([sig.v - 27]), d, hasher=None
    )
    assert recovered.format() == kp.public_compressed


def test_high_s_and_wrong_v_rejected():
    kp = generate_keypair()
    d = digest(b"malleable")
    sig = sign_digest(kp.private_scalar, d)
    high = RecoverableSignature(sig.r, N - sig.s, 55 - sig.v)
    assert not verify_signature(kp.public_compressed, d, high)
    flipped = RecoverableSignature(sig.r, sig.s, 55 - sig.v)
    assert not verify_signature(kp.public_compressed, d, flipped)
    assert not verify_signature(kp.public_compressed, d, RecoverableSignature(0, sig.s, sig.v))


def test_signature_serialization():
    kp = generate_keypair()
    sig = sign_digest(kp.private_scalar, digest(b"x"))
    text = sig.hex()
    assert text.startswith("0x") and len(text) == 132
    assert RecoverableSignature.from_hex(text) == sig
    assert RecoverableSignature.from_bytes(sig.to_bytes()) == sig


@pytest.mark.parametrize("raw", [bytes(64), bytes(66), bytes(64) + b"\x1d", bytes(64) + b"\x00"])
def test_malformed_signatures(raw):
    with pytest.raises(MalformedSignature):
        RecoverableSignature.from_bytes(raw)


def test_sign_rejects_bad_digest_length():
    with pytest.raises(ValueError):
        sign_digest(1, b"short")


def test_rfc6979_is_deterministic():
    kp = generate_keypair()
    d = digest(b"same")
    assert sign_digest(kp.private_scalar, d) == sign_digest(kp.private_scalar, d)


def test_backends_agree_on_curve_math():
    if "cython" not in kernel.BACKENDS:
        pytest.skip("compiled kernel not built")
    py, cy = kernel.BACKENDS["python"], kernel.BACKENDS["cython"]
    for _ in range(20):
        a, b = (int.from_bytes(os.urandom(32), "big") % N for _ in range(2))
        q = py.mul_base(int.from_bytes(os.urandom(32), "big") % N)
        assert py.mul_base(a) == cy.mul_base(a)
        assert py.mul_add(a, b, *q) == cy.mul_add(a, b, *q)
    assert cy.mul_base(0) is None
    assert cy.mul_add(1, N - 1, *py.mul_base(1)) is None


# ------------------------------------------------------- canonical JSON


def test_canonical_encoding_is_sorted_and_compact():
    assert canonical_encode({"b": 1, "a": [True, None, "é"]}) == '{"a":[true,null,"é"],"b":1}'.encode()


def test_canonical_independent_of_insertion_order():
    assert canonical_encode({"x": 1, "y": {"q": 2, "p": 3}}) == canonical_encode({"y": {"p": 3, "q": 2}, "x": 1})


@pytest.mark.parametrize("value", [1.5, {"a": float("nan")}, {1: "x"}, {"a": {2.0}}, b"raw"])
def test_canonical_rejects_unsupported(value):
    with pytest.raises(UnsupportedValue):
        canonical_encode(value)


def _text(size: int):
    return st.text(st.characters(blacklist_categories=("Cs",)), max_size=size)


json_values = st.recursive(
    st.none() | st.booleans() | st.integers(-(2**70), 2**70) | _text(20),
    lambda inner: st.lists(inner, max_size=5) | st.dictionaries(_text(8), inner, max_size=5),
    max_leaves=25,
)


@settings(max_examples=200, deadline=None)
@given(json_values)
def test_canonical_round_trip(value):
    encoded = canonical_encode(value)
    assert canonical_encode(json.loads(encoded)) == encoded


def test_hex_helpers():
    assert to_hex(b"\x01\xab") == "0x01ab"
    assert from_hex("0x01AB") == b"\x01\xab"
    assert from_hex("01ab", length=2) == b"\x01\xab"
    for bad in ("0x1", "zz", "0xg0"):
        with pytest.raises(ValueError):
            from_hex(bad)
    with pytest.raises(ValueError):
        from_hex("0x01", length=2)


def test_canonical_rejects_lone_surrogate():
    with pytest.raises(UnsupportedValue):
        canonical_encode({"a": "\ud800"})
