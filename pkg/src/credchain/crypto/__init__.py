"""Cryptographic primitives every other module builds on."""
from .canonical import canonical_encode, from_hex, to_hex
from .ecdsa import (
    KeyPair,
    RecoverableSignature,
    compress_public,
    decompress_public,
    digest,
    generate_keypair,
    public_point,
    recover_public,
    sign_digest,
    verify_signature,
)
from .kernel import set_backend

__all__ = [
    "KeyPair",
    "RecoverableSignature",
    "canonical_encode",
    "compress_public",
    "decompress_public",
    "digest",
    "from_hex",
    "generate_keypair",
    "public_point",
    "recover_public",
    "set_backend",
    "sign_digest",
    "to_hex",
    "verify_signature",
]
