"""DID string syntax: parsing, derivation from keys, display abbreviation."""
from __future__ import annotations

import re
from dataclasses import dataclass

from .crypto import decompress_public, public_point, to_hex
from .errors import MalformedDid, MalformedKey, UnsupportedProvider

ETHR = "did:ethr"
ETHR_GOERLI = "did:ethr:goerli"
WEB = "did:web"
ETHR_PROVIDERS = (ETHR, ETHR_GOERLI)
PROVIDERS = (ETHR, ETHR_GOERLI, WEB)

_ETHR_ID = re.compile(r"0x0[23][0-9a-fA-F]{64}")
_WEB_NAME = re.compile(r"[A-Za-z0-9][A-Za-z0-9._%-]*")


@dataclass(frozen=True)
class DidString:
    provider: str
    method_specific_id: str

    def __str__(self) -> str:
        return f"{self.provider}:{self.method_specific_id}"

    @property
    def key_bound(self) -> bool:
        return self.provider in ETHR_PROVIDERS


def parse_did(text: str) -> DidString:
    """Split and validate a DID; ethr ids come back lowercased."""
    if not isinstance(text, str):
        raise MalformedDid(f"DID must be a string, got {type(text).__name__}")
    for provider in (ETHR_GOERLI, ETHR):
        prefix = provider + ":"
        if text.startswith(prefix):
            msid = text[len(prefix):]
            if not _ETHR_ID.fullmatch(msid):
                raise MalformedDid(f"{text!r}: expected 0x + 66 hex chars of a compressed key")
            return DidString(provider, msid.lower())
    if text.startswith(WEB + ":"):
        name = text[len(WEB) + 1:]
        if not _WEB_NAME.fullmatch(name):
            raise MalformedDid(f"{text!r}: bad did:web name")
        return DidString(WEB, name)
    raise MalformedDid(f"{text!r}: unsupported DID method")


def normalize_did(text: str) -> str:
    return str(parse_did(text))


def derive_did(provider: str, compressed_public: bytes) -> str:
    if provider == WEB:
        raise UnsupportedProvider("did:web identifiers are chosen names, not derived from keys")
    if provider not in ETHR_PROVIDERS:
        raise UnsupportedProvider(f"unknown provider {provider!r}")
    raw = bytes(compressed_public)
    if len(raw) != 33 or raw[0] not in (2, 3):
        raise MalformedKey("expected a 33-byte compressed public key (0x02/0x03 prefix)")
    public_point(raw)  # on-curve check
    return f"{provider}:{to_hex(raw)}"


def did_public_key(did: str) -> bytes | None:
    """Uncompressed key embedded in an ethr DID; None for did:web."""
    parsed = parse_did(did)
    if not parsed.key_bound:
        return None
    return decompress_public(bytes.fromhex(parsed.method_specific_id[2:]))


def abbreviate_did(did: str) -> str:
    """``did:ethr:0x…1737`` -> ``did:ethr:.1737``; did:web stays whole."""
    try:
        parsed = parse_did(did)
    except MalformedDid:
        return did
    if not parsed.key_bound:
        return did
    return f"{parsed.provider}:.{parsed.method_specific_id[-4:]}"
