"""DID documents: create, store, resolve, list.

The store is ``identifiers.json``; each entry is the DID document
plus ``privateKeyHex`` (unencrypted; see README).  Every creation appends a
self-signed ``DidRegistration`` record to the ledger.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .crypto import (
    KeyPair,
    canonical_encode,
    compress_public,
    digest,
    from_hex,
    generate_keypair,
)
from .dids import ETHR, ETHR_PROVIDERS, PROVIDERS, WEB, derive_did, normalize_did, parse_did
from .errors import (
    CredchainError,
    DuplicateIdentifier,
    MalformedDid,
    MissingName,
    NoSigningKey,
    NotFound,
    UnsupportedProvider,
)
from .ledger import DID_REGISTRATION, Ledger, LedgerRecord
from .storage import load_json_list, write_json_atomic

ALGORITHMS = ("ES256K", "ES256K-R", "eth_signTransaction", "eth_signTypedData")
KEY_TYPE = "Secp256k1"


@dataclass
class KeyEntry:
    kid: str
    kms: str
    type: str
    public_key_hex: str
    algorithms: list[str] = field(default_factory=lambda: list(ALGORITHMS))

    def to_dict(self) -> dict[str, Any]:
        return {
            "kid": self.kid,
            "kms": self.kms,
            "type": self.type,
            "publicKeyHex": self.public_key_hex,
            "meta": {"algorithms": list(self.algorithms)},
        }

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "KeyEntry":
        return cls(raw["kid"], raw["kms"], raw["type"], raw["publicKeyHex"], list(raw["meta"]["algorithms"]))


@dataclass
class DidDocument:
    did: str
    provider: str
    alias: str
    controller_key_id: str | None
    keys: list[KeyEntry]

    @property
    def verifiable(self) -> bool:
        """Whether the document binds a key (false for did:web)."""
        return self.provider in ETHR_PROVIDERS and self.controller_key_id is not None

    def public_key(self) -> bytes | None:
        return bytes.fromhex(self.controller_key_id) if self.verifiable else None

    def to_dict(self) -> dict[str, Any]:
        return {
            "did": self.did,
            "provider": self.provider,
            "alias": self.alias,
            "controllerKeyId": self.controller_key_id,
            "keys": [k.to_dict() for k in self.keys],
        }

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "DidDocument":
        try:
            doc = cls(
                raw["did"],
                raw["provider"],
                raw["alias"],
                raw["controllerKeyId"],
                [KeyEntry.from_dict(k) for k in raw["keys"]],
            )
        except (KeyError, TypeError) as exc:
            raise MalformedDid(f"DID document is missing {exc}") from None
        doc.check()
        return doc

    def content_digest(self) -> bytes:
        return digest(canonical_encode(self.to_dict()))

    def check(self) -> None:
        """Raise MalformedDid unless the document is internally consistent."""
        parsed = parse_did(self.did)
        if str(parsed) != self.did or parsed.provider != self.provider:
            raise MalformedDid(f"{self.did}: provider/DID mismatch")
        if not isinstance(self.alias, str) or not self.alias:
            raise MalformedDid(f"{self.did}: empty alias")
        if not parsed.key_bound:
            if self.controller_key_id is not None or self.keys:
                raise MalformedDid(f"{self.did}: did:web documents carry no keys here")
            return
        try:
            compressed = compress_public(from_hex(self.controller_key_id or "", 65))
        except (CredchainError, ValueError):
            raise MalformedDid(f"{self.did}: controllerKeyId is not an uncompressed key") from None
        if "0x" + compressed.hex() != parsed.method_specific_id:
            raise MalformedDid(f"{self.did}: controller key does not match the DID")
        matching = [k for k in self.keys if k.kid == self.controller_key_id]
        if len(matching) != 1 or any(k.kid != k.public_key_hex for k in self.keys):
            raise MalformedDid(f"{self.did}: key entries do not match the controller key")
        if not set(ALGORITHMS[:3]) <= set(matching[0].algorithms):
            raise MalformedDid(f"{self.did}: key entry lacks required algorithms")


@dataclass(frozen=True)
class IdentifierRow:
    provider: str
    alias: str
    did: str


def build_document(alias: str, provider: str, keypair: KeyPair, kms: str = "local") -> DidDocument:
    did = derive_did(provider, keypair.public_compressed)
    key_hex = keypair.public_uncompressed.hex()
    return DidDocument(did, provider, alias, key_hex, [KeyEntry(key_hex, kms, KEY_TYPE, key_hex)])


class Registry:
    """Identifier store backed by ``identifiers.json``."""

    def __init__(self, path: Path, ledger: Ledger):
        self.path = Path(path)
        self.ledger = ledger
        self._docs: dict[str, DidDocument] = {}
        self._keys: dict[str, int] = {}
        for raw in load_json_list(self.path):
            doc = DidDocument.from_dict(raw)
            self._docs[doc.did] = doc
            if raw.get("privateKeyHex"):
                self._keys[doc.did] = int(raw["privateKeyHex"], 16)

    def __len__(self) -> int:
        return len(self._docs)

    def __contains__(self, did: str) -> bool:
        try:
            return normalize_did(did) in self._docs
        except MalformedDid:
            return False

    def _save(self) -> None:
        rows = []
        for did, doc in self._docs.items():
            row = doc.to_dict()
            key = self._keys.get(did)
            row["privateKeyHex"] = key.to_bytes(32, "big").hex() if key is not None else None
            rows.append(row)
        write_json_atomic(self.path, rows)

    def create_identifier(
        self,
        alias: str,
        provider: str = ETHR,
        kms: str = "local",
        name: str | None = None,
        entropy: bytes | None = None,
    ) -> tuple[DidDocument, KeyPair | None]:
        """New identifier; returns the document and its keypair (None for did:web)."""
        if provider not in PROVIDERS:
            raise UnsupportedProvider(f"unknown provider {provider!r} (choose from {', '.join(PROVIDERS)})")
        if not isinstance(alias, str) or not alias.strip():
            raise ValueError("alias must be a non-empty string")
        if kms != "local":
            raise ValueError(f"unsupported key management system {kms!r}; only 'local'")
        if provider == WEB:
            if not name:
                raise MissingName("did:web needs a name, e.g. did:web:notSarah")
            doc = DidDocument(normalize_did(f"{WEB}:{name}"), WEB, alias, None, [])
            keypair = None
            # no key binding: the registration is signed by a throwaway key
            signer = generate_keypair().private_scalar
        else:
            keypair = generate_keypair(entropy)
            doc = build_document(alias, provider, keypair, kms)
            signer = keypair.private_scalar
        if doc.did in self._docs:
            raise DuplicateIdentifier(f"{doc.did} already exists")
        record = LedgerRecord.create(DID_REGISTRATION, doc.content_digest(), doc.did, signer)
        self.ledger.append_block([record])
        self._docs[doc.did] = doc
        if keypair is not None:
            self._keys[doc.did] = keypair.private_scalar
        self._save()
        return doc, keypair

    def stage_external(self, doc: DidDocument, registration: LedgerRecord) -> None:
        """Validate a document registered by another agent (no private key)."""
        doc.check()
        if registration.kind != DID_REGISTRATION or registration.author != doc.did:
            raise MalformedDid(f"{doc.did}: registration record does not belong to this DID")
        if registration.payload_digest != doc.content_digest():
            raise MalformedDid(f"{doc.did}: registration record does not match the document")
        if not registration.signature_ok():
            raise MalformedDid(f"{doc.did}: registration signature does not verify")

    def add_external(self, docs: list[DidDocument]) -> None:
        for doc in docs:
            self._docs[doc.did] = doc
        self._save()

    def resolve_did(self, did: str) -> DidDocument:
        try:
            key = normalize_did(did)
        except MalformedDid:
            raise NotFound(f"{did!r} is not a resolvable DID") from None
        try:
            return self._docs[key]
        except KeyError:
            raise NotFound(f"{did} is not registered") from None

    def list_identifiers(self) -> list[IdentifierRow]:
        return [IdentifierRow(d.provider, d.alias, d.did) for d in self._docs.values()]

    def documents(self) -> list[DidDocument]:
        return list(self._docs.values())

    def has_signing_key(self, did: str) -> bool:
        try:
            return normalize_did(did) in self._keys
        except MalformedDid:
            return False

    def signing_key(self, did: str) -> int:
        try:
            return self._keys[normalize_did(did)]
        except (KeyError, MalformedDid):
            raise NoSigningKey(f"no local signing key for {did}") from None

    def registration_record(self, did: str) -> LedgerRecord | None:
        doc = self.resolve_did(did)
        found = [r for _, r in self.ledger.find(DID_REGISTRATION, doc.content_digest()) if r.author == doc.did]
        return found[0] if found else None
