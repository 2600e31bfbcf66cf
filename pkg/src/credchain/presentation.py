"""Holder-signed presentations: a portfolio of related credentials.

Stored shape (``presentations.json``)::

    {"hash": "<64 hex>", "verifiablePresentation": {tag, holder, verifier,
     verifiableCredential: [...], type, issuanceDate, proof: {...}}}

``hash`` is keccak-256 of the canonical proof-free presentation.  The proof
signs the same payload under the presentation typed-data domain.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from . import timefmt
from .credential import (
    CredentialStore,
    Proof,
    RevocationCheck,
    Resolver,
    VerifiableCredential,
    VerificationResult,
    check_proof,
    typed_data_digest,
    verify_credential,
)
from .crypto import canonical_encode, digest, from_hex, to_hex
from .dids import abbreviate_did, normalize_did
from .errors import (
    CredchainError,
    EmptyPortfolio,
    MalformedCredential,
    MalformedPresentation,
    NotFound,
)
from .ledger import PRESENTATION_CREATED, Ledger, LedgerRecord
from .storage import load_json_list, write_json_atomic

PRESENTATION_TYPE = "VerifiablePresentation"
PRESENTATION_DOMAIN = {"chainId": 1, "name": "VerifiablePresentation", "version": "1"}
PRESENTATION_TYPES = {
    "EIP712Domain": [
        {"name": "name", "type": "string"},
        {"name": "version", "type": "string"},
        {"name": "chainId", "type": "uint256"},
    ],
    "VerifiablePresentation": [
        {"name": "type", "type": "string[]"},
        {"name": "tag", "type": "string"},
        {"name": "holder", "type": "string"},
        {"name": "verifier", "type": "string[]"},
        {"name": "verifiableCredential", "type": "VerifiableCredential[]"},
        {"name": "issuanceDate", "type": "string"},
    ],
}
PRESENTATION_EIP712 = {"domain": PRESENTATION_DOMAIN, "types": PRESENTATION_TYPES, "primaryType": PRESENTATION_TYPE}
HASH_MISMATCH = "hash-mismatch"


@dataclass
class VerifiablePresentation:
    tag: str
    holder: str
    verifier: list[str]
    credentials: list[VerifiableCredential]
    issuance_date: str
    proof: Proof | None = None
    hash: str | None = field(default=None, compare=False)

    def payload(self) -> dict[str, Any]:
        return {
            "type": [PRESENTATION_TYPE],
            "tag": self.tag,
            "holder": self.holder,
            "verifier": list(self.verifier),
            "verifiableCredential": [vc.to_dict() for vc in self.credentials],
            "issuanceDate": self.issuance_date,
        }

    def computed_hash(self) -> str:
        return digest(canonical_encode(self.payload())).hex()

    @property
    def id(self) -> bytes:
        """Signing digest; also the ledger payload digest."""
        return typed_data_digest(PRESENTATION_DOMAIN, self.payload())

    def to_dict(self) -> dict[str, Any]:
        body = self.payload()
        if self.proof is not None:
            body["proof"] = self.proof.to_dict()
        return {"hash": self.hash or self.computed_hash(), "verifiablePresentation": body}

    @classmethod
    def from_dict(cls, raw: Any) -> "VerifiablePresentation":
        if not isinstance(raw, Mapping) or set(raw) != {"hash", "verifiablePresentation"}:
            raise MalformedPresentation("expected {hash, verifiablePresentation}")
        body = raw["verifiablePresentation"]
        if not isinstance(raw["hash"], str) or not isinstance(body, Mapping):
            raise MalformedPresentation("bad hash or verifiablePresentation")
        expected = {"type", "tag", "holder", "verifier", "verifiableCredential", "issuanceDate", "proof"}
        if set(body) != expected:
            raise MalformedPresentation(f"presentation fields must be {sorted(expected)}")
        if body["type"] != [PRESENTATION_TYPE]:
            raise MalformedPresentation("type must be ['VerifiablePresentation']")
        for name in ("tag", "holder", "issuanceDate"):
            if not isinstance(body[name], str):
                raise MalformedPresentation(f"{name} must be a string")
        verifier = body["verifier"]
        if not isinstance(verifier, list) or not all(isinstance(v, str) for v in verifier):
            raise MalformedPresentation("verifier must be a list of DIDs")
        embedded = body["verifiableCredential"]
        if not isinstance(embedded, list) or not embedded:
            raise MalformedPresentation("verifiableCredential must be a non-empty list")
        try:
            creds = [VerifiableCredential.from_dict(c) for c in embedded]
        except MalformedCredential as exc:
            raise MalformedPresentation(f"embedded credential: {exc}") from None
        if any(vc.proof is None for vc in creds):
            raise MalformedPresentation("embedded credentials must carry proofs")
        proof = Proof.from_dict(body["proof"], MalformedPresentation)
        return cls(body["tag"], body["holder"], list(verifier), creds, body["issuanceDate"], proof, raw["hash"])


def verify_presentation(
    vp: VerifiablePresentation | Mapping[str, Any],
    resolve: Resolver,
    is_revoked: RevocationCheck | None = None,
) -> VerificationResult:
    """Holder proof, hash field, and every embedded credential must hold.

    Constituent failures are reported as ``credential[i]: <reason>``.
    """
    if not isinstance(vp, VerifiablePresentation):
        vp = VerifiablePresentation.from_dict(vp)
    if vp.proof is None:
        raise MalformedPresentation("presentation has no proof")
    reasons = []
    if vp.hash is not None and vp.hash != vp.computed_hash():
        reasons.append(HASH_MISMATCH)
    reasons += check_proof(
        vp.proof, vp.holder, vp.id, PRESENTATION_EIP712, vp.issuance_date, resolve, role="holder"
    )
    for i, vc in enumerate(vp.credentials):
        result = verify_credential(vc, resolve, is_revoked)
        reasons += [f"credential[{i}]: {r}" for r in result.reasons]
    return VerificationResult(not reasons, reasons)


@dataclass(frozen=True)
class PresentationRow:
    created: str
    type: str
    holder: str
    verifier: str
    hash: str


class PresentationStore:
    def __init__(self, path: Path, registry, credentials: CredentialStore, ledger: Ledger):
        self.path = Path(path)
        self.registry = registry
        self.credentials = credentials
        self.ledger = ledger
        self._items: dict[str, VerifiablePresentation] = {}
        for raw in load_json_list(self.path):
            vp = VerifiablePresentation.from_dict(raw)
            self._items[vp.hash] = vp

    def __len__(self) -> int:
        return len(self._items)

    def __contains__(self, hash_: str) -> bool:
        return _norm_hash(hash_) in self._items

    def _save(self) -> None:
        write_json_atomic(self.path, [vp.to_dict() for vp in self._items.values()])

    def all(self) -> list[VerifiablePresentation]:
        return list(self._items.values())

    def get(self, hash_: str) -> VerifiablePresentation:
        try:
            return self._items[_norm_hash(hash_)]
        except KeyError:
            raise NotFound(f"no presentation {hash_}") from None

    def create_presentation(
        self,
        holder: str,
        tag: str,
        credential_ids: Sequence[bytes | str],
        verifier: Sequence[str] | None = None,
    ) -> VerifiablePresentation:
        if not credential_ids:
            raise EmptyPortfolio("a presentation needs at least one credential")
        key = self.registry.signing_key(holder)
        holder = normalize_did(holder)
        creds = [self.credentials.get(cid) for cid in credential_ids]
        vp = VerifiablePresentation(
            tag,
            holder,
            [normalize_did(v) for v in verifier or ()],
            creds,
            timefmt.now(),
        )
        vp.proof = Proof.sign(key, vp.id, holder, copy.deepcopy(PRESENTATION_EIP712), created=vp.issuance_date)
        vp.hash = vp.computed_hash()
        if vp.hash in self._items:
            raise CredchainError(f"presentation {vp.hash} already exists")
        record = LedgerRecord(PRESENTATION_CREATED, vp.id, holder, from_hex(vp.proof.proof_value), vp.proof.created)
        self.ledger.append_block([record])
        self._items[vp.hash] = vp
        self._save()
        return vp

    def verify_presentation(self, vp: VerifiablePresentation | Mapping[str, Any]) -> VerificationResult:
        return verify_presentation(vp, self.registry.resolve_did, self.credentials.is_revoked)

    def add_existing(self, items: Iterable[VerifiablePresentation]) -> None:
        for vp in items:
            self._items[vp.hash] = vp
        self._save()

    def list_presentations(self) -> list[PresentationRow]:
        return [
            PresentationRow(
                vp.issuance_date,
                PRESENTATION_TYPE,
                abbreviate_did(vp.holder),
                ", ".join(abbreviate_did(v) for v in vp.verifier),
                vp.hash,
            )
            for vp in sorted(self._items.values(), key=lambda p: p.issuance_date)
        ]


def _norm_hash(hash_: str) -> str:
    text = hash_.lower()
    return text[2:] if text.startswith("0x") else text
