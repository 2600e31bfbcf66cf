"""Verifiable credentials with typed-data signature proofs.

Signing target (also the credential id)::

    keccak256(0x1901 || keccak256(canon(domain)) || keccak256(canon(payload)))

where ``payload`` is the credential without its ``proof``.  This keeps the
two-hash shape and domain of EIP-712 but hashes canonical JSON instead of
per-field struct encodings.
"""
from __future__ import annotations

import copy
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Sequence

from . import timefmt
from .crypto import canonical_encode, digest, from_hex, sign_digest, to_hex, verify_signature
from .dids import abbreviate_did, normalize_did
from .errors import (
    AlreadyRevoked,
    CredchainError,
    EmptyClaims,
    MalformedCredential,
    MalformedDid,
    NotFound,
    NotIssuer,
    NotRevocable,
    UnknownSubject,
)
from .ledger import CREDENTIAL_ISSUED, CREDENTIAL_REVOKED, Ledger, LedgerRecord
from .storage import load_json_list, write_json_atomic

PROOF_TYPE = "EthereumEip712Signature2021"
PROOF_PURPOSE = "assertionMethod"
BASE_TYPE = "VerifiableCredential"
DOMAIN = {"chainId": 1, "name": "VerifiableCredential", "version": "1"}

_DOMAIN_TYPES = [
    {"name": "name", "type": "string"},
    {"name": "version", "type": "string"},
    {"name": "chainId", "type": "uint256"},
]
CREDENTIAL_TYPES = {
    "EIP712Domain": _DOMAIN_TYPES,
    "VerifiableCredential": [
        {"name": "issuer", "type": "string"},
        {"name": "subject", "type": "string"},
        {"name": "type", "type": "string[]"},
        {"name": "claims", "type": "Claim[]"},
        {"name": "revocable", "type": "bool"},
        {"name": "issuanceDate", "type": "string"},
    ],
    "Claim": [
        {"name": "claimType", "type": "string"},
        {"name": "claimValue", "type": "string"},
    ],
}
CREDENTIAL_EIP712 = {"domain": DOMAIN, "types": CREDENTIAL_TYPES, "primaryType": BASE_TYPE}

# verification failure reasons
SIGNATURE_MISMATCH = "signature-mismatch"
REVOKED = "revoked"
ISSUER_UNRESOLVED = "issuer-unresolved"
ISSUER_UNVERIFIABLE = "issuer-unverifiable"
METHOD_MISMATCH = "verification-method-mismatch"
DOMAIN_MISMATCH = "domain-mismatch"
PROOF_TYPE_MISMATCH = "unsupported-proof-type"
PURPOSE_MISMATCH = "proof-purpose-mismatch"
EIP712_MISMATCH = "eip712-mismatch"
CREATED_MISMATCH = "proof-created-mismatch"


def typed_data_digest(domain: Mapping[str, Any], payload: Mapping[str, Any]) -> bytes:
    return digest(
        b"\x19\x01" + digest(canonical_encode(domain)) + digest(canonical_encode(payload))
    )


@dataclass(frozen=True)
class Claim:
    claim_type: str
    claim_value: str

    def to_dict(self) -> dict[str, str]:
        return {"claimType": self.claim_type, "claimValue": self.claim_value}


_PROOF_FIELDS = {"type", "created", "verificationMethod", "proofPurpose", "proofValue", "eip712"}
_PROOF_VALUE = re.compile(r"0x[0-9a-f]{130}")


@dataclass
class Proof:
    type: str
    created: str
    verification_method: str
    proof_purpose: str
    proof_value: str
    eip712: dict[str, Any]

    def to_dict(self) -> dict[str, Any]:
        return {
            "type": self.type,
            "created": self.created,
            "verificationMethod": self.verification_method,
            "proofPurpose": self.proof_purpose,
            "proofValue": self.proof_value,
            "eip712": self.eip712,
        }

    @classmethod
    def from_dict(cls, raw: Any, error: type[CredchainError]) -> "Proof":
        if not isinstance(raw, Mapping):
            raise error("proof must be an object")
        try:
            proof = cls(
                raw["type"],
                raw["created"],
                raw["verificationMethod"],
                raw["proofPurpose"],
                raw["proofValue"],
                raw["eip712"],
            )
        except KeyError as exc:
            raise error(f"proof is missing {exc}") from None
        for name in ("type", "created", "verification_method", "proof_purpose", "proof_value"):
            if not isinstance(getattr(proof, name), str):
                raise error(f"proof.{name} must be a string")
        extra = set(raw) - _PROOF_FIELDS
        if extra:
            raise error(f"unexpected proof fields {sorted(extra)}")
        # one spelling only, so a re-cased copy is not a second valid encoding
        if not _PROOF_VALUE.fullmatch(proof.proof_value):
            raise error("proofValue must be 0x + 130 lowercase hex chars")
        if not isinstance(proof.eip712, Mapping) or not isinstance(proof.eip712.get("domain"), Mapping):
            raise error("proof.eip712.domain missing")
        return proof

    @classmethod
    def sign(
        cls,
        private_scalar: int,
        signing_digest: bytes,
        signer_did: str,
        eip712: dict[str, Any],
        created: str | None = None,
    ) -> "Proof":
        sig = sign_digest(private_scalar, signing_digest)
        return cls(PROOF_TYPE, created or timefmt.now(), f"{signer_did}#controller", PROOF_PURPOSE, sig.hex(), eip712)


@dataclass
class VerifiableCredential:
    issuer: str
    subject: str
    types: list[str]
    claims: list[Claim]
    revocable: bool
    issuance_date: str
    proof: Proof | None = None

    def payload(self) -> dict[str, Any]:
        return {
            "issuer": self.issuer,
            "subject": self.subject,
            "type": list(self.types),
            "claims": [c.to_dict() for c in self.claims],
            "revocable": self.revocable,
            "issuanceDate": self.issuance_date,
        }

    def to_dict(self) -> dict[str, Any]:
        out = self.payload()
        if self.proof is not None:
            out["proof"] = self.proof.to_dict()
        return out

    @property
    def id(self) -> bytes:
        return credential_digest(self)

    @property
    def id_hex(self) -> str:
        return to_hex(self.id)

    @classmethod
    def from_dict(cls, raw: Any) -> "VerifiableCredential":
        if not isinstance(raw, Mapping):
            raise MalformedCredential("credential must be an object")
        try:
            issuer, subject, types = raw["issuer"], raw["subject"], raw["type"]
            claims_raw, revocable, issued = raw["claims"], raw["revocable"], raw["issuanceDate"]
        except KeyError as exc:
            raise MalformedCredential(f"credential is missing {exc}") from None
        if not isinstance(issuer, str) or not isinstance(subject, str):
            raise MalformedCredential("issuer and subject must be strings")
        if not isinstance(types, list) or not types or not all(isinstance(t, str) for t in types):
            raise MalformedCredential("type must be a non-empty list of strings")
        if not isinstance(claims_raw, list) or not claims_raw:
            raise MalformedCredential("claims must be a non-empty list")
        claims = []
        for c in claims_raw:
            if (
                not isinstance(c, Mapping)
                or set(c) != {"claimType", "claimValue"}
                or not all(isinstance(v, str) for v in c.values())
            ):
                raise MalformedCredential(f"bad claim {c!r}")
            claims.append(Claim(c["claimType"], c["claimValue"]))
        if not isinstance(revocable, bool):
            raise MalformedCredential("revocable must be a boolean")
        if not isinstance(issued, str):
            raise MalformedCredential("issuanceDate must be a string")
        extra = set(raw) - {"issuer", "subject", "type", "claims", "revocable", "issuanceDate", "proof"}
        if extra:
            raise MalformedCredential(f"unexpected fields {sorted(extra)}")
        proof = Proof.from_dict(raw["proof"], MalformedCredential) if "proof" in raw else None
        return cls(issuer, subject, list(types), claims, revocable, issued, proof)


def credential_digest(vc: VerifiableCredential | Mapping[str, Any]) -> bytes:
    """Signing digest and id; ignores any attached proof."""
    if isinstance(vc, VerifiableCredential):
        payload = vc.payload()
    else:
        payload = {k: v for k, v in vc.items() if k != "proof"}
    return typed_data_digest(DOMAIN, payload)


def revocation_digest(credential_id: bytes) -> bytes:
    """Ledger payload for a revocation (distinct from the issuance payload)."""
    return digest(canonical_encode({"credentialId": to_hex(credential_id), "kind": CREDENTIAL_REVOKED}))


@dataclass
class VerificationResult:
    valid: bool
    reasons: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.valid


Resolver = Callable[[str], Any]  # DID -> DidDocument, raises NotFound
RevocationCheck = Callable[[bytes, str], bool]  # (credential id, issuer) -> revoked?


def check_proof(
    proof: Proof,
    signer: str,
    signing_digest: bytes,
    eip712: Mapping[str, Any],
    created: str,
    resolve: Resolver,
    role: str = "issuer",
) -> list[str]:
    """Reasons a typed-data proof by ``signer`` fails (empty when it holds).

    Unsigned proof metadata must match exactly what the signer would have
    written, so no field of a stored item can change undetected.
    """
    reasons = []
    if proof.type != PROOF_TYPE:
        reasons.append(PROOF_TYPE_MISMATCH)
    if proof.proof_purpose != PROOF_PURPOSE:
        reasons.append(PURPOSE_MISMATCH)
    if proof.verification_method != f"{signer}#controller":
        reasons.append(METHOD_MISMATCH)
    if proof.eip712.get("domain") != eip712["domain"]:
        reasons.append(DOMAIN_MISMATCH)
    elif proof.eip712 != eip712:
        reasons.append(EIP712_MISMATCH)
    if proof.created != created:
        reasons.append(CREATED_MISMATCH)
    try:
        doc = resolve(signer)
    except (NotFound, MalformedDid):
        reasons.append(f"{role}-unresolved")
        return reasons
    key = doc.public_key()
    if key is None:
        reasons.append(f"{role}-unverifiable")
        return reasons
    try:
        ok = verify_signature(key, signing_digest, proof.proof_value)
    except CredchainError:
        ok = False
    if not ok:
        reasons.append(SIGNATURE_MISMATCH)
    return reasons


def verify_credential(
    vc: VerifiableCredential | Mapping[str, Any],
    resolve: Resolver,
    is_revoked: RevocationCheck | None = None,
) -> VerificationResult:
    """Valid iff the issuer resolves to a key, the proof verifies, and no
    revocation is on record.  Raises MalformedCredential for unusable input."""
    if not isinstance(vc, VerifiableCredential):
        vc = VerifiableCredential.from_dict(vc)
    if vc.proof is None:
        raise MalformedCredential("credential has no proof")
    cid = credential_digest(vc)
    reasons = check_proof(vc.proof, vc.issuer, cid, CREDENTIAL_EIP712, vc.issuance_date, resolve)
    if vc.revocable and is_revoked is not None and is_revoked(cid, vc.issuer):
        reasons.append(REVOKED)
    return VerificationResult(not reasons, reasons)


@dataclass(frozen=True)
class CredentialRow:
    created: str
    type: str
    from_: str
    to: str
    id: str


def display_type(types: Sequence[str]) -> str:
    """``VerifiableCredential,Profile`` or ``VerifiableCredential,(A, B)``."""
    head, extra = types[0], list(types[1:])
    if len(extra) == 1:
        return f"{head},{extra[0]}"
    return f"{head},({', '.join(extra)})"


def parse_type_list(values: Iterable[str]) -> list[str]:
    """Accept ``["Python Course", "Profile"]`` or ``["(Python Course, Profile)"]``.

    The base type is implied, so a typed ``VerifiableCredential,...`` prefix is dropped.
    """
    out = []
    for value in values:
        text = value.strip()
        if text.startswith(BASE_TYPE + ","):
            text = text[len(BASE_TYPE) + 1:].strip()
        if text.startswith("(") and text.endswith(")"):
            text = text[1:-1]
        out.extend(p for p in (part.strip() for part in text.split(",")) if p and p != BASE_TYPE)
    return out


class CredentialStore:
    """Credentials backed by ``credentials.json``; revocations live in the ledger."""

    def __init__(self, path: Path, registry, ledger: Ledger):
        self.path = Path(path)
        self.registry = registry
        self.ledger = ledger
        self._items: dict[bytes, VerifiableCredential] = {}
        for raw in load_json_list(self.path):
            vc = VerifiableCredential.from_dict(raw)
            self._items[vc.id] = vc

    def __len__(self) -> int:
        return len(self._items)

    def __contains__(self, credential_id: bytes) -> bool:
        return bytes(credential_id) in self._items

    def _save(self) -> None:
        write_json_atomic(self.path, [vc.to_dict() for vc in self._items.values()])

    def all(self) -> list[VerifiableCredential]:
        return list(self._items.values())

    def get(self, credential_id: bytes | str) -> VerifiableCredential:
        key = _as_id(credential_id)
        try:
            return self._items[key]
        except KeyError:
            raise NotFound(f"no credential {to_hex(key)}") from None

    def issue_credential(
        self,
        issuer: str,
        subject: str,
        extra_types: Sequence[str],
        claims: Sequence[Claim | tuple[str, str]],
        revocable: bool,
        issuance_date: str | None = None,
    ) -> VerifiableCredential:
        key = self.registry.signing_key(issuer)
        issuer = normalize_did(issuer)
        try:
            subject = self.registry.resolve_did(subject).did
        except NotFound:
            raise UnknownSubject(f"subject {subject} is not registered") from None
        claims = [c if isinstance(c, Claim) else Claim(*c) for c in claims]
        if not claims:
            raise EmptyClaims("a credential needs at least one claim")
        if any(not c.claim_type for c in claims):
            raise EmptyClaims("claim type must not be empty")
        extra_types = [t for t in extra_types if t]
        if not extra_types:
            raise MalformedCredential("give at least one credential type besides VerifiableCredential")
        vc = VerifiableCredential(
            issuer,
            subject,
            [BASE_TYPE, *extra_types],
            claims,
            bool(revocable),
            issuance_date or timefmt.now(),
        )
        cid = vc.id
        if cid in self._items:
            raise CredchainError(f"credential {to_hex(cid)} already issued")
        vc.proof = Proof.sign(key, cid, issuer, copy.deepcopy(CREDENTIAL_EIP712), created=vc.issuance_date)
        record = LedgerRecord(CREDENTIAL_ISSUED, cid, issuer, from_hex(vc.proof.proof_value), vc.proof.created)
        self.ledger.append_block([record])
        self._items[cid] = vc
        self._save()
        return vc

    def is_revoked(self, credential_id: bytes, issuer: str) -> bool:
        return any(
            r.author == issuer
            for _, r in self.ledger.find(CREDENTIAL_REVOKED, revocation_digest(credential_id))
        )

    def verify_credential(self, vc: VerifiableCredential | Mapping[str, Any]) -> VerificationResult:
        return verify_credential(vc, self.registry.resolve_did, self.is_revoked)

    def revoke_credential(self, issuer: str, credential_id: bytes | str) -> LedgerRecord:
        vc = self.get(credential_id)
        try:
            issuer = normalize_did(issuer)
        except MalformedDid:
            raise NotIssuer(f"{issuer} did not issue this credential") from None
        if vc.issuer != issuer:
            raise NotIssuer(f"{issuer} did not issue this credential")
        if not vc.revocable:
            raise NotRevocable("credential was issued as non-revocable")
        if self.is_revoked(vc.id, issuer):
            raise AlreadyRevoked("credential is already revoked")
        record = LedgerRecord.create(
            CREDENTIAL_REVOKED, revocation_digest(vc.id), issuer, self.registry.signing_key(issuer)
        )
        self.ledger.append_block([record])
        return record

    def add_existing(self, creds: Iterable[VerifiableCredential]) -> None:
        for vc in creds:
            self._items[vc.id] = vc
        self._save()

    def list_credentials(
        self,
        from_: str | None = None,
        to: str | None = None,
        type_contains: str | None = None,
    ) -> list[CredentialRow]:
        rows = []
        for vc in sorted(self._items.values(), key=lambda c: c.issuance_date):
            if from_ is not None and vc.issuer != _norm(from_):
                continue
            if to is not None and vc.subject != _norm(to):
                continue
            if type_contains is not None and not any(type_contains in t for t in vc.types):
                continue
            rows.append(
                CredentialRow(
                    vc.issuance_date,
                    display_type(vc.types),
                    abbreviate_did(vc.issuer),
                    abbreviate_did(vc.subject),
                    vc.id_hex,
                )
            )
        return rows


def _norm(did: str) -> str:
    try:
        return normalize_did(did)
    except MalformedDid:
        return did


def _as_id(credential_id: bytes | str) -> bytes:
    if isinstance(credential_id, str):
        try:
            return from_hex(credential_id, 32)
        except ValueError:
            raise NotFound(f"{credential_id!r} is not a credential id") from None
    return bytes(credential_id)
