"""The agent: one data directory holding all stores plus the ledger.

Data directory layout::

    identifiers.json  credentials.json  presentations.json
    messages.json     ledger.jsonl

Private keys sit unencrypted in ``identifiers.json``.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from . import timefmt
from .credential import (
    REVOKED,
    CredentialStore,
    VerifiableCredential,
    revocation_digest,
    verify_credential,
)
from .crypto import canonical_encode, digest, from_hex, sign_digest, verify_signature
from .dids import normalize_did
from .errors import (
    CredchainError,
    MalformedBundle,
    MalformedDid,
    NotFound,
    UnknownRecipient,
)
from .identity import DidDocument, Registry
from .ledger import (
    CREDENTIAL_ISSUED,
    CREDENTIAL_REVOKED,
    DID_REGISTRATION,
    MESSAGE,
    PRESENTATION_CREATED,
    Ledger,
    LedgerRecord,
)
from .presentation import PresentationStore, VerifiablePresentation, verify_presentation
from .storage import load_json_list, write_json_atomic

ENV_HOME = "CREDCHAIN_HOME"


def default_data_dir() -> Path:
    env = os.environ.get(ENV_HOME)
    if env:
        return Path(env).expanduser()
    return Path.home() / ".credchain"


@dataclass
class Message:
    sender: str
    recipient: str
    body: str
    timestamp: str
    signature: str
    verified: bool | None = field(default=None, compare=False)

    def payload(self) -> dict[str, str]:
        return {"from": self.sender, "to": self.recipient, "body": self.body, "timestamp": self.timestamp}

    def digest(self) -> bytes:
        return digest(canonical_encode(self.payload()))

    def to_dict(self) -> dict[str, str]:
        return {**self.payload(), "signature": self.signature}

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "Message":
        return cls(raw["from"], raw["to"], raw["body"], raw["timestamp"], raw["signature"])


@dataclass
class ExportBundle:
    """Portable, self-verifying copy of what an owner holds.

    Items are kept in wire form so one damaged entry can be rejected on
    import without failing the whole bundle.
    """

    owner: str
    credentials: list[dict[str, Any]]
    presentations: list[dict[str, Any]]
    # registrations of every DID the items mention, replayable elsewhere
    identifiers: list[dict[str, Any]] = field(default_factory=list)
    revocations: list[dict[str, Any]] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "owner": self.owner,
            "credentials": self.credentials,
            "presentations": self.presentations,
            "identifiers": self.identifiers,
            "revocations": self.revocations,
        }

    @classmethod
    def from_dict(cls, raw: Any) -> "ExportBundle":
        if not isinstance(raw, Mapping) or not isinstance(raw.get("owner"), str):
            raise MalformedBundle("bundle must be an object with an owner")
        lists = {}
        for key in ("credentials", "presentations", "identifiers", "revocations"):
            lists[key] = raw.get(key, [])
            if not isinstance(lists[key], list):
                raise MalformedBundle(f"{key} must be a list")
        return cls(raw["owner"], **lists)


@dataclass
class ImportReport:
    imported: int = 0
    identifiers: int = 0
    skipped: int = 0
    rejected: list[tuple[str, str]] = field(default_factory=list)

    @property
    def count(self) -> int:
        return self.imported


@dataclass
class AuditReport:
    ok: bool
    bad_block: int | None = None
    problems: list[str] = field(default_factory=list)


class Agent:
    def __init__(self, data_dir: str | os.PathLike | None = None):
        self.data_dir = Path(data_dir) if data_dir is not None else default_data_dir()
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.ledger = Ledger.open(self.data_dir / "ledger.jsonl")
        self.identities = Registry(self.data_dir / "identifiers.json", self.ledger)
        self.credentials = CredentialStore(self.data_dir / "credentials.json", self.identities, self.ledger)
        self.presentations = PresentationStore(
            self.data_dir / "presentations.json", self.identities, self.credentials, self.ledger
        )
        self._messages_path = self.data_dir / "messages.json"
        self._messages = [Message.from_dict(m) for m in load_json_list(self._messages_path)]

    # -- messages

    def send_message(self, sender: str, recipient: str, body: str) -> Message:
        key = self.identities.signing_key(sender)
        sender = normalize_did(sender)
        try:
            recipient = self.identities.resolve_did(recipient).did
        except NotFound:
            raise UnknownRecipient(f"recipient {recipient} is not registered") from None
        msg = Message(sender, recipient, body, timefmt.now(), "")
        sig = sign_digest(key, msg.digest())
        msg.signature = sig.hex()
        self.ledger.append_block([LedgerRecord(MESSAGE, msg.digest(), sender, sig.to_bytes(), msg.timestamp)])
        self._messages.append(msg)
        write_json_atomic(self._messages_path, [m.to_dict() for m in self._messages])
        msg.verified = True
        return msg

    def message_authentic(self, msg: Message) -> bool:
        try:
            key = self.identities.resolve_did(msg.sender).public_key()
            return key is not None and verify_signature(key, msg.digest(), msg.signature)
        except (CredchainError, ValueError):
            return False

    def list_messages(self, did: str | None = None) -> list[Message]:
        if did is not None:
            try:
                did = normalize_did(did)
            except MalformedDid:
                return []
        out = []
        for msg in sorted(self._messages, key=lambda m: m.timestamp):
            if did is None or did in (msg.sender, msg.recipient):
                out.append(
                    Message(msg.sender, msg.recipient, msg.body, msg.timestamp, msg.signature, self.message_authentic(msg))
                )
        return out

    # -- portability

    def _registration_entry(self, did: str) -> dict[str, Any] | None:
        record = self.identities.registration_record(did)
        if record is None:
            return None
        return {"document": self.identities.resolve_did(did).to_dict(), "registration": record.to_dict()}

    def export_bundle(self, owner: str) -> ExportBundle:
        owner = self.identities.resolve_did(owner).did
        creds = [vc for vc in self.credentials.all() if vc.subject == owner]
        pres = [vp for vp in self.presentations.all() if vp.holder == owner]
        mentioned = {owner}
        for vc in creds + [c for vp in pres for c in vp.credentials]:
            mentioned.update((vc.issuer, vc.subject))
        identifiers = []
        for doc in self.identities.documents():
            if doc.did in mentioned:
                entry = self._registration_entry(doc.did)
                if entry:
                    identifiers.append(entry)
        revocations = []
        for vc in creds + [c for vp in pres for c in vp.credentials]:
            for _, rec in self.ledger.find(CREDENTIAL_REVOKED, revocation_digest(vc.id)):
                if rec.to_dict() not in revocations:
                    revocations.append(rec.to_dict())
        return ExportBundle(
            owner, [vc.to_dict() for vc in creds], [vp.to_dict() for vp in pres], identifiers, revocations
        )

    def import_bundle(self, bundle: ExportBundle | Mapping[str, Any]) -> ImportReport:
        """Insert every item whose proofs verify here; report the rest.

        All accepted items go into one ledger block, replaying the original
        signatures (registrations, issuance proofs, presentation proofs), so
        no private key is needed.
        """
        if not isinstance(bundle, ExportBundle):
            bundle = ExportBundle.from_dict(bundle)
        report = ImportReport()
        records: list[LedgerRecord] = []
        staged_docs: dict[str, DidDocument] = {}

        for entry in bundle.identifiers:
            try:
                doc = DidDocument.from_dict(entry["document"])
                reg = LedgerRecord.from_dict(entry["registration"])
                if doc.did in self.identities:
                    if self.identities.resolve_did(doc.did).to_dict() != doc.to_dict():
                        report.rejected.append((doc.did, "conflicts with the local document"))
                    continue
                self.identities.stage_external(doc, reg)
            except (CredchainError, KeyError, TypeError, ValueError) as exc:
                report.rejected.append((_label(entry), f"identifier: {exc}"))
                continue
            staged_docs[doc.did] = doc
            records.append(reg)

        def resolve(did: str) -> DidDocument:
            did = normalize_did(did)
            if did in staged_docs:
                return staged_docs[did]
            return self.identities.resolve_did(did)

        staged_revocations: set[bytes] = set()
        for raw in bundle.revocations:
            try:
                rec = LedgerRecord.from_dict(raw)
            except CredchainError as exc:
                report.rejected.append(("revocation", str(exc)))
                continue
            if rec.kind != CREDENTIAL_REVOKED or not rec.signature_ok():
                report.rejected.append(("revocation", "bad revocation record"))
                continue
            known = self.ledger.find(CREDENTIAL_REVOKED, rec.payload_digest)
            if not known and rec.payload_digest not in staged_revocations:
                records.append(rec)
                staged_revocations.add(rec.payload_digest)

        def is_revoked(cid: bytes, issuer: str) -> bool:
            rd = revocation_digest(cid)
            if rd in staged_revocations:
                return any(r.author == issuer for r in records if r.payload_digest == rd)
            return self.credentials.is_revoked(cid, issuer)

        new_creds: dict[bytes, VerifiableCredential] = {}
        for raw in bundle.credentials:
            try:
                vc = VerifiableCredential.from_dict(raw)
                result = verify_credential(vc, resolve, is_revoked)
            except CredchainError as exc:
                report.rejected.append((_label(raw), f"malformed: {exc}"))
                continue
            if not result.valid:
                report.rejected.append((vc.id_hex, ", ".join(result.reasons)))
                continue
            if vc.id in self.credentials or vc.id in new_creds:
                report.skipped += 1
                continue
            new_creds[vc.id] = vc
            records.append(LedgerRecord(CREDENTIAL_ISSUED, vc.id, vc.issuer, from_hex(vc.proof.proof_value), vc.proof.created))

        new_pres: dict[str, VerifiablePresentation] = {}
        for raw in bundle.presentations:
            try:
                vp = VerifiablePresentation.from_dict(raw)
                result = verify_presentation(vp, resolve, is_revoked)
            except CredchainError as exc:
                report.rejected.append((_label(raw), f"malformed: {exc}"))
                continue
            if not result.valid:
                report.rejected.append((vp.hash, ", ".join(result.reasons)))
                continue
            if vp.hash in self.presentations or vp.hash in new_pres:
                report.skipped += 1
                continue
            new_pres[vp.hash] = vp
            records.append(LedgerRecord(PRESENTATION_CREATED, vp.id, vp.holder, from_hex(vp.proof.proof_value), vp.proof.created))

        if records:
            self.ledger.append_block(records)
            if staged_docs:
                self.identities.add_external(list(staged_docs.values()))
            if new_creds:
                self.credentials.add_existing(new_creds.values())
            if new_pres:
                self.presentations.add_existing(new_pres.values())
        report.identifiers = len(staged_docs)
        report.imported = len(new_creds) + len(new_pres)
        return report

    # -- audit

    def audit(self) -> AuditReport:
        """Chain validity plus store <-> ledger consistency."""
        chain = self.ledger.check()
        if not chain.ok:
            return AuditReport(False, chain.bad_index, [f"ledger block {chain.bad_index}: {chain.reason}"])
        problems = []

        def expect_one(kind: str, payload: bytes, author: str, what: str) -> None:
            hits = [r for _, r in self.ledger.find(kind, payload) if r.author == author]
            if len(hits) != 1:
                problems.append(f"{what}: {len(hits)} matching {kind} records (expected 1)")

        for doc in self.identities.documents():
            try:
                doc.check()
            except CredchainError as exc:
                problems.append(f"identifiers.json: {exc}")
                continue
            expect_one(DID_REGISTRATION, doc.content_digest(), doc.did, f"identifiers.json {doc.did}")
        for vc in self.credentials.all():
            what = f"credentials.json {vc.id_hex}"
            expect_one(CREDENTIAL_ISSUED, vc.id, vc.issuer, what)
            bad = [r for r in self.credentials.verify_credential(vc).reasons if r != REVOKED]
            if bad:
                problems.append(f"{what}: {', '.join(bad)}")
        for vp in self.presentations.all():
            what = f"presentations.json {vp.hash}"
            expect_one(PRESENTATION_CREATED, vp.id, vp.holder, what)
            bad = [r for r in self.presentations.verify_presentation(vp).reasons if not r.endswith(REVOKED)]
            if bad:
                problems.append(f"{what}: {', '.join(bad)}")
        for msg in self._messages:
            what = f"messages.json {msg.sender} -> {msg.recipient} @ {msg.timestamp}"
            expect_one(MESSAGE, msg.digest(), msg.sender, what)
            if not self.message_authentic(msg):
                problems.append(f"{what}: signature does not verify")
        return AuditReport(not problems, None, problems)


def _label(raw: Any) -> str:
    if isinstance(raw, Mapping):
        for key in ("hash", "did", "issuer"):
            if isinstance(raw.get(key), str):
                return raw[key]
        doc = raw.get("document")
        if isinstance(doc, Mapping) and isinstance(doc.get("did"), str):
            return doc["did"]
    return "<item>"
