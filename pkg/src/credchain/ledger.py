"""Append-only hash-chained block store.

Every state change in an agent lands here as a signed ``LedgerRecord``
inside a new ``Block``.  Blocks only carry digests; the full payloads live
in the JSON store files, and ``Agent.audit`` cross-checks the two.

The file is ``ledger.jsonl``: one canonical-JSON block per line.  Hashes
are computed over the *stored* JSON values, so any edit to the file (even
one that parses to the same bytes, like hex case) breaks a hash.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from filelock import FileLock

from . import timefmt
from .crypto import (
    canonical_encode,
    digest,
    from_hex,
    recover_public,
    sign_digest,
    to_hex,
    verify_signature,
)
from .dids import did_public_key, normalize_did
from .errors import (
    CorruptLedger,
    CredchainError,
    EmptyBlock,
    InvalidRecord,
    MalformedSignature,
    UnsupportedValue,
)

DID_REGISTRATION = "DidRegistration"
CREDENTIAL_ISSUED = "CredentialIssued"
CREDENTIAL_REVOKED = "CredentialRevoked"
PRESENTATION_CREATED = "PresentationCreated"
MESSAGE = "Message"
KINDS = (DID_REGISTRATION, CREDENTIAL_ISSUED, CREDENTIAL_REVOKED, PRESENTATION_CREATED, MESSAGE)

ZERO_HASH = bytes(32)

_RECORD_FIELDS = {"kind", "payloadDigest", "author", "signature", "timestamp"}
_BLOCK_FIELDS = {"index", "prevHash", "timestamp", "records", "blockHash"}


def _is_hex(value: Any, nbytes: int) -> bool:
    if not isinstance(value, str) or len(value) != 2 + 2 * nbytes or not value.startswith("0x"):
        return False
    return all(c in "0123456789abcdef" for c in value[2:])


@dataclass(frozen=True)
class LedgerRecord:
    kind: str
    payload_digest: bytes
    author: str
    signature: bytes
    timestamp: str

    @classmethod
    def create(
        cls,
        kind: str,
        payload_digest: bytes,
        author: str,
        private_scalar: int,
        timestamp: str | None = None,
    ) -> "LedgerRecord":
        sig = sign_digest(private_scalar, payload_digest)
        return cls(kind, bytes(payload_digest), author, sig.to_bytes(), timestamp or timefmt.now())

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "payloadDigest": to_hex(self.payload_digest),
            "author": self.author,
            "signature": to_hex(self.signature),
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "LedgerRecord":
        problem = _record_shape_problem(raw)
        if problem:
            raise InvalidRecord(problem)
        return cls(
            raw["kind"],
            from_hex(raw["payloadDigest"]),
            raw["author"],
            from_hex(raw["signature"]),
            raw["timestamp"],
        )

    def signature_ok(self) -> bool:
        """Check the author's signature over ``payload_digest``.

        ethr authors carry their key in the DID itself.  did:web authors have
        no key binding, so only their own registration is accepted, and only
        as far as the signature recovers to some key.
        """
        try:
            key = did_public_key(self.author)
            if key is None:
                if self.kind != DID_REGISTRATION:
                    return False
                recover_public(self.payload_digest, self.signature)
                return True
            return verify_signature(key, self.payload_digest, self.signature)
        except (CredchainError, ValueError):
            return False


def _record_shape_problem(raw: Any) -> str | None:
    if not isinstance(raw, Mapping) or set(raw) != _RECORD_FIELDS:
        return "record fields"
    if raw["kind"] not in KINDS:
        return f"unknown record kind {raw['kind']!r}"
    if not _is_hex(raw["payloadDigest"], 32):
        return "payloadDigest format"
    if not _is_hex(raw["signature"], 65):
        return "signature format"
    if not timefmt.is_timestamp(raw["timestamp"]):
        return "record timestamp format"
    try:
        if normalize_did(raw["author"]) != raw["author"]:
            return "author DID not in canonical form"
    except CredchainError:
        return "author DID"
    return None


def block_hash(index: int, prev_hash: bytes, timestamp: str, records: Sequence[LedgerRecord]) -> bytes:
    return _header_hash(
        {
            "index": index,
            "prevHash": to_hex(prev_hash),
            "timestamp": timestamp,
            "records": [r.to_dict() for r in records],
        }
    )


def _header_hash(header: Mapping[str, Any]) -> bytes:
    return digest(canonical_encode(header))


@dataclass(frozen=True)
class Block:
    index: int
    prev_hash: bytes
    timestamp: str
    records: tuple[LedgerRecord, ...]
    block_hash: bytes

    @classmethod
    def build(cls, index: int, prev_hash: bytes, records: Iterable[LedgerRecord], timestamp: str | None = None) -> "Block":
        records = tuple(records)
        timestamp = timestamp or timefmt.now()
        return cls(index, prev_hash, timestamp, records, block_hash(index, prev_hash, timestamp, records))

    def to_dict(self) -> dict[str, Any]:
        return {
            "index": self.index,
            "prevHash": to_hex(self.prev_hash),
            "timestamp": self.timestamp,
            "records": [r.to_dict() for r in self.records],
            "blockHash": to_hex(self.block_hash),
        }

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "Block":
        return cls(
            raw["index"],
            from_hex(raw["prevHash"]),
            raw["timestamp"],
            tuple(LedgerRecord.from_dict(r) for r in raw["records"]),
            from_hex(raw["blockHash"]),
        )


@dataclass(frozen=True)
class ChainReport:
    ok: bool
    bad_index: int | None = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


def _block_problem(raw: Any, expected_index: int, prev_hash: str | None) -> str | None:
    if not isinstance(raw, Mapping) or set(raw) != _BLOCK_FIELDS:
        return "block fields"
    index = raw["index"]
    if type(index) is not int or index != expected_index:
        return f"index {index!r}, expected {expected_index}"
    if not _is_hex(raw["prevHash"], 32) or not _is_hex(raw["blockHash"], 32):
        return "hash format"
    if not timefmt.is_timestamp(raw["timestamp"]):
        return "block timestamp format"
    records = raw["records"]
    if not isinstance(records, list):
        return "records is not a list"
    if expected_index == 0:
        if raw["prevHash"] != to_hex(ZERO_HASH) or records:
            return "genesis must have zero prevHash and no records"
    else:
        if raw["prevHash"] != prev_hash:
            return "prevHash does not link to the previous block"
        if not records:
            return "empty block"
    for rec in records:
        problem = _record_shape_problem(rec)
        if problem:
            return problem
    header = {k: raw[k] for k in ("index", "prevHash", "timestamp", "records")}
    try:
        computed = to_hex(_header_hash(header))
    except UnsupportedValue:
        return "unencodable value"
    if computed != raw["blockHash"]:
        return "blockHash does not match contents"
    return None


def verify_chain(blocks: Sequence[Mapping[str, Any]], anchor: tuple[int, str] | None = None) -> ChainReport:
    """Check wire-form blocks; never raises on bad content.

    Pass one checks shape, indices, hash links and block hashes (cheap);
    pass two checks every record signature.  ``anchor`` = (index, blockHash)
    of a block the caller already trusts, which catches truncation of the
    tip that a bare hash chain cannot see.
    """
    if not blocks:
        return ChainReport(False, 0, "no genesis block")
    prev = None
    for i, raw in enumerate(blocks):
        problem = _block_problem(raw, i, prev)
        if problem:
            return ChainReport(False, i, problem)
        prev = raw["blockHash"]
    if anchor is not None:
        idx, hsh = anchor
        if idx >= len(blocks):
            return ChainReport(False, len(blocks), f"chain truncated below known block {idx}")
        if blocks[idx]["blockHash"] != hsh:
            return ChainReport(False, idx, "block differs from the known tip")
    for i, raw in enumerate(blocks):
        for rec in raw["records"]:
            if not LedgerRecord.from_dict(rec).signature_ok():
                return ChainReport(False, i, f"bad {rec['kind']} signature by {rec['author']}")
    return ChainReport(True)


def _read_raw_blocks(path: Path) -> tuple[list[dict[str, Any]], int]:
    data = path.read_bytes()
    if data and not data.endswith(b"\n"):
        raise CorruptLedger("ledger does not end with a newline", data.count(b"\n"))
    raws = []
    for i, line in enumerate(data.split(b"\n")[:-1]):
        try:
            obj = json.loads(line)
            canonical = canonical_encode(obj)
        except (ValueError, UnsupportedValue) as exc:
            raise CorruptLedger(f"block {i}: unreadable line ({exc})", i) from None
        if canonical != line:
            raise CorruptLedger(f"block {i}: line is not canonical JSON", i)
        raws.append(obj)
    return raws, len(data)


class Ledger:
    """Single-writer ledger file; appends serialize on an exclusive file lock."""

    def __init__(self, path: Path, blocks: list[Block], size: int):
        self.path = path
        self._lock = FileLock(str(path) + ".lock")
        self._blocks: list[Block] = []
        self._by_digest: dict[bytes, list[tuple[int, LedgerRecord]]] = {}
        self._size = size
        for b in blocks:
            self._adopt(b)

    @classmethod
    def open(cls, path: str | os.PathLike) -> "Ledger":
        """Load and validate, or create with a genesis block."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with FileLock(str(path) + ".lock"):
            if not path.exists():
                genesis = Block.build(0, ZERO_HASH, ())
                _append_line(path, genesis)
            raws, size = _read_raw_blocks(path)
        report = verify_chain(raws)
        if not report.ok:
            raise CorruptLedger(f"block {report.bad_index}: {report.reason}", report.bad_index)
        return cls(path, [Block.from_dict(r) for r in raws], size)

    def _adopt(self, block: Block) -> None:
        self._blocks.append(block)
        for rec in block.records:
            self._by_digest.setdefault(rec.payload_digest, []).append((block.index, rec))

    def _sync(self) -> None:
        # another process may have appended since we loaded
        if self.path.stat().st_size == self._size:
            return
        raws, size = _read_raw_blocks(self.path)
        report = verify_chain(raws, anchor=self._anchor())
        if not report.ok:
            raise CorruptLedger(f"block {report.bad_index}: {report.reason}", report.bad_index)
        for raw in raws[len(self._blocks):]:
            self._adopt(Block.from_dict(raw))
        self._size = size

    def _anchor(self) -> tuple[int, str]:
        tip = self._blocks[-1]
        return tip.index, to_hex(tip.block_hash)

    # -- read side

    @property
    def blocks(self) -> tuple[Block, ...]:
        return tuple(self._blocks)

    @property
    def tip(self) -> Block:
        return self._blocks[-1]

    def __len__(self) -> int:
        return len(self._blocks)

    def wire_blocks(self) -> list[dict[str, Any]]:
        return [b.to_dict() for b in self._blocks]

    def check(self) -> ChainReport:
        """Re-read the file and verify it against what this process knows."""
        try:
            with self._lock:
                raws, _ = _read_raw_blocks(self.path)
        except CorruptLedger as exc:
            return ChainReport(False, exc.block_index, str(exc))
        except OSError as exc:
            return ChainReport(False, 0, str(exc))
        return verify_chain(raws, anchor=self._anchor())

    def verify_chain(self) -> bool:
        return self.check().ok

    def query_records(
        self,
        kind: str | None = None,
        author: str | None = None,
        since: str | None = None,
    ) -> list[tuple[int, LedgerRecord]]:
        out = []
        for block in self._blocks:
            for rec in block.records:
                if kind is not None and rec.kind != kind:
                    continue
                if author is not None and rec.author != author:
                    continue
                if since is not None and rec.timestamp < since:
                    continue
                out.append((block.index, rec))
        return out

    def find(self, kind: str, payload_digest: bytes) -> list[tuple[int, LedgerRecord]]:
        return [(i, r) for i, r in self._by_digest.get(bytes(payload_digest), ()) if r.kind == kind]

    # -- write side

    def append_block(self, records: Sequence[LedgerRecord]) -> Block:
        records = list(records)
        if not records:
            raise EmptyBlock("a block needs at least one record")
        for rec in records:
            if not isinstance(rec, LedgerRecord):
                raise InvalidRecord(f"not a LedgerRecord: {rec!r}")
            problem = _record_shape_problem(rec.to_dict())
            if problem:
                raise InvalidRecord(problem)
            if not rec.signature_ok():
                raise InvalidRecord(f"{rec.kind} record signature does not verify for {rec.author}")
        with self._lock:
            self._sync()
            block = Block.build(len(self._blocks), self.tip.block_hash, records)
            self._size = _append_line(self.path, block)
            self._adopt(block)
        return block


def _append_line(path: Path, block: Block) -> int:
    with open(path, "ab") as fh:
        fh.write(canonical_encode(block.to_dict()) + b"\n")
        fh.flush()
        os.fsync(fh.fileno())
        return fh.tell()


def init_ledger(path: str | os.PathLike) -> Ledger:
    return Ledger.open(path)
