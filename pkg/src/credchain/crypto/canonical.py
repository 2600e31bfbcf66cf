"""Canonical JSON bytes for hashing and signing, plus hex helpers."""
from __future__ import annotations

import json
from typing import Any

from ..errors import UnsupportedValue


def _check(value: Any, path: str) -> None:
    if value is None or isinstance(value, (bool, str)):
        return
    if isinstance(value, int):
        return
    if isinstance(value, float):
        raise UnsupportedValue(f"float at {path or '$'} cannot be signed")
    if isinstance(value, dict):
        for key, item in value.items():
            if not isinstance(key, str):
                raise UnsupportedValue(f"non-string key {key!r} at {path or '$'}")
            _check(item, f"{path}.{key}")
        return
    if isinstance(value, (list, tuple)):
        for i, item in enumerate(value):
            _check(item, f"{path}[{i}]")
        return
    raise UnsupportedValue(f"{type(value).__name__} at {path or '$'} is not encodable")


def canonical_encode(value: Any) -> bytes:
    """Sorted-key, whitespace-free UTF-8 JSON.

    Keys sort by code point at every level; only ``"``, ``\\`` and control
    characters are escaped.  Floats are rejected.
    """
    _check(value, "")
    text = json.dumps(
        value,
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
        allow_nan=False,
    )
    try:
        return text.encode("utf-8")
    except UnicodeEncodeError as exc:  # lone surrogates
        raise UnsupportedValue(str(exc)) from None


def to_hex(data: bytes) -> str:
    return "0x" + bytes(data).hex()


def from_hex(text: str, length: int | None = None) -> bytes:
    """Parse hex with or without ``0x``; raises ValueError on bad input."""
    if not isinstance(text, str):
        raise ValueError(f"expected hex string, got {type(text).__name__}")
    body = text[2:] if text[:2] in ("0x", "0X") else text
    if len(body) % 2 or any(c not in "0123456789abcdefABCDEF" for c in body):
        raise ValueError(f"not a hex string: {text!r}")
    raw = bytes.fromhex(body)
    if length is not None and len(raw) != length:
        raise ValueError(f"expected {length} bytes, got {len(raw)}")
    return raw
