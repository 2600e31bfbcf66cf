"""Plain-text tables with fixed column orders for the explore views."""
from __future__ import annotations

from datetime import datetime
from typing import Sequence

from .timefmt import relative_age

IDENTIFIER_HEADERS = ("DID", "Alias")
CREATED_IDENTIFIER_HEADERS = ("provider", "alias", "did")
CREDENTIAL_HEADERS = ("Created", "Type", "From", "To")
PRESENTATION_HEADERS = ("Created", "Type", "Holder", "Verifier")
MESSAGE_HEADERS = ("Created", "From", "To", "Body", "Verified")


def render_table(headers: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip()]
    for row in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
    return "\n".join(lines)


def age(stamp: str, reference: datetime | None = None) -> str:
    try:
        return relative_age(stamp, reference)
    except ValueError:
        return stamp
