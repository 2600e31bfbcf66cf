"""Timestamps are RFC 3339 UTC strings with milliseconds: 2023-12-15T23:55:57.461Z."""
from __future__ import annotations

import re
from datetime import datetime, timezone

_STAMP = re.compile(r"\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}\.\d{3}Z")


def format_timestamp(moment: datetime) -> str:
    if moment.tzinfo is None:
        moment = moment.replace(tzinfo=timezone.utc)
    moment = moment.astimezone(timezone.utc)
    return moment.strftime("%Y-%m-%dT%H:%M:%S.") + f"{moment.microsecond // 1000:03d}Z"


def now() -> str:
    return format_timestamp(datetime.now(timezone.utc))


def is_timestamp(text: object) -> bool:
    if not isinstance(text, str) or not _STAMP.fullmatch(text):
        return False
    try:
        parse_timestamp(text)
    except ValueError:
        return False
    return True


def parse_timestamp(text: str) -> datetime:
    return datetime.strptime(text, "%Y-%m-%dT%H:%M:%S.%fZ").replace(tzinfo=timezone.utc)


def relative_age(stamp: str, reference: datetime | None = None) -> str:
    """Coarse age like "29 days" or "about 14 hours" (no "ago" suffix)."""
    reference = reference or datetime.now(timezone.utc)
    seconds = max(0.0, (reference - parse_timestamp(stamp)).total_seconds())
    minutes = seconds / 60
    if seconds < 30:
        return "less than a minute"
    if minutes < 1.5:
        return "1 minute"
    if minutes < 44.5:
        return f"{round(minutes)} minutes"
    if minutes < 89.5:
        return "about 1 hour"
    hours = minutes / 60
    if hours < 23.99:
        return f"about {round(hours)} hours"
    if hours < 41.99:
        return "1 day"
    days = hours / 24
    if days < 29.99:
        return f"{round(days)} days"
    if days < 44.99:
        return "about 1 month"
    if days < 59.99:
        return "about 2 months"
    months = days / 30
    if months < 12:
        return f"{round(months)} months"
    years = days / 365.25
    if years < 1.25:
        return "about 1 year"
    return f"about {round(years)} years"
