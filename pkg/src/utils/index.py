import re
from datetime import datetime, timezone

SECONDS_PER_DAY = 86400.0

_SHA_PATTERN = re.compile(r"^[0-9a-f]{40}$")


def validate_sha(sha: str) -> bool:
    if not isinstance(sha, str):
        return False
    return bool(_SHA_PATTERN.match(sha))


def to_utc(value) -> datetime:
    """Parse an ISO-8601 string (or datetime) into an aware UTC datetime truncated to seconds.

    Naive values are taken as UTC.
    """
    if isinstance(value, datetime):
        moment = value
    elif isinstance(value, str):
        text = value.strip()
        if text.endswith("Z") or text.endswith("z"):
            text = text[:-1] + "+00:00"
        moment = datetime.fromisoformat(text)
    else:
        raise ValueError(f"Unsupported timestamp value: {value!r}")

    if moment.tzinfo is None:
        moment = moment.replace(tzinfo=timezone.utc)
    return moment.astimezone(timezone.utc).replace(microsecond=0)


def format_utc(moment: datetime) -> str:
    return to_utc(moment).strftime("%Y-%m-%dT%H:%M:%SZ")


def fractional_days(later: datetime, earlier: datetime) -> float:
    """Days between two instants as seconds / 86400 (no calendar truncation)."""
    return (later - earlier).total_seconds() / SECONDS_PER_DAY
