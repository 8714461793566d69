import io
import json
from decimal import ROUND_HALF_EVEN, Decimal
from typing import List, Sequence

import pandas as pd
from tabulate import tabulate

from src.models.index import WindowSpec
from src.utils.index import format_utc

WHOLE_PROJECT = "Whole Project"

_CENTS = Decimal("0.01")


def round_half_even(value: float) -> Decimal:
    """Two-decimal banker's rounding of the shortest repr of `value`."""
    return Decimal(repr(float(value))).quantize(_CENTS, rounding=ROUND_HALF_EVEN)


def format_score(value: float) -> float:
    """Rounded score as a float so it prints like 0.5 or 0.53."""
    return float(round_half_even(value))


def format_amount(value: float) -> str:
    """Two fixed decimals, with an exact zero shown as 0."""
    if value == 0:
        return "0"
    return str(round_half_even(value))


def window_dict(window: WindowSpec | None):
    if window is None:
        return None
    return {"end": format_utc(window.end), "length_days": window.length_days, "label": window.label()}


def window_from_dict(data) -> WindowSpec | None:
    if not data:
        return None
    return WindowSpec(end=data["end"], length_days=data["length_days"])


def to_json(document: dict) -> str:
    return json.dumps(document, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def to_csv(columns: Sequence[str], rows: List[Sequence]) -> str:
    """RFC-4180 CSV with '\\n' line endings; values are stringified first so floats keep their repr."""
    frame = pd.DataFrame([[_cell(value) for value in row] for row in rows], columns=list(columns), dtype=object)
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, lineterminator="\n")
    return buffer.getvalue()


def _cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def to_markdown(title: str, headers: Sequence[str], rows: List[Sequence], notes: Sequence[str] = ()) -> str:
    lines = [f"# {title}", ""]
    lines.extend(notes)
    if notes:
        lines.append("")
    lines.append(tabulate(rows, headers=list(headers), tablefmt="github", disable_numparse=True))
    return "\n".join(lines) + "\n"
