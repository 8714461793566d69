import json
import os
import re
import tempfile
from itertools import combinations
from typing import Iterable, List, NamedTuple, Sequence, Tuple

from src.models.index import RawCommit

_NAME_SPLIT = re.compile(r"[._\-+\s]+")
_DIGITS = re.compile(r"\d+")


class AliasSuggestion(NamedTuple):
    email: str
    other_email: str
    evidence: str


def write_files_atomically(files: Sequence[Tuple[str, Iterable[str]]]) -> None:
    """Write every (path, lines) pair to a temp file next to its path, then rename them all into place.

    A failure while writing leaves every previous file untouched.
    """
    staged = []
    try:
        for path, lines in files:
            directory = os.path.dirname(os.path.abspath(path))
            os.makedirs(directory, exist_ok=True)
            fd, temp_path = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".jsonl")
            staged.append((temp_path, path))
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
                for line in lines:
                    f.write(line)
                    f.write("\n")
    except Exception:
        for temp_path, _ in staged:
            if os.path.exists(temp_path):
                os.remove(temp_path)
        raise
    for temp_path, path in staged:
        os.replace(temp_path, path)


def write_lines_atomically(path: str, lines: Iterable[str]) -> None:
    write_files_atomically([(path, lines)])


def canonical_json(record: dict) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def name_tokens(text: str) -> List[str]:
    """Split an email local-part or display name into lowercase alphabetic tokens."""
    cleaned = _DIGITS.sub(" ", text.lower())
    return [token for token in _NAME_SPLIT.split(cleaned) if token]


def local_part(email: str) -> str:
    return email.split("@", 1)[0].lower()


def name_forms(first: str, last: str) -> dict:
    """Compact spellings of a first/last name pair, mapped to the evidence they represent."""
    return {
        first + last: "first+last match",
        last + first: "last+first match",
        first[0] + last: "initial+last match",
        last + first[0]: "last+initial match",
        first + last[0]: "first+initial match",
        first[0] + last[0]: "initials match",
    }


def _compact(email: str) -> str:
    return "".join(name_tokens(local_part(email)))


def _match_by_tokens(email: str, other: str) -> str | None:
    """Evidence when `email`'s local-part spells a first/last pair that `other` also spells."""
    tokens = name_tokens(local_part(email))
    if len(tokens) < 2:
        return None
    forms = name_forms(tokens[0], tokens[-1])
    compact_other = _compact(other)
    # Initials alone are too weak to report.
    if len(compact_other) <= 2:
        return None
    if compact_other in forms:
        return forms[compact_other]
    return None


def suggest_aliases(commits: Sequence[RawCommit]) -> List[AliasSuggestion]:
    """
    Candidate identity merges from first name, last name and initials combinations.

    Advisory only: nothing here rewrites identities.
    """
    names = {}
    for commit in commits:
        email = commit.author_email.strip().lower()
        if email not in names or (not names[email] and commit.author_name):
            names[email] = commit.author_name

    suggestions = []
    for email, other in combinations(sorted(names), 2):
        evidence = None
        if local_part(email) == local_part(other) and len(local_part(email)) > 2:
            evidence = "local-part match"
        if evidence is None:
            evidence = _match_by_tokens(email, other) or _match_by_tokens(other, email)
        if evidence is None:
            name, other_name = name_tokens(names[email]), name_tokens(names[other])
            if len(name) >= 2 and name == other_name:
                evidence = "author name match"
        if evidence is not None:
            suggestions.append(AliasSuggestion(email, other, evidence))
    return suggestions
