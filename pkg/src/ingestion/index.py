import json
import logging
from typing import Iterable, List, Sequence, Tuple

from pydantic import ValidationError

from src.config.index import appConfig
from src.ingestion.utils import canonical_json, write_files_atomically, write_lines_atomically
from src.models.index import (
    ActivityLog,
    BotFilter,
    IdentityMap,
    IssueEvent,
    RawCommit,
    ServiceMap,
)
from src.utils.errors import RecordParseError, RecordValidationError

logger = logging.getLogger(__name__)


def _read_json_lines(path: str):
    """Yield (line_number, record) for every non-blank line of a JSON-lines file."""
    with open(path, "r", encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise RecordParseError(f"Failed to parse JSON in {path}: {str(e)}", line=line_number) from e
            if not isinstance(record, dict):
                raise RecordParseError(f"Expected a JSON object in {path}", line=line_number)
            yield line_number, record


def load_commits(path: str) -> List[RawCommit]:
    """Parse a commit export, keeping on-disk order and rejecting duplicate SHAs."""
    commits = []
    seen = {}
    for line_number, record in _read_json_lines(path):
        try:
            commit = RawCommit.model_validate(record)
        except ValidationError as e:
            raise RecordParseError(f"Failed to validate commit record: {str(e)}", line=line_number) from e
        if commit.sha in seen:
            raise RecordValidationError(
                f"Duplicate commit sha {commit.sha} on lines {seen[commit.sha]} and {line_number} of {path}"
            )
        seen[commit.sha] = line_number
        commits.append(commit)
    logger.info("Loaded %d commits from %s", len(commits), path)
    return commits


def load_issues(path: str) -> List[IssueEvent]:
    """
    Parse an issue export into flat events.

    Lines are either single events or `{"issue_id", "timeline": [...]}` objects whose
    timeline entries are flattened in order.
    """
    events = []
    for line_number, record in _read_json_lines(path):
        if "timeline" in record:
            raw_events = [{"issue_id": record.get("issue_id"), **entry} for entry in record["timeline"] or []]
        else:
            raw_events = [record]
        for raw_event in raw_events:
            try:
                events.append(IssueEvent.model_validate(raw_event))
            except ValidationError as e:
                if any(err.get("type") == "value_error" and "linked_sha" in str(err.get("msg")) for err in e.errors()):
                    raise RecordValidationError(
                        f"Invalid commit link on line {line_number} of {path}: {str(e)}"
                    ) from e
                raise RecordParseError(f"Failed to validate issue event: {str(e)}", line=line_number) from e
    logger.info("Loaded %d issue events from %s", len(events), path)
    return events


def commit_record(commit: RawCommit) -> dict:
    return commit.model_dump(mode="json")


def issue_record(event: IssueEvent) -> dict:
    return event.model_dump(mode="json", exclude_none=True)


def write_commits(path: str, commits: Iterable[RawCommit]) -> None:
    write_lines_atomically(path, (canonical_json(commit_record(c)) for c in commits))


def write_issues(path: str, events: Iterable[IssueEvent]) -> None:
    write_lines_atomically(path, (canonical_json(issue_record(e)) for e in events))


def write_exports(commits_path: str, issues_path: str, log: ActivityLog) -> None:
    """Both exports land together or not at all."""
    write_files_atomically(
        [
            (commits_path, (canonical_json(commit_record(c)) for c in log.commits)),
            (issues_path, (canonical_json(issue_record(e)) for e in log.issues)),
        ]
    )


def load_identity_map(path: str) -> IdentityMap:
    try:
        with open(path, "r", encoding="utf-8") as f:
            aliases = json.load(f)
        identity_map = IdentityMap(aliases=aliases)
    except (json.JSONDecodeError, ValidationError) as e:
        raise RecordParseError(f"Failed to load identity map {path}: {str(e)}") from e
    check_identity_map(identity_map)
    return identity_map


def load_bot_filter(path: str) -> BotFilter:
    patterns = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            patterns.append(line)
    return BotFilter(patterns=tuple(patterns), enabled=bool(patterns))


def default_bot_filter() -> BotFilter:
    return BotFilter(patterns=tuple(appConfig["default_bot_patterns"]))


def load_service_map(path: str) -> ServiceMap:
    """Service map file: JSON object `{prefix: service}` or list of `[prefix, service]` pairs."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
        entries = list(raw.items()) if isinstance(raw, dict) else [tuple(pair) for pair in raw]
        return ServiceMap(entries=tuple(entries))
    except (json.JSONDecodeError, ValidationError, TypeError, ValueError) as e:
        raise RecordParseError(f"Failed to load service map {path}: {str(e)}") from e


def check_identity_map(identity_map: IdentityMap) -> None:
    chains = identity_map.chained_aliases()
    if chains:
        alias, canonical, target = chains[0]
        raise RecordValidationError(
            f"Chained alias in identity map: {alias} -> {canonical} -> {target} ({len(chains)} chain(s))"
        )


def unify_identities(
    commits: Sequence[RawCommit], issues: Sequence[IssueEvent], identity_map: IdentityMap
) -> Tuple[List[RawCommit], List[IssueEvent]]:
    """Replace every author/actor with its canonical id; unmapped emails become their own lowercased id."""
    check_identity_map(identity_map)
    canonical_ids = identity_map.canonical_ids()

    unified_commits = [
        c.model_copy(update={"author_email": identity_map.resolve(c.author_email, canonical_ids)})
        for c in commits
    ]
    unified_issues = [
        e.model_copy(update={"actor_email": identity_map.resolve(e.actor_email, canonical_ids)})
        for e in issues
    ]
    return unified_commits, unified_issues


def build_activity_log(commits: Iterable[RawCommit], issues: Iterable[IssueEvent]) -> ActivityLog:
    """Sort into the canonical total order: commits by (timestamp, sha), issues by (timestamp, issue_id)."""
    sorted_commits = tuple(sorted(commits, key=lambda c: (c.timestamp, c.sha)))
    # Remaining keys only make equal-time events of one issue independent of input order.
    sorted_issues = tuple(
        sorted(
            issues,
            key=lambda e: (e.timestamp, e.issue_id, e.kind.value, e.actor_email, e.linked_sha or ""),
        )
    )
    developers = frozenset(c.author_email for c in sorted_commits) | frozenset(
        e.actor_email for e in sorted_issues
    )
    return ActivityLog(commits=sorted_commits, issues=sorted_issues, developers=developers)


def filter_bots(log: ActivityLog, bot_filter: BotFilter) -> ActivityLog:
    if not bot_filter.enabled:
        return log

    commits = tuple(c for c in log.commits if not bot_filter.matches(c.author_email))
    issues = tuple(e for e in log.issues if not bot_filter.matches(e.actor_email))
    removed = (len(log.commits) - len(commits), len(log.issues) - len(issues))
    if any(removed):
        logger.info("Filtered %d bot commits and %d bot issue events", *removed)
    developers = frozenset(c.author_email for c in commits) | frozenset(e.actor_email for e in issues)
    return ActivityLog(commits=commits, issues=issues, developers=developers)


def discover_services(log: ActivityLog, root: str = "services") -> ServiceMap:
    """One service per first-level folder under `root` that any commit touches."""
    root = root.strip("/")
    names = set()
    for commit in log.commits:
        for change in commit.changes:
            parts = change.path.split("/")
            root_parts = root.split("/")
            if len(parts) > len(root_parts) + 1 and parts[: len(root_parts)] == root_parts:
                names.add(parts[len(root_parts)])
    return ServiceMap(entries=tuple((f"{root}/{name}", name) for name in sorted(names)))
