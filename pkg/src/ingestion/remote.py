import logging
import os
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime
from typing import List, Optional, Tuple

from src.config.index import appConfig
from src.ingestion.index import build_activity_log, write_exports
from src.models.index import FileAction, FileChange, IssueEvent, IssueEventKind, RawCommit
from src.services.github import GitHubClient
from src.utils.errors import ArgumentError
from src.utils.index import format_utc, to_utc

logger = logging.getLogger(__name__)

_STATUS_ACTIONS = {
    "added": FileAction.ADD,
    "modified": FileAction.MODIFY,
    "renamed": FileAction.RENAME,
    "removed": FileAction.REMOVE,
}


def _actor_email(user: Optional[dict], fallback: Optional[dict] = None) -> Optional[str]:
    if fallback and fallback.get("email"):
        return fallback["email"]
    if user and user.get("login"):
        return f"{user['login']}@users.noreply.github.com"
    return None


def commit_from_payload(payload: dict) -> Optional[RawCommit]:
    """Convert a `GET /repos/{repo}/commits/{sha}` payload; commits without file changes are skipped."""
    author = payload["commit"]["author"]
    changes = [
        FileChange(
            path=f["filename"],
            action=_STATUS_ACTIONS.get(f.get("status"), FileAction.MODIFY),
            loc=int(f.get("changes", 0)),
        )
        for f in payload.get("files") or []
    ]
    if not changes:
        logger.warning("Skipping commit %s without file changes", payload["sha"])
        return None
    return RawCommit(
        sha=payload["sha"],
        author_email=author.get("email") or _actor_email(payload.get("author")) or "unknown",
        author_name=author.get("name") or "",
        timestamp=author["date"],
        changes=tuple(changes),
    )


def events_from_timeline(issue: dict, timeline: List[dict]) -> List[IssueEvent]:
    events = []
    opener = _actor_email(issue.get("user"))
    if opener:
        events.append(
            IssueEvent(
                issue_id=issue["number"],
                actor_email=opener,
                timestamp=issue["created_at"],
                kind=IssueEventKind.OPENED,
            )
        )

    for entry in timeline:
        event_type = entry.get("event")
        actor = _actor_email(entry.get("actor") or entry.get("user"), entry.get("author"))
        timestamp = entry.get("created_at") or (entry.get("author") or {}).get("date")
        if not actor or not timestamp:
            continue
        if entry.get("commit_id"):
            kind, linked_sha = IssueEventKind.COMMIT_LINKED, entry["commit_id"]
        elif event_type == "commented":
            kind, linked_sha = IssueEventKind.COMMENTED, None
        elif event_type == "closed":
            kind, linked_sha = IssueEventKind.CLOSED, None
        else:
            kind, linked_sha = IssueEventKind.OTHER, None
        events.append(
            IssueEvent(
                issue_id=issue["number"],
                actor_email=actor,
                timestamp=timestamp,
                kind=kind,
                linked_sha=linked_sha,
            )
        )
    return events


def fetch_remote(
    repo: str,
    token: str,
    since: datetime,
    until: datetime,
    out_dir: str,
    client: Optional[GitHubClient] = None,
) -> Tuple[str, str]:
    """
    * Step 1 : List commit SHAs in [since, until] and fetch each commit's file changes.
    * Step 2 : List issues updated since `since` (pull requests skipped) and flatten their timelines.
    * Step 3 : Keep events inside the range, sort canonically and write both exports atomically.
    Returns the (commits, issues) export paths.
    """
    since, until = to_utc(since), to_utc(until)
    if until < since:
        raise ArgumentError(f"until ({format_utc(until)}) is before since ({format_utc(since)})")
    if repo.count("/") != 1 or not all(repo.split("/")):
        raise ArgumentError(f"repo must look like owner/name, got {repo!r}")

    client = client or GitHubClient(token)
    range_params = {"since": format_utc(since), "until": format_utc(until)}

    # Step 1
    shas = [item["sha"] for item in client.paginate(f"/repos/{repo}/commits", params=range_params)]
    logger.info("Fetching details for %d commits of %s", len(shas), repo)
    with ThreadPoolExecutor(max_workers=max(1, appConfig["fetch_workers"])) as pool:
        payloads = list(pool.map(lambda sha: client.get(f"/repos/{repo}/commits/{sha}").json(), shas))
    commits = [commit for commit in (commit_from_payload(p) for p in payloads) if commit is not None]

    # Step 2
    events = []
    issues = client.paginate(
        f"/repos/{repo}/issues", params={"state": "all", "since": format_utc(since)}
    )
    for issue in issues:
        if "pull_request" in issue:
            continue
        timeline = list(client.paginate(f"/repos/{repo}/issues/{issue['number']}/timeline"))
        events.extend(events_from_timeline(issue, timeline))

    # Step 3
    events = [e for e in events if since <= e.timestamp <= until]
    log = build_activity_log(commits, events)
    os.makedirs(out_dir, exist_ok=True)
    commits_path = os.path.join(out_dir, "commits.jsonl")
    issues_path = os.path.join(out_dir, "issues.jsonl")
    write_exports(commits_path, issues_path, log)
    logger.info("Wrote %d commits and %d issue events for %s", len(log.commits), len(log.issues), repo)
    return commits_path, issues_path
