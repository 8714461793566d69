import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.ingestion.index import (
    build_activity_log,
    default_bot_filter,
    discover_services,
    filter_bots,
    load_bot_filter,
    load_commits,
    load_identity_map,
    load_issues,
    load_service_map,
    unify_identities,
    write_commits,
    write_issues,
)
from src.ingestion.utils import suggest_aliases, write_files_atomically
from src.models.index import BotFilter, IdentityMap, IssueEventKind
from src.utils.errors import RecordParseError, RecordValidationError

from tests.factories import make_commit, make_event, make_log, sha_of, write_jsonl

COMMIT_RECORD = {
    "sha": "a" * 40,
    "author_email": "a@x",
    "author_name": "Alice",
    "timestamp": "2024-05-01T10:00:00Z",
    "changes": [{"path": "services/audit/x.ts", "action": "modify", "loc": 10}],
}


def test_load_commits_reads_one_record(tmp_path):
    commits = load_commits(write_jsonl(tmp_path / "commits.jsonl", [COMMIT_RECORD]))
    assert len(commits) == 1
    assert commits[0].changes[0].loc == 10


def test_load_commits_rejects_duplicate_sha(tmp_path):
    path = write_jsonl(tmp_path / "commits.jsonl", [COMMIT_RECORD, COMMIT_RECORD])
    with pytest.raises(RecordValidationError, match="Duplicate commit sha"):
        load_commits(path)


def test_load_commits_reports_line_of_bad_record(tmp_path):
    path = tmp_path / "commits.jsonl"
    path.write_text(json.dumps(COMMIT_RECORD) + "\n{not json\n", encoding="utf-8")
    with pytest.raises(RecordParseError) as error:
        load_commits(str(path))
    assert error.value.line == 2

    write_jsonl(path, [{**COMMIT_RECORD, "changes": [{"path": "x.ts", "action": "modify", "loc": -3}]}])
    with pytest.raises(RecordParseError, match="line 1"):
        load_commits(str(path))


def test_load_issues_flattens_timelines(tmp_path):
    record = {
        "issue_id": 12,
        "timeline": [
            {"actor_email": "a@x", "timestamp": "2024-05-01T10:00:00Z", "kind": "opened"},
            {"actor_email": "b@x", "timestamp": "2024-05-02T10:00:00Z", "kind": "commit_linked", "linked_sha": "b" * 40},
        ],
    }
    events = load_issues(write_jsonl(tmp_path / "issues.jsonl", [record]))
    assert [e.kind for e in events] == [IssueEventKind.OPENED, IssueEventKind.COMMIT_LINKED]
    assert events[1].linked_sha == "b" * 40
    assert all(e.issue_id == 12 for e in events)


def test_load_issues_empty_and_bad_links(tmp_path):
    assert load_issues(write_jsonl(tmp_path / "empty.jsonl", [])) == []
    bad = {"issue_id": 1, "actor_email": "a@x", "timestamp": "2024-05-01T10:00:00Z", "kind": "commit_linked"}
    with pytest.raises(RecordValidationError):
        load_issues(write_jsonl(tmp_path / "bad.jsonl", [bad]))


def test_write_then_load_keeps_canonical_content(tmp_path):
    commits = load_commits(write_jsonl(tmp_path / "in.jsonl", [COMMIT_RECORD]))
    write_commits(str(tmp_path / "out.jsonl"), commits)
    first = (tmp_path / "out.jsonl").read_bytes()
    write_commits(str(tmp_path / "again.jsonl"), load_commits(str(tmp_path / "out.jsonl")))
    assert (tmp_path / "again.jsonl").read_bytes() == first

    events = [make_event(3, "a@x", IssueEventKind.COMMIT_LINKED, linked=sha_of(1))]
    write_issues(str(tmp_path / "issues.jsonl"), events)
    assert load_issues(str(tmp_path / "issues.jsonl")) == events


def test_unify_identities_case_folds_and_falls_back():
    commits = [
        make_commit(1, "a@x", [("services/audit/x.ts", 1)]),
        make_commit(2, "A@X", [("services/audit/x.ts", 1)]),
        make_commit(3, "B@Y", [("services/audit/x.ts", 1)]),
    ]
    issues = [make_event(1, "a@X")]
    unified_commits, unified_issues = unify_identities(commits, issues, IdentityMap(aliases={"a@x": "dev1"}))
    assert [c.author_email for c in unified_commits] == ["dev1", "dev1", "b@y"]
    assert unified_issues[0].actor_email == "dev1"


def test_unify_identities_rejects_chained_aliases():
    with pytest.raises(RecordValidationError, match="Chained alias"):
        unify_identities([], [], IdentityMap(aliases={"a@x": "b@y", "b@y": "dev1"}))


def test_load_identity_map_and_bot_filter(tmp_path):
    (tmp_path / "ids.json").write_text(json.dumps({"A@X": "dev1"}), encoding="utf-8")
    assert load_identity_map(str(tmp_path / "ids.json")).resolve("a@x") == "dev1"

    (tmp_path / "bots.txt").write_text("# bots\n\ndependabot*\n", encoding="utf-8")
    assert load_bot_filter(str(tmp_path / "bots.txt")).patterns == ("dependabot*",)
    (tmp_path / "none.txt").write_text("# nothing\n", encoding="utf-8")
    assert not load_bot_filter(str(tmp_path / "none.txt")).enabled


def test_load_service_map_accepts_object_or_pairs(tmp_path):
    (tmp_path / "a.json").write_text(json.dumps({"services/audit": "audit"}), encoding="utf-8")
    (tmp_path / "b.json").write_text(json.dumps([["services/audit", "audit"]]), encoding="utf-8")
    assert load_service_map(str(tmp_path / "a.json")) == load_service_map(str(tmp_path / "b.json"))
    (tmp_path / "c.json").write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(RecordParseError):
        load_service_map(str(tmp_path / "c.json"))


def test_build_activity_log_orders_by_time_then_sha():
    late = make_commit(1, "a@x", [("services/audit/x.ts", 1)], days_ago=0)
    early = make_commit(2, "b@x", [("services/audit/x.ts", 1)], days_ago=3)
    log = build_activity_log([late, early], [make_event(2, "c@x", days_ago=1), make_event(1, "c@x", days_ago=1)])
    assert log.commits == (early, late)
    assert [e.issue_id for e in log.issues] == [1, 2]
    assert log.developers == frozenset({"a@x", "b@x", "c@x"})
    assert log == build_activity_log(reversed([late, early]), reversed(log.issues))


def test_filter_bots_removes_bot_activity_everywhere():
    log = make_log(
        [
            make_commit(1, "dependabot[bot]@users.noreply.github.com", [("services/audit/x.ts", 1)]),
            make_commit(2, "alice@x", [("services/audit/x.ts", 1)]),
        ],
        [make_event(1, "dependabot[bot]@users.noreply.github.com"), make_event(1, "alice@x", IssueEventKind.COMMENTED)],
    )
    filtered = filter_bots(log, default_bot_filter())
    assert [c.author_email for c in filtered.commits] == ["alice@x"]
    assert [e.actor_email for e in filtered.issues] == ["alice@x"]
    assert filtered.developers == frozenset({"alice@x"})
    assert filter_bots(log, BotFilter(patterns=(), enabled=False)) == log


def test_discover_services_from_folder_layout():
    log = make_log(
        [
            make_commit(1, "a@x", [("services/audit/src/x.ts", 1), ("services/chat/y.ts", 1), ("README.md", 1)]),
            make_commit(2, "a@x", [("services/loose-file.ts", 1)]),
        ]
    )
    service_map = discover_services(log)
    assert service_map.services == ["audit", "chat"]
    assert service_map.resolve("services/audit/src/x.ts") == "audit"


def test_suggest_aliases_from_name_forms():
    commits = [
        make_commit(1, "john.smith@a", [("x.ts", 1)], name="John Smith"),
        make_commit(2, "jsmith@b", [("x.ts", 1)]),
        make_commit(3, "alice@a", [("x.ts", 1)]),
        make_commit(4, "bob@b", [("x.ts", 1)]),
    ]
    suggestions = suggest_aliases(commits)
    assert [(s.email, s.other_email, s.evidence) for s in suggestions] == [
        ("john.smith@a", "jsmith@b", "initial+last match")
    ]
    assert suggest_aliases(commits[:1]) == []


def test_default_filter_drops_snyk_bot():
    log = make_log(
        [
            make_commit(1, "github+bot@snyk.io", [("services/audit/x.ts", 1)]),
            make_commit(2, "snyk-fan@x", [("services/audit/x.ts", 1)]),
        ]
    )
    assert BotFilter(patterns=("*+bot@snyk.io",)).matches("github+bot@snyk.io")
    filtered = filter_bots(log, default_bot_filter())
    assert [c.author_email for c in filtered.commits] == ["snyk-fan@x"]


ACTORS = ["alice@x", "bob@y", "dependabot[bot]@users.noreply.github.com", "github+bot@snyk.io", "ci[bot]@z"]


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.sampled_from(ACTORS), max_size=12),
    st.lists(st.tuples(st.integers(1, 4), st.sampled_from(ACTORS)), max_size=12),
)
def test_filter_bots_only_removes_matching_events(commit_authors, issue_actors):
    commits = [
        make_commit(("bots", i), author, [("services/audit/x.ts", 1)], days_ago=i)
        for i, author in enumerate(commit_authors)
    ]
    issues = [make_event(issue, actor, days_ago=i) for i, (issue, actor) in enumerate(issue_actors)]
    log = make_log(commits, issues)
    bot_filter = default_bot_filter()
    filtered = filter_bots(log, bot_filter)

    removed_commits = set(log.commits) - set(filtered.commits)
    removed_events = set(log.issues) - set(filtered.issues)
    assert all(bot_filter.matches(c.author_email) for c in removed_commits)
    assert all(bot_filter.matches(e.actor_email) for e in removed_events)
    assert not any(bot_filter.matches(c.author_email) for c in filtered.commits)
    assert not any(bot_filter.matches(e.actor_email) for e in filtered.issues)
    assert len(log.commits) - len(filtered.commits) == sum(bot_filter.matches(a) for a in commit_authors)


def test_paired_exports_are_replaced_together(tmp_path):
    commits_path = tmp_path / "commits.jsonl"
    issues_path = tmp_path / "issues.jsonl"
    commits_path.write_text("old commits\n", encoding="utf-8")
    issues_path.write_text("old issues\n", encoding="utf-8")

    def failing_lines():
        yield "partial"
        raise OSError("disk full")

    with pytest.raises(OSError, match="disk full"):
        write_files_atomically([(str(commits_path), ["new commits"]), (str(issues_path), failing_lines())])
    assert commits_path.read_text(encoding="utf-8") == "old commits\n"
    assert issues_path.read_text(encoding="utf-8") == "old issues\n"
    assert sorted(p.name for p in tmp_path.iterdir()) == ["commits.jsonl", "issues.jsonl"]

    write_files_atomically([(str(commits_path), ["new commits"]), (str(issues_path), ["new issues"])])
    assert commits_path.read_text(encoding="utf-8") == "new commits\n"
    assert issues_path.read_text(encoding="utf-8") == "new issues\n"
