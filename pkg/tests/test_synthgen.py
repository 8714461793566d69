import pytest

from src.ingestion.index import load_commits, load_issues
from src.models.index import IssueEventKind, Scenario
from src.synthgen.index import generate, write_scenario
from src.synthgen.presets import PRESETS, desk_scale_scenario, floater_scenario, planted_scenario
from src.utils.errors import RecordValidationError


def test_same_seed_same_log():
    first, _ = generate(planted_scenario(seed=5))
    second, _ = generate(planted_scenario(seed=5))
    assert first == second
    other, _ = generate(planted_scenario(seed=6))
    assert [c.sha for c in other.commits] != [c.sha for c in first.commits]


def test_floater_ground_truth(floater):
    _, truth = floater
    stats = {s.developer: s for s in truth.expected_switches}["floater"]
    assert (stats.k, stats.n, stats.s) == (9, 10, 0.5)
    entry = {e.developer: e for e in truth.expected_entries}["floater"]
    assert (entry.sum_a, entry.sum_b, entry.oc) == (50, 50, 25.0)
    assert truth.expected_total_oc == 25.0


def test_decoupled_ground_truth(decoupled):
    log, truth = decoupled
    assert truth.expected_total_oc == 0.0
    assert truth.expected_entries == ()
    assert len(log.developers) == 9


def test_commits_sit_inside_the_recent_half_of_the_window(planted):
    log, truth = planted
    assert log.commits[-1].timestamp == truth.window.end
    for commit in log.commits:
        assert 0 <= truth.window.days_passed(commit.timestamp) <= truth.window.length_days / 2


def test_planted_roles_and_issue_links(planted):
    log, truth = planted
    assert truth.expected_jack == {"audit": "jack.audit", "chat": "jack.chat"}
    assert truth.expected_maven == {"audit": "maven.audit", "chat": "maven.chat"}
    assert truth.expected_connector == truth.expected_jack
    shas = {c.sha for c in log.commits}
    linked = [e for e in log.issues if e.kind == IssueEventKind.COMMIT_LINKED]
    assert linked
    assert all(e.linked_sha in shas for e in linked)


def test_write_scenario_round_trips(tmp_path, floater):
    log, _ = floater
    commits_path, issues_path = write_scenario(log, str(tmp_path))
    assert tuple(load_commits(commits_path)) == log.commits
    assert tuple(load_issues(issues_path)) == log.issues


def test_invalid_scenarios_are_rejected():
    with pytest.raises(RecordValidationError):
        generate(Scenario(services=("audit",), teams={"d": ("chat",)}))
    with pytest.raises(RecordValidationError):
        generate(Scenario(services=("audit",), jacks={"audit": "x"}, mavens={"audit": "x"}))
    with pytest.raises(RecordValidationError):
        generate(Scenario(services=("audit",), teams={"d": ("audit",)}, floaters={"d": ("audit",)}))


def test_presets_are_registered():
    assert set(PRESETS) == {"decoupled", "floater", "planted", "desk"}
    assert PRESETS["floater"]() == floater_scenario()


def test_desk_scenario_shape():
    scenario = desk_scale_scenario()
    assert len(scenario.services) == 16
    assert len(set(scenario.teams) | set(scenario.floaters)) == 61
