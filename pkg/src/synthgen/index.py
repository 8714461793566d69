import hashlib
import logging
import os
import random
from datetime import timedelta
from itertools import combinations
from typing import Dict, List, Tuple

from src.ingestion.index import build_activity_log, write_exports
from src.models.index import (
    ActivityLog,
    CouplingEntry,
    FileAction,
    FileChange,
    GroundTruth,
    IssueEvent,
    IssueEventKind,
    RawCommit,
    Scenario,
    SwitchStats,
    WindowSpec,
)
from src.utils.errors import RecordValidationError

logger = logging.getLogger(__name__)

# Commit grid spans the most recent half of the window, so every edge distance stays within [1, 2].
GRID_FRACTION = 0.5


def common_file(service: str, index: int) -> str:
    return f"services/{service}/src/common_{index}.ts"


def private_file(service: str, index: int) -> str:
    return f"services/{service}/src/core/private_{index}.ts"


def validate_scenario(scenario: Scenario) -> None:
    known = set(scenario.services)
    if len(known) != len(scenario.services):
        raise RecordValidationError("Scenario lists a service twice")
    for developer, services in scenario.teams.items():
        unknown = set(services) - known
        if unknown:
            raise RecordValidationError(f"Team of {developer} references unknown services {sorted(unknown)}")
    for role, assignments in (("jack", scenario.jacks), ("maven", scenario.mavens)):
        for service in assignments:
            if service not in known:
                raise RecordValidationError(f"Planted {role} for unknown service {service}")
    for service in set(scenario.jacks) & set(scenario.mavens):
        if scenario.jacks[service] == scenario.mavens[service]:
            raise RecordValidationError(f"{service}: the planted jack and maven must differ")
    for developer, pattern in scenario.floaters.items():
        if not pattern:
            raise RecordValidationError(f"Floater {developer} has an empty service pattern")
        unknown = set(pattern) - known
        if unknown:
            raise RecordValidationError(f"Floater {developer} references unknown services {sorted(unknown)}")
        if developer in scenario.teams:
            raise RecordValidationError(f"{developer} cannot be both a floater and a team member")
    low, high = scenario.loc_range
    if low < 0 or low > high:
        raise RecordValidationError(f"Invalid LOC range {scenario.loc_range}")


def _plan_commits(scenario: Scenario, rng: random.Random) -> Tuple[List[Tuple[str, str, List[Tuple[str, int]]]], Dict[str, int]]:
    """Ordered (developer, service, [(path, loc)]) plan plus per-service regular file coverage."""
    plan = []
    coverage: Dict[str, int] = {}
    low, high = scenario.loc_range
    counters = {service: 0 for service in scenario.services}

    def next_common(service: str) -> str:
        path = common_file(service, counters[service] % scenario.common_files)
        counters[service] += 1
        return path

    for service in scenario.services:
        jack = scenario.jacks.get(service)
        maven = scenario.mavens.get(service)
        if jack:
            for i in range(scenario.common_files):
                plan.append((jack, service, [(common_file(service, i), rng.randint(low, high))]))
        if maven:
            for i in range(scenario.private_files):
                plan.append((maven, service, [(private_file(service, i), rng.randint(low, high))]))

        members = sorted(d for d, services in scenario.teams.items() if service in services and d not in (jack, maven))
        covered = set()
        for developer in members:
            for _ in range(scenario.commits_per_developer):
                paths = list(dict.fromkeys(next_common(service) for _ in range(scenario.changes_per_commit)))
                covered.update(paths)
                plan.append((developer, service, [(path, rng.randint(low, high)) for path in paths]))
        coverage[service] = len(covered)

    for developer in sorted(scenario.floaters):
        for service in scenario.floaters[developer]:
            plan.append((developer, service, [(next_common(service), scenario.floater_loc)]))
    return plan, coverage


def _expected_coupling(
    scenario: Scenario, sequences: Dict[str, List[Tuple[str, int]]]
) -> Tuple[List[SwitchStats], List[CouplingEntry]]:
    """Analytic (k, n, s, oc) for every developer active in two services; every planned commit touches one service."""
    switches, entries = [], []
    for developer in sorted(sequences):
        sequence = sequences[developer]
        if len({service for service, _ in sequence}) < 2:
            continue
        for service_a, service_b in combinations(sorted(scenario.services), 2):
            labels = [(service, loc) for service, loc in sequence if service in (service_a, service_b)]
            if not labels:
                continue
            n = len(labels)
            k = sum(1 for (prev, _), (curr, _) in zip(labels, labels[1:]) if prev != curr)
            s = k / (2 * (n - 1)) if n > 1 else 0.0
            sum_a = sum(loc for service, loc in labels if service == service_a)
            sum_b = sum(loc for service, loc in labels if service == service_b)
            oc = (2 * sum_a * sum_b / (sum_a + sum_b)) * s if sum_a + sum_b else 0.0
            switches.append(SwitchStats(developer=developer, service_a=service_a, service_b=service_b, k=k, n=n, s=s))
            entries.append(
                CouplingEntry(developer=developer, service_a=service_a, service_b=service_b, sum_a=sum_a, sum_b=sum_b, oc=oc)
            )
    return switches, entries


def generate(scenario: Scenario) -> Tuple[ActivityLog, GroundTruth]:
    """
    * Step 1 : Plan commits per service (planted jack, planted maven, regular members) then floaters.
    * Step 2 : Place commits on a regular time grid ending at the window end.
    * Step 3 : Attach issues (linked with the configured probability, plus unlinked ones).
    * Step 4 : Record the planted roles and the analytic coupling expectations.
    """
    validate_scenario(scenario)
    rng = random.Random(scenario.seed)
    window = WindowSpec(end=scenario.window_end, length_days=scenario.window_length_days)

    # Step 1
    plan, coverage = _plan_commits(scenario, rng)

    # Step 2
    span_seconds = GRID_FRACTION * scenario.window_length_days * 86400
    step = max(1, int(span_seconds // max(len(plan) - 1, 1)))
    commits = []
    sequences: Dict[str, List[Tuple[str, int]]] = {}
    for i, (developer, service, changes) in enumerate(plan):
        timestamp = scenario.window_end - timedelta(seconds=step * (len(plan) - 1 - i))
        sha = hashlib.sha1(f"{scenario.seed}:{i}:{developer}".encode("utf-8")).hexdigest()
        commits.append(
            RawCommit(
                sha=sha,
                author_email=developer,
                author_name=developer,
                timestamp=timestamp,
                changes=tuple(FileChange(path=path, action=FileAction.MODIFY, loc=loc) for path, loc in changes),
            )
        )
        sequences.setdefault(developer, []).append((service, sum(loc for _, loc in changes)))

    # Step 3
    issues = []
    issue_id = 0
    for commit in commits:
        if scenario.issue_link_probability and rng.random() < scenario.issue_link_probability:
            issue_id += 1
            actor = commit.author_email
            issues.append(IssueEvent(issue_id=issue_id, actor_email=actor, timestamp=commit.timestamp, kind=IssueEventKind.OPENED))
            issues.append(
                IssueEvent(
                    issue_id=issue_id,
                    actor_email=actor,
                    timestamp=commit.timestamp,
                    kind=IssueEventKind.COMMIT_LINKED,
                    linked_sha=commit.sha,
                )
            )
    developers = sorted({c.author_email for c in commits})
    for _ in range(scenario.unlinked_issues if commits else 0):
        issue_id += 1
        actor = rng.choice(developers)
        timestamp = rng.choice(commits).timestamp
        issues.append(IssueEvent(issue_id=issue_id, actor_email=actor, timestamp=timestamp, kind=IssueEventKind.OPENED))
        issues.append(IssueEvent(issue_id=issue_id, actor_email=actor, timestamp=timestamp, kind=IssueEventKind.COMMENTED))

    # Step 4
    expected_maven = {}
    for service, maven in scenario.mavens.items():
        # Common files stay out of the rare set only when regular members reach all of them.
        if coverage.get(service, 0) >= scenario.common_files:
            expected_maven[service] = maven
        else:
            logger.warning("%s: regular members leave common files uncovered; no maven expectation", service)
    expected_connector = {s: j for s, j in scenario.jacks.items() if scenario.common_files >= 2}
    switches, entries = _expected_coupling(scenario, sequences)
    per_developer: Dict[str, float] = {}
    for entry in entries:
        per_developer[entry.developer] = per_developer.get(entry.developer, 0.0) + entry.oc

    truth = GroundTruth(
        window=window,
        expected_jack=dict(scenario.jacks),
        expected_maven=expected_maven,
        expected_connector=expected_connector,
        expected_switches=tuple(switches),
        expected_entries=tuple(entries),
        expected_per_developer=per_developer,
        expected_total_oc=sum(e.oc for e in entries),
    )
    return build_activity_log(commits, issues), truth


def write_scenario(log: ActivityLog, out_dir: str) -> Tuple[str, str]:
    os.makedirs(out_dir, exist_ok=True)
    commits_path = os.path.join(out_dir, "commits.jsonl")
    issues_path = os.path.join(out_dir, "issues.jsonl")
    write_exports(commits_path, issues_path, log)
    return commits_path, issues_path
