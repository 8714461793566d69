from datetime import datetime, timedelta
from math import fsum
from enum import Enum
from fnmatch import fnmatchcase
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_serializer, field_validator, model_validator

from src.utils.index import format_utc, fractional_days, to_utc, validate_sha


class FileAction(str, Enum):
    ADD = "add"
    MODIFY = "modify"
    RENAME = "rename"
    REMOVE = "remove"


class IssueEventKind(str, Enum):
    OPENED = "opened"
    COMMENTED = "commented"
    CLOSED = "closed"
    COMMIT_LINKED = "commit_linked"
    OTHER = "other"


class KeyDevMetric(str, Enum):
    JACK = "jack"
    MAVEN = "maven"
    CONNECTOR = "connector"


class CommitLabel(str, Enum):
    A = "A"
    B = "B"
    AB = "AB"


class ReportFormat(str, Enum):
    JSON = "json"
    CSV = "csv"
    MARKDOWN = "markdown"


# ---------------------------------------------------------------- ingest types


class FileChange(BaseModel):
    model_config = ConfigDict(frozen=True)

    path: str = Field(..., description="Repository-relative path with '/' separators")
    action: FileAction = Field(..., description="add, modify, rename or remove")
    loc: int = Field(..., ge=0, description="Lines changed")

    @field_validator("path")
    @classmethod
    def check_path(cls, path: str) -> str:
        if not path or not path.strip():
            raise ValueError("path must be non-empty")
        if path.startswith("/"):
            raise ValueError(f"path must be repository-relative: {path}")
        if "\\" in path:
            raise ValueError(f"path must use '/' separators: {path}")
        return path


class RawCommit(BaseModel):
    model_config = ConfigDict(frozen=True)

    sha: str = Field(..., description="40 hex characters, lowercase")
    author_email: str = Field(..., description="Author email, or canonical id once unified")
    author_name: str = Field("", description="Author display name")
    timestamp: datetime = Field(..., description="UTC instant, second precision")
    changes: Tuple[FileChange, ...] = Field(..., min_length=1)

    @field_validator("sha", mode="before")
    @classmethod
    def check_sha(cls, sha):
        if isinstance(sha, str):
            sha = sha.lower()
        if not validate_sha(sha):
            raise ValueError(f"malformed sha: {sha!r}")
        return sha

    @field_validator("timestamp", mode="before")
    @classmethod
    def normalize_timestamp(cls, value):
        return to_utc(value)

    @field_serializer("timestamp")
    def serialize_timestamp(self, value: datetime) -> str:
        return format_utc(value)


class IssueEvent(BaseModel):
    model_config = ConfigDict(frozen=True)

    issue_id: int = Field(..., gt=0)
    actor_email: str = Field(..., description="Actor email, or canonical id once unified")
    timestamp: datetime
    kind: IssueEventKind
    linked_sha: Optional[str] = Field(None, description="Set iff kind is commit_linked")

    @field_validator("timestamp", mode="before")
    @classmethod
    def normalize_timestamp(cls, value):
        return to_utc(value)

    @field_validator("linked_sha", mode="before")
    @classmethod
    def check_linked_sha(cls, sha):
        if sha is None:
            return None
        if isinstance(sha, str):
            sha = sha.lower()
        if not validate_sha(sha):
            raise ValueError(f"malformed linked_sha: {sha!r}")
        return sha

    @model_validator(mode="after")
    def check_link(self):
        if self.kind == IssueEventKind.COMMIT_LINKED and self.linked_sha is None:
            raise ValueError("commit_linked event requires linked_sha")
        if self.kind != IssueEventKind.COMMIT_LINKED and self.linked_sha is not None:
            raise ValueError(f"linked_sha only allowed on commit_linked events, got {self.kind.value}")
        return self

    @field_serializer("timestamp")
    def serialize_timestamp(self, value: datetime) -> str:
        return format_utc(value)


class IdentityMap(BaseModel):
    model_config = ConfigDict(frozen=True)

    aliases: Dict[str, str] = Field(default_factory=dict, description="alias email -> canonical id")

    @field_validator("aliases")
    @classmethod
    def lowercase_keys(cls, aliases: Dict[str, str]) -> Dict[str, str]:
        return {alias.strip().lower(): canonical for alias, canonical in aliases.items()}

    def chained_aliases(self) -> List[Tuple[str, str, str]]:
        """(alias, canonical, canonical's own target) for every canonical id that is itself remapped."""
        chains = []
        for alias, canonical in sorted(self.aliases.items()):
            target = self.aliases.get(canonical.lower())
            if target is not None and target != canonical:
                chains.append((alias, canonical, target))
        return chains

    def canonical_ids(self) -> frozenset:
        return frozenset(self.aliases.values())

    def resolve(self, email: str, canonical_ids: Optional[frozenset] = None) -> str:
        key = email.strip().lower()
        if key in self.aliases:
            return self.aliases[key]
        if canonical_ids is None:
            canonical_ids = self.canonical_ids()
        # Canonical ids pass through untouched so resolving twice changes nothing.
        if email in canonical_ids:
            return email
        return key


class BotFilter(BaseModel):
    model_config = ConfigDict(frozen=True)

    patterns: Tuple[str, ...] = ()
    enabled: bool = True

    @model_validator(mode="after")
    def check_patterns(self):
        if self.enabled and not self.patterns:
            raise ValueError("bot filter enabled without patterns")
        return self

    def matches(self, actor: str) -> bool:
        if not self.enabled:
            return False
        candidate = actor.lower()
        return any(fnmatchcase(candidate, pattern.lower()) for pattern in self.patterns)


class ActivityLog(BaseModel):
    model_config = ConfigDict(frozen=True)

    commits: Tuple[RawCommit, ...] = ()
    issues: Tuple[IssueEvent, ...] = ()
    developers: frozenset = frozenset()

    def is_empty(self) -> bool:
        return not self.commits and not self.issues

    def latest_timestamp(self) -> Optional[datetime]:
        stamps = [c.timestamp for c in self.commits[-1:]] + [e.timestamp for e in self.issues[-1:]]
        return max(stamps) if stamps else None

    def earliest_timestamp(self) -> Optional[datetime]:
        stamps = [c.timestamp for c in self.commits[:1]] + [e.timestamp for e in self.issues[:1]]
        return min(stamps) if stamps else None


# ----------------------------------------------------------------- graph types


class WindowSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    end: datetime
    length_days: float = Field(365.0, gt=0)

    @field_validator("end", mode="before")
    @classmethod
    def normalize_end(cls, value):
        return to_utc(value)

    @property
    def start(self) -> datetime:
        return self.end - timedelta(days=self.length_days)

    def days_passed(self, moment: datetime) -> float:
        return fractional_days(self.end, moment)

    def includes(self, moment: datetime) -> bool:
        """Trailing inclusion: 0 <= days passed < length, i.e. start < moment <= end."""
        passed = self.days_passed(moment)
        return 0.0 <= passed < self.length_days

    def label(self) -> str:
        return f"{format_utc(self.start)[:10]}..{format_utc(self.end)[:10]}"


class ServiceMap(BaseModel):
    model_config = ConfigDict(frozen=True)

    entries: Tuple[Tuple[str, str], ...] = Field(..., description="(path_prefix, service_name)")

    @field_validator("entries")
    @classmethod
    def check_entries(cls, entries):
        normalized = []
        seen = set()
        for prefix, service in entries:
            prefix = prefix.strip().strip("/")
            if not prefix:
                raise ValueError("service prefix must be non-empty")
            if not service:
                raise ValueError(f"service name missing for prefix {prefix}")
            if prefix in seen:
                raise ValueError(f"duplicate service prefix: {prefix}")
            seen.add(prefix)
            normalized.append((prefix, service))
        return tuple(normalized)

    @property
    def services(self) -> List[str]:
        return sorted({service for _, service in self.entries})

    def resolve(self, path: str) -> Optional[str]:
        """Service owning a path by longest matching prefix (whole path segments only)."""
        best = None
        best_length = -1
        for prefix, service in self.entries:
            if (path == prefix or path.startswith(prefix + "/")) and len(prefix) > best_length:
                best, best_length = service, len(prefix)
        return best


class AnalysisConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    distance_threshold: float = Field(5.0, gt=0, description="Max path length for a file to be reachable")
    rare_reach_limit: int = Field(1, ge=1, description="Max reaching developers for a rarely reached file")
    window_length_days: float = Field(365.0, gt=0)
    top_k: int = Field(3, ge=1)
    mask_ids: bool = True
    weighted_betweenness: bool = Field(True, description="Use edge distances; hop count when false")
    heavy_coupling_threshold: Optional[float] = Field(None, gt=0)
    betweenness_samples: Optional[int] = Field(None, ge=1, description="Pivot sampling; exact when unset")


# ---------------------------------------------------------------- keydev types


class KeyDevScore(BaseModel):
    model_config = ConfigDict(frozen=True)

    developer: str
    metric: KeyDevMetric
    score: float = Field(..., ge=0.0, le=1.0)
    rank: int = Field(..., ge=1)


class ReachabilityResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    developer: str
    reachable_files: frozenset = frozenset()


# -------------------------------------------------------------- coupling types


class LabeledCommit(BaseModel):
    model_config = ConfigDict(frozen=True)

    sha: str
    timestamp: datetime
    label: CommitLabel
    contrib_a: int = Field(..., ge=0)
    contrib_b: int = Field(..., ge=0)

    @model_validator(mode="after")
    def check_contributions(self):
        if self.label == CommitLabel.A and self.contrib_b != 0:
            raise ValueError("label A commit carries contribution to service b")
        if self.label == CommitLabel.B and self.contrib_a != 0:
            raise ValueError("label B commit carries contribution to service a")
        return self


class SwitchStats(BaseModel):
    model_config = ConfigDict(frozen=True)

    developer: str
    service_a: str
    service_b: str
    k: int = Field(..., ge=0)
    n: int = Field(..., ge=1)
    s: float = Field(..., ge=0.0)


class CouplingEntry(BaseModel):
    model_config = ConfigDict(frozen=True)

    developer: str
    service_a: str
    service_b: str
    sum_a: int = Field(..., ge=0)
    sum_b: int = Field(..., ge=0)
    oc: float = Field(..., ge=0.0)


class CouplingMatrix(BaseModel):
    model_config = ConfigDict(frozen=True)

    services: Tuple[str, ...]
    cells: Dict[Tuple[str, str], float] = Field(default_factory=dict, description="Keyed by sorted pair")
    per_developer: Dict[str, float] = Field(default_factory=dict)
    window: Optional[WindowSpec] = None
    entries: Tuple[CouplingEntry, ...] = ()
    switches: Tuple[SwitchStats, ...] = ()

    def cell(self, service_a: str, service_b: str) -> float:
        if service_a == service_b:
            raise KeyError(f"no diagonal cell for {service_a}")
        key = tuple(sorted((service_a, service_b)))
        return self.cells.get(key, 0.0)

    def total(self) -> float:
        return fsum(self.cells[key] for key in sorted(self.cells))


# ---------------------------------------------------------------- report types


class ReportConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    format: ReportFormat = ReportFormat.MARKDOWN
    mask_ids: bool = True
    top_k: int = Field(3, ge=1)
    output_path: Optional[str] = None


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    commits: Optional[str] = Field(None, description="Commit export (JSON lines)")
    issues: Optional[str] = Field(None, description="Issue event export (JSON lines)")
    identity_map: Optional[str] = Field(None, description="JSON object alias -> canonical id")
    bots: Optional[str] = Field(None, description="Glob patterns, one per line")
    services: Optional[str] = Field(None, description="JSON object prefix -> service")
    services_root: Optional[str] = Field(None, description="Derive services from folders under this root")
    window_end: Optional[datetime] = None
    windows: int = Field(4, ge=1)
    first: Optional[datetime] = None
    key_only: bool = False
    dump_graphs: Optional[str] = None
    analysis: AnalysisConfig = Field(default_factory=AnalysisConfig)
    report: ReportConfig = Field(default_factory=ReportConfig)

    @field_validator("window_end", "first", mode="before")
    @classmethod
    def normalize_instants(cls, value):
        return None if value is None else to_utc(value)


# -------------------------------------------------------------- synthgen types


class Scenario(BaseModel):
    model_config = ConfigDict(frozen=True)

    seed: int = 0
    services: Tuple[str, ...]
    teams: Dict[str, Tuple[str, ...]] = Field(default_factory=dict, description="developer -> services")
    commits_per_developer: int = Field(1, ge=0)
    changes_per_commit: int = Field(1, ge=1)
    loc_range: Tuple[int, int] = (1, 50)
    common_files: int = Field(6, ge=1)
    private_files: int = Field(3, ge=1)
    jacks: Dict[str, str] = Field(default_factory=dict, description="service -> planted jack")
    mavens: Dict[str, str] = Field(default_factory=dict, description="service -> planted maven")
    floaters: Dict[str, Tuple[str, ...]] = Field(default_factory=dict, description="developer -> service pattern")
    floater_loc: int = Field(10, ge=1)
    issue_link_probability: float = Field(0.0, ge=0.0, le=1.0)
    unlinked_issues: int = Field(0, ge=0)
    window_end: datetime = Field(default_factory=lambda: to_utc("2024-11-21T00:00:00Z"))
    window_length_days: float = Field(365.0, gt=0)

    @field_validator("window_end", mode="before")
    @classmethod
    def normalize_end(cls, value):
        return to_utc(value)


class GroundTruth(BaseModel):
    model_config = ConfigDict(frozen=True)

    window: WindowSpec
    expected_jack: Dict[str, str] = Field(default_factory=dict)
    expected_maven: Dict[str, str] = Field(default_factory=dict)
    expected_connector: Dict[str, str] = Field(default_factory=dict)
    expected_switches: Tuple[SwitchStats, ...] = ()
    expected_entries: Tuple[CouplingEntry, ...] = ()
    expected_per_developer: Dict[str, float] = Field(default_factory=dict)
    expected_total_oc: float = 0.0
