import json
import logging
from math import fsum
from typing import Dict, Iterable, List, Mapping, Optional

from src.keydev.utils import role_overlap
from src.models.index import (
    CouplingMatrix,
    KeyDevMetric,
    KeyDevScore,
    ReportConfig,
    ReportFormat,
    WindowSpec,
)
from src.report.utils import (
    WHOLE_PROJECT,
    format_amount,
    format_score,
    to_csv,
    to_json,
    to_markdown,
    window_dict,
    window_from_dict,
)
from src.utils.errors import ArgumentError, RecordParseError

logger = logging.getLogger(__name__)

ScoresByMetric = Mapping[KeyDevMetric, List[KeyDevScore]]

METRIC_COLUMNS = [KeyDevMetric.JACK, KeyDevMetric.MAVEN, KeyDevMetric.CONNECTOR]


def mask_id(developer: str, enabled: bool = True) -> str:
    """First three characters of the id followed by XXX."""
    if not developer:
        raise ArgumentError("Cannot mask an empty developer id")
    if not enabled:
        return developer
    return developer[:3] + "XXX"


def _top(scores: List[KeyDevScore], k: int) -> List[KeyDevScore]:
    return sorted(scores, key=lambda s: (s.rank, s.developer))[:k]


def _scopes(per_service: Mapping[str, ScoresByMetric], whole: Optional[ScoresByMetric]):
    scopes = [(service, per_service[service]) for service in sorted(per_service)]
    if whole is not None:
        scopes.append((WHOLE_PROJECT, whole))
    return scopes


def _keydev_records(scopes, cfg: ReportConfig):
    for scope, scores_by_metric in scopes:
        for metric in METRIC_COLUMNS:
            for score in _top(scores_by_metric.get(metric, []), cfg.top_k):
                yield {
                    "scope": scope,
                    "metric": metric.value,
                    "rank": score.rank,
                    "developer": mask_id(score.developer, cfg.mask_ids),
                    "score": score.score,
                }


def key_role_rows(
    per_service: Mapping[str, ScoresByMetric], whole: Optional[ScoresByMetric], cfg: ReportConfig
) -> List[dict]:
    """Developers who are top-k in more than one (scope, metric)."""
    if whole is None:
        return []
    rows = []
    for developer, roles in role_overlap(per_service, whole, cfg.top_k).items():
        if len(roles) > 1:
            labels = [f"{'project' if scope == '*' else scope}:{metric}" for scope, metric in roles]
            rows.append({"developer": mask_id(developer, cfg.mask_ids), "roles": labels})
    return rows


def render_keydev_table(
    per_service: Mapping[str, ScoresByMetric],
    whole: Optional[ScoresByMetric],
    cfg: ReportConfig,
    window: Optional[WindowSpec] = None,
    roles: Optional[List[dict]] = None,
) -> str:
    """One row per service plus the whole project; cells list (id, score) tuples in rank order."""
    scopes = _scopes(per_service, whole)
    records = list(_keydev_records(scopes, cfg))
    if roles is None:
        roles = key_role_rows(per_service, whole, cfg)
    else:
        roles = [{"developer": mask_id(r["developer"], cfg.mask_ids), "roles": list(r["roles"])} for r in roles]

    if cfg.format == ReportFormat.JSON:
        return to_json(
            {
                "kind": "keydevs",
                "window": window_dict(window),
                "top_k": cfg.top_k,
                "scopes": [scope for scope, _ in scopes],
                "records": records,
                "roles": roles,
            }
        )

    if cfg.format == ReportFormat.CSV:
        columns = ["scope", "metric", "rank", "developer", "score"]
        return to_csv(columns, [[r[c] for c in columns] for r in records])

    # Scopes without scores still get a row.
    cells: Dict[str, Dict[str, list]] = {scope: {} for scope, _ in scopes}
    for r in records:
        cells[r["scope"]].setdefault(r["metric"], []).append((r["developer"], format_score(r["score"])))
    rows = [
        [scope] + [repr(cells[scope].get(metric.value, [])) for metric in METRIC_COLUMNS]
        for scope in cells
    ]
    notes = [f"Window: {window.label()}"] if window is not None else []
    document = to_markdown("Key developers", ["Service", "Jack", "Maven", "Connector"], rows, notes)
    if roles:
        document += "\n" + to_markdown(
            "Developers holding several key roles",
            ["Developer", "Roles"],
            [[r["developer"], ", ".join(r["roles"])] for r in roles],
        )
    return document


def _coupling_rows(windows: List[CouplingMatrix], key_developers: Optional[Iterable[str]]):
    developers = sorted({d for matrix in windows for d in matrix.per_developer})
    if key_developers is not None:
        allowed = set(key_developers)
        developers = [d for d in developers if d in allowed]
    rows = []
    for developer in developers:
        values = [matrix.per_developer.get(developer, 0.0) for matrix in windows]
        # Only developers who cause coupling somewhere get a row.
        if any(values):
            rows.append((developer, values))
    rows.sort(key=lambda row: (-row[1][0], row[0]))
    return rows


def _window_label(matrix: CouplingMatrix, index: int) -> str:
    return matrix.window.label() if matrix.window is not None else f"Window {index}"


def _turnover_document(turnover: Optional[List[dict]], cfg: ReportConfig) -> Optional[List[dict]]:
    if turnover is None:
        return None
    return [
        {
            "window": entry["window"],
            "departed": sorted(mask_id(d, cfg.mask_ids) for d in entry["departed"]),
            "arrived": sorted(mask_id(d, cfg.mask_ids) for d in entry["arrived"]),
        }
        for entry in turnover
    ]


def render_coupling_table(
    windows: List[CouplingMatrix],
    cfg: ReportConfig,
    key_developers: Optional[Iterable[str]] = None,
    key_share: Optional[float] = None,
    turnover: Optional[List[dict]] = None,
) -> str:
    """Developers by window, sorted by first-window OC descending then id, with a Total footer.

    `turnover` entries name the key developers who left or arrived in each later window.
    """
    if not windows:
        raise ArgumentError("Cannot render a coupling table without windows")

    rows = _coupling_rows(windows, key_developers)
    labels = [_window_label(matrix, i) for i, matrix in enumerate(windows, start=1)]
    totals = [matrix.total() for matrix in windows]
    turnover = _turnover_document(turnover, cfg)

    if cfg.format in (ReportFormat.JSON, ReportFormat.CSV):
        records = [
            {"developer": mask_id(developer, cfg.mask_ids), "window": labels[i], "oc": value}
            for developer, values in rows
            for i, value in enumerate(values)
        ]
        if cfg.format == ReportFormat.CSV:
            return to_csv(["developer", "window", "oc"], [[r["developer"], r["window"], r["oc"]] for r in records])
        return to_json(
            {
                "kind": "coupling",
                "key_developer_share": key_share,
                "key_developers": (
                    sorted({mask_id(d, cfg.mask_ids) for d in key_developers}) if key_developers is not None else None
                ),
                "records": records,
                "turnover": turnover,
                "windows": [_matrix_document(matrix, label, cfg) for matrix, label in zip(windows, labels)],
            }
        )

    table = [[mask_id(developer, cfg.mask_ids)] + [format_amount(v) for v in values] for developer, values in rows]
    table.append(["Total"] + [format_amount(total) for total in totals])
    notes = []
    if key_share is not None:
        notes.append(f"Key developer share of total OC: {format_amount(key_share * 100)}%")
    for entry in turnover or []:
        departed = ", ".join(entry["departed"]) or "none"
        arrived = ", ".join(entry["arrived"]) or "none"
        notes.append(f"Key developer turnover in {entry['window']}: left {departed}; arrived {arrived}")
    return to_markdown("Organizational coupling by window", ["Developer"] + labels, table, notes)


def _matrix_document(matrix: CouplingMatrix, label: str, cfg: ReportConfig) -> dict:
    per_developer: Dict[str, float] = {}
    for developer in sorted(matrix.per_developer):
        masked = mask_id(developer, cfg.mask_ids)
        per_developer[masked] = per_developer.get(masked, 0.0) + matrix.per_developer[developer]
    return {
        "label": label,
        "window": window_dict(matrix.window),
        "services": list(matrix.services),
        "total": matrix.total(),
        "cells": [{"service_a": a, "service_b": b, "oc": oc} for (a, b), oc in sorted(matrix.cells.items())],
        "per_developer": [{"developer": d, "oc": oc} for d, oc in sorted(per_developer.items())],
    }


def render_coupling_matrix(matrix: CouplingMatrix, cfg: ReportConfig, heavy_threshold: Optional[float] = None) -> str:
    """Service by service OC; the diagonal is '-', pairs above the threshold carry a '*'."""
    label = _window_label(matrix, 1)
    if cfg.format == ReportFormat.JSON:
        return to_json({"kind": "coupling_matrix", **_matrix_document(matrix, label, cfg)})
    if cfg.format == ReportFormat.CSV:
        return to_csv(
            ["service_a", "service_b", "oc"], [[a, b, oc] for (a, b), oc in sorted(matrix.cells.items())]
        )

    rows = []
    for service_a in matrix.services:
        row = [service_a]
        for service_b in matrix.services:
            if service_a == service_b:
                row.append("-")
                continue
            oc = matrix.cell(service_a, service_b)
            heavy = heavy_threshold is not None and oc > heavy_threshold
            row.append(format_amount(oc) + ("*" if heavy else ""))
        rows.append(row)
    notes = [f"Window: {label}"]
    if heavy_threshold is not None:
        notes.append(f"* above the heavy coupling threshold {format_amount(heavy_threshold)}")
    return to_markdown("Service coupling matrix", ["Service"] + list(matrix.services), rows, notes)


def load_results(text: str) -> dict:
    """Parse a JSON result document back into renderer inputs."""
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise RecordParseError(f"Failed to parse result document: {str(e)}") from e

    kind = document.get("kind")
    if kind == "keydevs":
        scopes = document.get("scopes", [])
        per_service: Dict[str, Dict[KeyDevMetric, List[KeyDevScore]]] = {
            scope: {} for scope in scopes if scope != WHOLE_PROJECT
        }
        whole: Optional[Dict[KeyDevMetric, List[KeyDevScore]]] = {} if WHOLE_PROJECT in scopes else None
        for r in document.get("records", []):
            if r["scope"] == WHOLE_PROJECT:
                whole = whole if whole is not None else {}
                target = whole
            else:
                target = per_service.setdefault(r["scope"], {})
            metric = KeyDevMetric(r["metric"])
            target.setdefault(metric, []).append(
                KeyDevScore(developer=r["developer"], metric=metric, score=r["score"], rank=r["rank"])
            )
        return {
            "kind": kind,
            "per_service": per_service,
            "whole": whole,
            "roles": document.get("roles", []),
            "window": window_from_dict(document.get("window")),
            "top_k": document.get("top_k", 3),
        }

    if kind == "coupling":
        matrices = []
        for w in document.get("windows", []):
            matrices.append(
                CouplingMatrix(
                    services=tuple(w["services"]),
                    cells={(c["service_a"], c["service_b"]): c["oc"] for c in w["cells"]},
                    per_developer={p["developer"]: p["oc"] for p in w["per_developer"]},
                    window=window_from_dict(w.get("window")),
                )
            )
        return {
            "kind": kind,
            "windows": matrices,
            "key_developers": document.get("key_developers"),
            "key_developer_share": document.get("key_developer_share"),
            "turnover": document.get("turnover"),
        }

    raise RecordParseError(f"Unknown result document kind: {kind!r}")


def conservation_gap(matrix: CouplingMatrix) -> float:
    """Absolute difference between the pair-cell total and the per-developer total."""
    return abs(matrix.total() - fsum(matrix.per_developer[d] for d in sorted(matrix.per_developer)))
