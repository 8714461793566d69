import argparse
import json
import logging
import os
import sys
from typing import Optional

from src.config.index import appConfig
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
)
from src.models.index import ActivityLog, IdentityMap, RunConfig, ServiceMap
from src.utils.errors import AnalysisError, ArgumentError, RecordParseError

logger = logging.getLogger(__name__)

# Flag dest -> dotted RunConfig path(s) it overrides.
FLAG_FIELDS = {
    "commits": ["commits"],
    "issues": ["issues"],
    "identity_map": ["identity_map"],
    "bots": ["bots"],
    "services": ["services"],
    "services_root": ["services_root"],
    "window_end": ["window_end"],
    "windows": ["windows"],
    "first": ["first"],
    "key_only": ["key_only"],
    "dump_graphs": ["dump_graphs"],
    "window_days": ["analysis.window_length_days"],
    "threshold": ["analysis.distance_threshold"],
    "rare_limit": ["analysis.rare_reach_limit"],
    "top_k": ["analysis.top_k", "report.top_k"],
    "mask": ["analysis.mask_ids", "report.mask_ids"],
    "heavy_threshold": ["analysis.heavy_coupling_threshold"],
    "weighted_betweenness": ["analysis.weighted_betweenness"],
    "format": ["report.format"],
    "out": ["report.output_path"],
}


class UsageError(AnalysisError):
    pass


class CliParser(argparse.ArgumentParser):
    """ArgumentParser that raises instead of exiting, so bad flags map to exit code 1."""

    def error(self, message):
        raise UsageError(message)


def configure_logging() -> None:
    logging.basicConfig(
        level=appConfig["log_level"],
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def _set_path(target: dict, dotted: str, value) -> None:
    *parents, leaf = dotted.split(".")
    for key in parents:
        target = target.setdefault(key, {})
    target[leaf] = value


def load_run_config(args: argparse.Namespace) -> RunConfig:
    """Config file values first, then every flag the user actually passed."""
    merged: dict = {}
    config_path = getattr(args, "config", None)
    if config_path:
        try:
            with open(config_path, "r", encoding="utf-8") as f:
                merged = json.load(f)
        except json.JSONDecodeError as e:
            raise RecordParseError(f"Failed to parse config file {config_path}: {str(e)}") from e

    for dest, paths in FLAG_FIELDS.items():
        value = getattr(args, dest, None)
        if value is None:
            continue
        for path in paths:
            _set_path(merged, path, value)
    return RunConfig.model_validate(merged)


def _require_file(path: Optional[str], what: str) -> None:
    if path and not os.path.isfile(path):
        raise ArgumentError(f"{what} file not found: {path}")


def load_log(config: RunConfig) -> ActivityLog:
    """
    * Step 1 : Load commit and issue exports.
    * Step 2 : Unify identities with the identity map (if any).
    * Step 3 : Build the sorted activity log and drop bot activity.
    """
    for path, what in (
        (config.commits, "Commit export"),
        (config.issues, "Issue export"),
        (config.identity_map, "Identity map"),
        (config.bots, "Bot filter"),
        (config.services, "Service map"),
    ):
        _require_file(path, what)
    if not config.commits:
        raise ArgumentError("--commits is required")

    # Step 1
    commits = load_commits(config.commits)
    issues = load_issues(config.issues) if config.issues else []

    # Step 2
    identity_map = load_identity_map(config.identity_map) if config.identity_map else IdentityMap()
    commits, issues = unify_identities(commits, issues, identity_map)

    # Step 3
    bot_filter = load_bot_filter(config.bots) if config.bots else default_bot_filter()
    return filter_bots(build_activity_log(commits, issues), bot_filter)


def resolve_service_map(config: RunConfig, log: ActivityLog) -> ServiceMap:
    if config.services:
        return load_service_map(config.services)
    if config.services_root:
        return discover_services(log, config.services_root)
    raise ArgumentError("No services configured: pass --services or --services-root")


def write_output(document: str, path: Optional[str]) -> None:
    if not path:
        sys.stdout.write(document)
        return
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(document)
    logger.info("Wrote %s", path)
