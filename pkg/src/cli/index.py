import argparse
import logging
import os
import sys
from datetime import timedelta
from math import fsum
from typing import List, Optional, Set

from pydantic import ValidationError

from src.cli.utils import (
    CliParser,
    UsageError,
    configure_logging,
    load_log,
    load_run_config,
    resolve_service_map,
    write_output,
)
from src.config.index import require_github_token
from src.coupling.index import heavily_coupled_pairs, windowed_coupling
from src.graph.index import build_graph, dump_graph, scope_to_service
from src.ingestion.index import load_commits
from src.ingestion.remote import fetch_remote
from src.ingestion.utils import suggest_aliases
from src.keydev.index import analyze_scope
from src.keydev.utils import key_developers, turnover
from src.models.index import (
    ActivityLog,
    AnalysisConfig,
    CouplingMatrix,
    ReportConfig,
    ReportFormat,
    RunConfig,
    ServiceMap,
    WindowSpec,
)
from src.report.index import load_results, render_coupling_matrix, render_coupling_table, render_keydev_table
from src.report.utils import to_csv, to_json, to_markdown
from src.synthgen.index import generate, write_scenario
from src.synthgen.presets import PRESETS
from src.utils.errors import AnalysisError, ArgumentError, TransientError
from src.utils.index import format_utc, to_utc

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_TRANSIENT = 2

FORMATS = [f.value for f in ReportFormat]


# ------------------------------------------------------------------ analysis


def _analyze(
    log: ActivityLog, service_map: ServiceMap, window: WindowSpec, analysis: AnalysisConfig, dump_dir: Optional[str] = None
):
    """Key developer scores per service and for the whole project in one window."""
    per_service = {}
    graphs = []
    for service in service_map.services:
        graph = build_graph(scope_to_service(log, service_map, service), window, scope=service)
        per_service[service] = analyze_scope(graph, analysis)
        graphs.append(graph)
    whole_graph = build_graph(log, window)
    whole = analyze_scope(whole_graph, analysis)
    graphs.append(whole_graph)

    if dump_dir:
        os.makedirs(dump_dir, exist_ok=True)
        for graph in graphs:
            name = graph.scope or "project"
            write_output(to_json(dump_graph(graph)), os.path.join(dump_dir, f"{name}.json"))
    return per_service, whole


def _window_end(config: RunConfig, log: ActivityLog):
    earliest = log.earliest_timestamp()
    if config.window_end is None:
        return log.latest_timestamp()
    if earliest is not None and config.window_end < earliest:
        raise ArgumentError(
            f"Window end {format_utc(config.window_end)} is before the earliest event {format_utc(earliest)}"
        )
    return config.window_end


# ------------------------------------------------------------------ commands


def cmd_fetch(args: argparse.Namespace) -> int:
    token = require_github_token()
    try:
        since, until = to_utc(args.since), to_utc(args.until)
    except ValueError as e:
        raise ArgumentError(f"Invalid --since/--until: {str(e)}") from e
    commits_path, issues_path = fetch_remote(args.repo, token, since, until, args.out_dir)
    logger.info("Fetched %s into %s and %s", args.repo, commits_path, issues_path)
    return EXIT_OK


def cmd_keydevs(args: argparse.Namespace) -> int:
    config = load_run_config(args)
    log = load_log(config)
    service_map = resolve_service_map(config, log)
    if not service_map.services:
        raise ArgumentError("No services configured")

    end = _window_end(config, log)
    if end is None:
        logger.warning("Activity log is empty; writing an empty report")
        write_output(render_keydev_table({}, None, config.report), config.report.output_path)
        return EXIT_OK

    window = WindowSpec(end=end, length_days=config.analysis.window_length_days)
    per_service, whole = _analyze(log, service_map, window, config.analysis, config.dump_graphs)

    write_output(render_keydev_table(per_service, whole, config.report, window), config.report.output_path)
    return EXIT_OK


def _key_developers_by_window(
    log: ActivityLog, service_map: ServiceMap, matrices: List[CouplingMatrix], analysis: AnalysisConfig
) -> List[Set[str]]:
    by_window = []
    for matrix in matrices:
        per_service, whole = _analyze(log, service_map, matrix.window, analysis)
        members = key_developers(whole, analysis.top_k)
        for scores in per_service.values():
            members |= key_developers(scores, analysis.top_k)
        by_window.append(members)
    return by_window


def _turnover_by_window(matrices: List[CouplingMatrix], by_window: List[Set[str]]) -> List[dict]:
    entries = []
    for (previous, current), matrix in zip(zip(by_window, by_window[1:]), matrices[1:]):
        departed, arrived = turnover(previous, current)
        logger.info("%s: %d key developers left, %d arrived", matrix.window.label(), len(departed), len(arrived))
        entries.append({"window": matrix.window.label(), "departed": departed, "arrived": arrived})
    return entries


def _lifecycle_share(matrices: List[CouplingMatrix], by_window: List[Set[str]]) -> float:
    total = fsum(matrix.total() for matrix in matrices)
    if total == 0:
        return 0.0
    key = fsum(
        matrix.per_developer.get(developer, 0.0)
        for matrix, members in zip(matrices, by_window)
        for developer in sorted(members)
    )
    return key / total


def cmd_coupling(args: argparse.Namespace) -> int:
    config = load_run_config(args)
    log = load_log(config)
    service_map = resolve_service_map(config, log)
    if len(service_map.services) < 2:
        raise ArgumentError(f"Organizational coupling needs at least 2 services, got {len(service_map.services)}")

    end = _window_end(config, log)
    if end is None:
        raise ArgumentError("Activity log is empty; pass --window-end to anchor the coupling windows")
    length = config.analysis.window_length_days
    first = config.first if config.first is not None else end - timedelta(days=length * config.windows)
    matrices = windowed_coupling(log, service_map, first, length, config.windows)

    members: Optional[Set[str]] = None
    share: Optional[float] = None
    changes: Optional[List[dict]] = None
    if config.key_only:
        by_window = _key_developers_by_window(log, service_map, matrices, config.analysis)
        members = set().union(*by_window)
        share = _lifecycle_share(matrices, by_window)
        changes = _turnover_by_window(matrices, by_window)
        logger.info("Key developers contribute %.2f%% of organizational coupling", share * 100)

    heavy = config.analysis.heavy_coupling_threshold
    if heavy is not None:
        for matrix in matrices:
            for service_a, service_b, oc in heavily_coupled_pairs(matrix, heavy):
                logger.warning("%s: %s and %s are heavily coupled (%.2f)", matrix.window.label(), service_a, service_b, oc)

    document = render_coupling_table(matrices, config.report, members, share, changes)
    if config.report.format == ReportFormat.MARKDOWN:
        for matrix in matrices:
            document += "\n" + render_coupling_matrix(matrix, config.report, heavy)
    write_output(document, config.report.output_path)
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    if not os.path.isfile(args.input):
        raise ArgumentError(f"Result file not found: {args.input}")
    with open(args.input, "r", encoding="utf-8") as f:
        results = load_results(f.read())

    cfg = ReportConfig(
        format=args.format or ReportFormat.MARKDOWN,
        mask_ids=True if args.mask is None else args.mask,
        top_k=args.top_k or results.get("top_k", 3),
        output_path=args.out,
    )
    if results["kind"] == "keydevs":
        document = render_keydev_table(
            results["per_service"], results["whole"], cfg, results["window"], results["roles"]
        )
    else:
        matrices = results["windows"]
        if not matrices:
            raise ArgumentError("Result document holds no coupling windows")
        document = render_coupling_table(
            matrices, cfg, results["key_developers"], results["key_developer_share"], results["turnover"]
        )
        if cfg.format == ReportFormat.MARKDOWN:
            for matrix in matrices:
                document += "\n" + render_coupling_matrix(matrix, cfg)
    write_output(document, cfg.output_path)
    return EXIT_OK


def cmd_suggest_aliases(args: argparse.Namespace) -> int:
    if not os.path.isfile(args.commits):
        raise ArgumentError(f"Commit export file not found: {args.commits}")
    suggestions = suggest_aliases(load_commits(args.commits))
    columns = ["email", "other_email", "evidence"]
    rows = [list(s) for s in suggestions]
    fmt = ReportFormat(args.format or ReportFormat.MARKDOWN)
    if fmt == ReportFormat.JSON:
        document = to_json({"kind": "aliases", "records": [s._asdict() for s in suggestions]})
    elif fmt == ReportFormat.CSV:
        document = to_csv(columns, rows)
    else:
        document = to_markdown("Suggested identity merges", columns, rows, ["Review before adding to the identity map."])
    write_output(document, args.out)
    return EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    scenario = PRESETS[args.preset]() if args.seed is None else PRESETS[args.preset](seed=args.seed)
    log, truth = generate(scenario)
    commits_path, issues_path = write_scenario(log, args.out_dir)
    write_output(to_json(truth.model_dump(mode="json")), os.path.join(args.out_dir, "ground_truth.json"))
    logger.info(
        "Wrote %s scenario: %d commits, %d issue events (%s, %s)",
        args.preset,
        len(log.commits),
        len(log.issues),
        commits_path,
        issues_path,
    )
    return EXIT_OK


# -------------------------------------------------------------------- parser


def _analysis_flags() -> CliParser:
    """Flags shared by keydevs and coupling; every dest maps to a RunConfig field."""
    common = CliParser(add_help=False)
    common.add_argument("--config", help="JSON run config; flags override its values")
    common.add_argument("--commits", help="Commit export (JSON lines)")
    common.add_argument("--issues", help="Issue event export (JSON lines)")
    common.add_argument("--identity-map", dest="identity_map", help="JSON object alias email -> canonical id")
    common.add_argument("--bots", help="Bot glob patterns, one per line")
    common.add_argument("--services", help="JSON object path prefix -> service")
    common.add_argument("--services-root", dest="services_root", help="Derive one service per folder under this root")
    common.add_argument("--window-days", dest="window_days", type=float, help="Window length in days (default 365)")
    common.add_argument("--threshold", type=float, help="Reachability distance threshold (default 5)")
    common.add_argument("--rare-limit", dest="rare_limit", type=int, help="Max developers reaching a rare file (default 1)")
    common.add_argument("--top-k", dest="top_k", type=int, help="Key developers per metric (default 3)")
    common.add_argument("--format", choices=FORMATS, help="Report format (default markdown)")
    common.add_argument("--mask", action=argparse.BooleanOptionalAction, default=None, help="Mask developer ids")
    common.add_argument("--out", help="Report path (default stdout)")
    common.add_argument("--window-end", dest="window_end", help="ISO-8601 window end (default latest event)")
    common.add_argument("--windows", type=int, help="Consecutive coupling windows (default 4)")
    common.add_argument("--first", help="ISO-8601 start of the first coupling window")
    common.add_argument(
        "--key-only", dest="key_only", action="store_const", const=True, default=None,
        help="Coupling rows for key developers only",
    )
    common.add_argument("--dump-graphs", dest="dump_graphs", help="Write per-scope graph JSON into this directory")
    common.add_argument("--heavy-threshold", dest="heavy_threshold", type=float, help="Flag service pairs above this OC")
    common.add_argument(
        "--hop-betweenness", dest="weighted_betweenness", action="store_const", const=False, default=None,
        help="Connector betweenness by hop count instead of edge distance",
    )
    return common


def build_parser() -> CliParser:
    parser = CliParser(prog="orgcoupling", description="Key developers and organizational coupling for microservices")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=CliParser)
    common = _analysis_flags()

    fetch = commands.add_parser("fetch", help="Export commits and issue events from GitHub")
    fetch.add_argument("--repo", required=True, help="owner/name")
    fetch.add_argument("--since", required=True, help="ISO-8601 start")
    fetch.add_argument("--until", required=True, help="ISO-8601 end")
    fetch.add_argument("--out-dir", dest="out_dir", required=True)
    fetch.set_defaults(handler=cmd_fetch)

    keydevs = commands.add_parser("keydevs", parents=[common], help="Jack, maven and connector per service")
    keydevs.set_defaults(handler=cmd_keydevs)

    coupling = commands.add_parser("coupling", parents=[common], help="Organizational coupling per window")
    coupling.set_defaults(handler=cmd_coupling)

    report = commands.add_parser("report", help="Re-render a saved JSON result")
    report.add_argument("--input", required=True)
    report.add_argument("--format", choices=FORMATS)
    report.add_argument("--mask", action=argparse.BooleanOptionalAction, default=None)
    report.add_argument("--top-k", dest="top_k", type=int)
    report.add_argument("--out")
    report.set_defaults(handler=cmd_report)

    aliases = commands.add_parser("suggest-aliases", help="Candidate identity merges for review")
    aliases.add_argument("--commits", required=True)
    aliases.add_argument("--format", choices=FORMATS)
    aliases.add_argument("--out")
    aliases.set_defaults(handler=cmd_suggest_aliases)

    synth = commands.add_parser("synth", help="Write a synthetic scenario with ground truth")
    synth.add_argument("--preset", choices=sorted(PRESETS), required=True)
    synth.add_argument("--seed", type=int)
    synth.add_argument("--out-dir", dest="out_dir", required=True)
    synth.set_defaults(handler=cmd_synth)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Exit codes: 0 success, 1 usage or config error, 2 transient or environment error."""
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:
        # --help
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    configure_logging()
    try:
        return args.handler(args)
    except TransientError as e:
        logger.error("Transient failure: %s", str(e))
        return EXIT_TRANSIENT
    except (AnalysisError, ValidationError, FileNotFoundError) as e:
        logger.error("%s", str(e))
        return EXIT_USAGE
    except OSError as e:
        logger.error("Environment failure: %s", str(e))
        return EXIT_TRANSIENT
