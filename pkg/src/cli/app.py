"""
CommunityPulse command line.

    community-pulse ingest   ARCHIVE            validate and summarize an archive
    community-pulse metrics  ARCHIVE --out DIR  per-window metric CSVs
    community-pulse panel    [ARCHIVE] --out DIR
    community-pulse fit      --out DIR --models null,full
    community-pulse report   --out DIR [--published]
    community-pulse synth    --spec FILE.json --out PATH.jsonl
    community-pulse pipeline ARCHIVE --out DIR

Exit codes: 0 success, 1 fatal error (message on standard error), 2 usage error.
"""

import argparse
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

try:
    from ..core.config_manager import ConfigManager, RunConfig, set_config
    from ..core.errors import CommunityPulseError, ConfigError
    from ..core.export_manager import JSONExporter, get_export_manager
    from ..core.logging_system import get_logger
    from ..modules.ingest import infer_format, serialize_archive, validation_report
    from ..modules.report_generator import run_metadata
    from ..modules.synth import generate_archive, load_specs, full_scale_specs
    from . import __version__, stages
except ImportError:
    from core.config_manager import ConfigManager, RunConfig, set_config
    from core.errors import CommunityPulseError, ConfigError
    from core.export_manager import JSONExporter, get_export_manager
    from core.logging_system import get_logger
    from modules.ingest import infer_format, serialize_archive, validation_report
    from modules.report_generator import run_metadata
    from modules.synth import generate_archive, load_specs, full_scale_specs
    from cli import __version__, stages


# argparse destination -> dot-notation config key
OVERRIDES = {
    "input": "ingest.input_path",
    "format": "ingest.format",
    "snapshot_days": "dynamics.snapshot_days",
    "trail_days": "dynamics.trail_days",
    "launch_age": "dynamics.launch_age",
    "launch_size": "dynamics.launch_size",
    "launch_rule": "dynamics.launch_rule",
    "lexicon_pos": "language.lexicon_pos",
    "lexicon_neg": "language.lexicon_neg",
    "smoothing": "language.smoothing",
    "models": "model.models",
    "criterion": "model.criterion",
    "seasonal_months": "model.seasonal_months",
    "theta_max": "model.theta_max",
    "out": "output.out_dir",
    "dump_graphs": "output.dump_graphs",
    "jobs": "output.jobs",
    "xlsx": "output.xlsx",
}


def _model_list(text: str) -> List[str]:
    items = [part.strip() for part in text.split(",") if part.strip()]
    if not items:
        raise argparse.ArgumentTypeError("expected a comma-separated list of models")
    return items


def _month_list(text: str) -> List[int]:
    try:
        return sorted({int(part) for part in text.split(",") if part.strip()})
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected calendar months such as '12' or '7,12', got '{text}'")


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    group = common.add_argument_group("global options")
    group.add_argument("--config", metavar="FILE", help="JSON run configuration; flags override it")
    group.add_argument("--verbose", action="store_true", help="debug logging")
    group.add_argument("--quiet", action="store_true", help="warnings and errors only")
    group.add_argument("--log-file", metavar="PATH", help="also write the log to PATH")
    group.add_argument("--jobs", type=int, metavar="N", help="worker threads for per-community work")
    group.add_argument("--seed", type=int, help="random seed recorded in the run metadata")
    return common


def _add_input(parser: argparse.ArgumentParser, required: bool = True) -> None:
    parser.add_argument("input", nargs="?", help="post archive (.jsonl or .csv)")
    parser.add_argument("--input", dest="input_flag", metavar="PATH", help="post archive, instead of the positional")
    parser.add_argument("--format", choices=("jsonl", "csv"), help="archive format (default: from extension)")
    parser.set_defaults(input_required=required)


def _merge_input(parser: argparse.ArgumentParser, args: argparse.Namespace) -> None:
    """Fold --input into the positional; exits with status 2 on a missing or doubled archive."""
    flag = getattr(args, "input_flag", None)
    if flag is not None:
        if args.input is not None and args.input != flag:
            parser.error(f"{args.command}: give the archive either positionally or with --input, not both")
        args.input = flag
    if getattr(args, "input_required", False) and args.input is None:
        parser.error(f"{args.command}: the following arguments are required: input (or --input PATH)")


def _add_out_dir(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", metavar="DIR", help="output directory (default: out)")


def _add_metric_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("metric options")
    group.add_argument("--snapshot-days", type=int, metavar="D", help="days between betweenness snapshots")
    group.add_argument("--trail-days", type=int, metavar="D", help="trailing reply window of a snapshot")
    group.add_argument("--launch-age", type=int, metavar="M", help="launch phase: age in months at most M")
    group.add_argument("--launch-size", type=int, metavar="K", help="launch phase: fewer than K members")
    group.add_argument("--launch-rule", choices=("or", "and"), help="combine the launch thresholds")
    group.add_argument("--lexicon-pos", metavar="FILE", help="positive word list")
    group.add_argument("--lexicon-neg", metavar="FILE", help="negative word list")
    group.add_argument("--smoothing", type=float, metavar="ALPHA", help="dictionary add-alpha smoothing")
    group.add_argument("--dump-graphs", metavar="DIR", help="write each window's edge list to DIR")


def _add_model_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("model options")
    group.add_argument("--models", type=_model_list, metavar="LIST",
                       help="presets (null, maturity, language, network, full) or name:cov1+cov2")
    group.add_argument("--criterion", choices=("ml", "reml"), help="estimation criterion (default: ml)")
    group.add_argument("--seasonal-months", type=_month_list, metavar="LIST",
                       help="calendar months given a dummy covariate, e.g. 12")
    group.add_argument("--theta-max", type=float, help="upper bound of the variance-ratio search")


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="community-pulse",
        description="Growth analytics for online communities of practice.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("ingest", parents=[common], help="validate an archive and print a summary")
    _add_input(p)

    p = sub.add_parser("metrics", parents=[common], help="per-window network, dynamics and language metrics")
    _add_input(p)
    _add_out_dir(p)
    _add_metric_flags(p)

    p = sub.add_parser("panel", parents=[common], help="join metrics into the monthly panel")
    _add_input(p, required=False)
    _add_out_dir(p)
    _add_metric_flags(p)
    p.add_argument("--xlsx", action="store_true", default=None, help="also write panel.xlsx")

    p = sub.add_parser("fit", parents=[common], help="fit random-intercept models on the panel")
    _add_out_dir(p)
    p.add_argument("--panel", metavar="FILE", help="panel CSV (default: DIR/panel.csv)")
    _add_model_flags(p)

    p = sub.add_parser("report", parents=[common], help="render correlation and regression tables")
    _add_out_dir(p)
    p.add_argument("--panel", metavar="FILE", help="panel CSV (default: DIR/panel.csv)")
    p.add_argument("--published", action="store_true", help="render the published reference values")

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic archive")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--spec", metavar="FILE", help="JSON list of community specs")
    source.add_argument("--full-scale", action="store_true", help="16 communities, about 20,000 posts")
    p.add_argument("--out", metavar="PATH", required=True, help="archive to write (.jsonl or .csv)")

    p = sub.add_parser("pipeline", parents=[common], help="ingest, metrics, panel, fit and report in one run")
    _add_input(p)
    _add_out_dir(p)
    _add_metric_flags(p)
    _add_model_flags(p)
    p.add_argument("--xlsx", action="store_true", default=None, help="also write panel.xlsx")

    return parser


def configure_logging(args: argparse.Namespace) -> None:
    get_logger().configure(verbose=args.verbose, quiet=args.quiet, log_file=args.log_file)


def resolve_config(args: argparse.Namespace) -> ConfigManager:
    """File configuration (if any) with command-line flags applied on top."""
    if args.config and not Path(args.config).is_file():
        raise ConfigError(f"Config file not found: {args.config}")
    manager = ConfigManager(Path(args.config) if args.config else None)
    overrides = {key: getattr(args, dest, None) for dest, key in OVERRIDES.items()
                 if args.command != "synth" or dest != "out"}
    manager.apply_overrides(overrides)
    if args.seed is not None:
        manager.config.seed = args.seed
    manager.validate()
    set_config(manager)
    return manager


def _metadata(args: argparse.Namespace, config: RunConfig, manager: ConfigManager) -> Dict[str, Any]:
    flags = manager.to_dict()
    flags["command"] = args.command
    return run_metadata(flags, config.seed, config.ingest.input_path or None)


def cmd_ingest(args: argparse.Namespace, manager: ConfigManager) -> int:
    archive = stages.load_archive(manager.config)
    sys.stdout.write(JSONExporter().render(validation_report(archive)))
    return 0


def cmd_metrics(args: argparse.Namespace, manager: ConfigManager) -> int:
    config = manager.config
    archive = stages.load_archive(config)
    result = stages.run_metrics(archive, config)
    for path in stages.write_metrics(result, Path(config.output.out_dir)):
        get_logger().success(f"Wrote {path}", source="cli")
    return 0


def cmd_panel(args: argparse.Namespace, manager: ConfigManager) -> int:
    config = manager.config
    out_dir = Path(config.output.out_dir)
    if config.ingest.input_path:
        metrics = stages.run_metrics(stages.load_archive(config), config)
        stages.write_metrics(metrics, out_dir)
    else:
        metrics = stages.read_metrics(out_dir)
    rows, factor = stages.run_panel(metrics)
    for path in stages.write_panel(rows, factor, out_dir, config.output.xlsx):
        get_logger().success(f"Wrote {path}", source="cli")
    return 0


def cmd_fit(args: argparse.Namespace, manager: ConfigManager) -> int:
    config = manager.config
    out_dir = Path(config.output.out_dir)
    fits = stages.run_fit(stages.load_panel(out_dir, args.panel), config)
    for path in stages.write_fits(fits, out_dir):
        get_logger().success(f"Wrote {path}", source="cli")
    return 0


def cmd_report(args: argparse.Namespace, manager: ConfigManager) -> int:
    config = manager.config
    documents = stages.run_report(Path(config.output.out_dir), _metadata(args, config, manager),
                                  published=args.published, panel_path=args.panel)
    for path in documents.files:
        get_logger().success(f"Wrote {path}", source="cli")
    return 0


def cmd_synth(args: argparse.Namespace, manager: ConfigManager) -> int:
    config = manager.config
    specs = load_specs(args.spec) if args.spec else full_scale_specs(config.seed)
    archive = generate_archive(specs, jobs=config.output.jobs)
    fmt = infer_format(args.out)
    written = get_export_manager().export(serialize_archive(archive, fmt), args.out, "txt").ensure()
    get_logger().success(f"Wrote {len(archive)} posts to {args.out} ({written.size} bytes)", source="cli")
    return 0


def cmd_pipeline(args: argparse.Namespace, manager: ConfigManager) -> int:
    config = manager.config
    workflow = stages.build_pipeline(config, _metadata(args, config, manager))
    workflow.run({})
    failed = workflow.failed_step()
    if failed is not None:
        if isinstance(failed.result.error, CommunityPulseError):
            raise failed.result.error
        raise CommunityPulseError(f"{failed.name}: {failed.result.message}")
    return 0


COMMANDS: Dict[str, Callable[[argparse.Namespace, ConfigManager], int]] = {
    "ingest": cmd_ingest,
    "metrics": cmd_metrics,
    "panel": cmd_panel,
    "fit": cmd_fit,
    "report": cmd_report,
    "synth": cmd_synth,
    "pipeline": cmd_pipeline,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one subcommand and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _merge_input(parser, args)
    except SystemExit as e:
        return int(e.code) if e.code is not None else 0

    logger = get_logger()
    logger.clear()
    configure_logging(args)
    try:
        manager = resolve_config(args)
        code = COMMANDS[args.command](args, manager)
        if logger.problem_count():
            logger.info(f"Finished with {logger.problem_count()} warning(s)", source="cli")
        return code
    except CommunityPulseError as e:
        sys.stderr.write(f"error: {e}\n")
        return 1
    finally:
        logger.close()
