"""
Pipeline stages shared by the subcommands and the pipeline workflow.

Every stage reads its inputs from files written by the previous stage (or
receives them in memory inside one pipeline run) and writes its artifacts
atomically into the output directory.
"""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

try:
    from ..core.config_manager import RunConfig
    from ..core.errors import ConfigError, PanelError
    from ..core.export_manager import CSVExporter, JSONExporter, get_export_manager
    from ..core.logging_system import get_logger
    from ..core.workflow import StepResult, WorkflowManager, WorkflowStep, run_parallel
    from ..modules.dynamics import DynamicsRow, compute_dynamics
    from ..modules.ingest import Archive, post_index, read_archive, window_by_month
    from ..modules.language import (LanguageRow, LexiconScorer, archive_dictionary, compute_language,
                                    default_lexicon, load_lexicon)
    from ..modules.mlm import ModelFit, fit_models, parse_model_list, seasonal_covariates
    from ..modules.netgraph import NetworkRow, dump_edge_list, graph_metrics
    from ..modules.panel import (MaturityFactor, PanelRow, apply_maturity, assemble_panel, correlation_matrix, describe,
                                 export_panel_xlsx, maturity_factor, panel_frame, read_panel_csv,
                                 read_rows_csv, write_panel_csv)
    from ..modules.report_generator import (RegressionColumn, ReportDocuments, ReportGenerator,
                                            build_published_report, render_regression_table)
    from ..utils.helpers import format_size, safe_path, sanitize_filename
except ImportError:
    from core.config_manager import RunConfig
    from core.errors import ConfigError, PanelError
    from core.export_manager import CSVExporter, JSONExporter, get_export_manager
    from core.logging_system import get_logger
    from core.workflow import StepResult, WorkflowManager, WorkflowStep, run_parallel
    from modules.dynamics import DynamicsRow, compute_dynamics
    from modules.ingest import Archive, post_index, read_archive, window_by_month
    from modules.language import (LanguageRow, LexiconScorer, archive_dictionary, compute_language,
                                  default_lexicon, load_lexicon)
    from modules.mlm import ModelFit, fit_models, parse_model_list, seasonal_covariates
    from modules.netgraph import NetworkRow, dump_edge_list, graph_metrics
    from modules.panel import (MaturityFactor, PanelRow, apply_maturity, assemble_panel, correlation_matrix, describe,
                               export_panel_xlsx, maturity_factor, panel_frame, read_panel_csv,
                               read_rows_csv, write_panel_csv)
    from modules.report_generator import (RegressionColumn, ReportDocuments, ReportGenerator,
                                          build_published_report, render_regression_table)
    from utils.helpers import format_size, safe_path, sanitize_filename


NETWORK_CSV = "metrics_network.csv"
DYNAMICS_CSV = "metrics_dynamics.csv"
LANGUAGE_CSV = "metrics_language.csv"
PANEL_CSV = "panel.csv"
PANEL_XLSX = "panel.xlsx"
MATURITY_JSON = "maturity.json"
FITS_JSON = "fits.json"
FITS_TXT = "fits.txt"


@dataclass
class MetricsResult:
    """Per-window rows of the three metric producers."""
    network: List[NetworkRow]
    dynamics: List[DynamicsRow]
    language: List[LanguageRow]


def load_archive(config: RunConfig) -> Archive:
    """Read the configured archive and log its diagnostics."""
    path = config.ingest.input_path
    if not path:
        raise ConfigError("No input archive given")
    resolved = safe_path(path)
    if not resolved.is_file():
        raise ConfigError(f"Input archive not found: {path}")

    logger = get_logger()
    logger.info(f"Reading {resolved.name} ({format_size(resolved.stat().st_size)})", source="ingest")
    archive = read_archive(resolved, config.ingest.format or None)
    for diagnostic in archive.diagnostics:
        logger.warning(diagnostic.formatted(), source="ingest")
    return archive


def configured_scorer(config: RunConfig) -> LexiconScorer:
    lang = config.language
    if bool(lang.lexicon_pos) != bool(lang.lexicon_neg):
        raise ConfigError("--lexicon-pos and --lexicon-neg must be given together")
    if lang.lexicon_pos:
        return LexiconScorer(load_lexicon(lang.lexicon_pos, lang.lexicon_neg))
    return LexiconScorer(default_lexicon())


def run_metrics(archive: Archive, config: RunConfig) -> MetricsResult:
    """Network, dynamics and language rows for every community-month window."""
    logger = get_logger()
    windows = window_by_month(archive)
    index = post_index(archive)
    jobs = config.output.jobs

    with logger.timed("network metrics", source="metrics"):
        measured = run_parallel(lambda w: graph_metrics(w, index), windows, jobs)
    network = [row for row, _ in measured]
    if config.output.dump_graphs:
        target = Path(config.output.dump_graphs)
        for row, graph in measured:
            dump_edge_list(graph, target / f"{sanitize_filename(row.community_id)}_{row.month}.csv")
        logger.info(f"Dumped {len(measured)} edge lists", source="metrics", dir=target)

    with logger.timed("dynamics", source="metrics"):
        dynamics = compute_dynamics(archive, windows, config.dynamics, jobs)
    with logger.timed("language metrics", source="metrics"):
        dictionary = archive_dictionary(archive, config.language.smoothing)
        language = compute_language(windows, dictionary, configured_scorer(config), jobs)
    return MetricsResult(network, dynamics, language)


def write_metrics(result: MetricsResult, out_dir: Path) -> List[str]:
    exporter = CSVExporter()
    written = []
    for name, rows, row_type in ((NETWORK_CSV, result.network, NetworkRow),
                                 (DYNAMICS_CSV, result.dynamics, DynamicsRow),
                                 (LANGUAGE_CSV, result.language, LanguageRow)):
        path = out_dir / name
        exporter.export(rows, str(path), columns=_columns(row_type)).ensure()
        written.append(str(path))
    return written


def _columns(row_type: type) -> List[str]:
    return list(row_type.__dataclass_fields__)


def read_metrics(out_dir: Path) -> MetricsResult:
    """Metric rows re-ingested from the metrics stage CSVs."""
    for name in (NETWORK_CSV, DYNAMICS_CSV, LANGUAGE_CSV):
        if not (out_dir / name).is_file():
            raise PanelError(f"Missing {out_dir / name}; run the metrics stage first")
    return MetricsResult(
        network=read_rows_csv(out_dir / NETWORK_CSV, NetworkRow),
        dynamics=read_rows_csv(out_dir / DYNAMICS_CSV, DynamicsRow),
        language=read_rows_csv(out_dir / LANGUAGE_CSV, LanguageRow),
    )


def run_panel(metrics: MetricsResult) -> Tuple[List[PanelRow], Optional[MaturityFactor]]:
    """Joined panel with the maturity column; a degenerate factor leaves it missing."""
    rows = assemble_panel(metrics.dynamics, metrics.language, metrics.network)
    try:
        factor = maturity_factor(rows)
    except PanelError as e:
        get_logger().warning(f"Maturity factor not computed: {e}", source="panel")
        return rows, None
    return apply_maturity(rows, factor), factor


def write_panel(rows: List[PanelRow], factor: Optional[MaturityFactor], out_dir: Path,
                xlsx: bool = False) -> List[str]:
    written = [str(out_dir / PANEL_CSV)]
    write_panel_csv(rows, out_dir / PANEL_CSV)
    maturity_path = out_dir / MATURITY_JSON
    if factor is not None:
        JSONExporter().export({"loadings": factor.loadings, "variance_explained": factor.variance_explained,
                               "eigenvalues": list(factor.eigenvalues), "rows": len(factor.keys)},
                              str(maturity_path)).ensure()
        written.append(str(maturity_path))
    elif maturity_path.exists():
        maturity_path.unlink()
    if xlsx:
        result = export_panel_xlsx(rows, correlation_matrix(rows), out_dir / PANEL_XLSX).ensure()
        written.append(result.file_path)
    return written


def load_panel(out_dir: Path, panel_path: Optional[str] = None) -> List[PanelRow]:
    path = Path(panel_path) if panel_path else out_dir / PANEL_CSV
    if not path.is_file():
        raise PanelError(f"Missing panel {path}; run the panel stage first")
    return read_panel_csv(path)


def run_fit(rows: List[PanelRow], config: RunConfig) -> List[ModelFit]:
    """Fit the configured models; seasonal dummies are added when requested."""
    model = config.model
    specs = parse_model_list(",".join(model.models), model.seasonal_months)
    frame = seasonal_covariates(rows, model.seasonal_months) if model.seasonal_months else panel_frame(rows)
    return fit_models(frame, specs, model.criterion, model.theta_max, model.tolerance, config.output.jobs)


def write_fits(fits: List[ModelFit], out_dir: Path) -> List[str]:
    exporter = JSONExporter()
    written = []
    for fit in fits:
        path = out_dir / f"fit_{sanitize_filename(fit.spec.name)}.json"
        exporter.export(fit.to_dict(), str(path)).ensure()
        written.append(str(path))
    exporter.export([fit.to_dict() for fit in fits], str(out_dir / FITS_JSON)).ensure()
    get_export_manager().export(render_regression_table(fits), str(out_dir / FITS_TXT), "txt").ensure()
    return written + [str(out_dir / FITS_JSON), str(out_dir / FITS_TXT)]


def read_fits(out_dir: Path) -> List[Dict[str, Any]]:
    path = out_dir / FITS_JSON
    if not path.is_file():
        return []
    with open(path, 'r', encoding='utf-8') as f:
        return json.load(f)


def run_report(out_dir: Path, metadata: Dict[str, Any], published: bool = False,
               panel_path: Optional[str] = None) -> ReportDocuments:
    """Report documents from the panel and fit artifacts, written to out_dir."""
    if published:
        documents = build_published_report(metadata)
    else:
        rows = load_panel(out_dir, panel_path)
        fits = read_fits(out_dir)
        maturity = None
        if (out_dir / MATURITY_JSON).is_file():
            with open(out_dir / MATURITY_JSON, 'r', encoding='utf-8') as f:
                maturity = json.load(f)
        documents = ReportGenerator().build(
            correlations=correlation_matrix(rows),
            columns=[RegressionColumn.from_fit_dict(f) for f in fits],
            metadata=metadata,
            descriptives=describe(rows),
            maturity=maturity,
            fits=fits,
        )
    ReportGenerator().write(documents, out_dir)
    return documents


def build_pipeline(config: RunConfig, metadata: Dict[str, Any]) -> WorkflowManager:
    """ingest -> metrics -> panel -> fit -> report as workflow steps over a shared context."""
    out_dir = Path(config.output.out_dir)
    workflow = WorkflowManager("CommunityPulse pipeline")

    def ingest(context: Dict[str, Any]) -> StepResult:
        context["archive"] = load_archive(config)
        archive = context["archive"]
        return StepResult(True, f"{len(archive)} posts, {len(archive.communities)} communities")

    def metrics(context: Dict[str, Any]) -> StepResult:
        context["metrics"] = run_metrics(context["archive"], config)
        files = write_metrics(context["metrics"], out_dir)
        return StepResult(True, f"{len(context['metrics'].network)} windows", data=files)

    def panel(context: Dict[str, Any]) -> StepResult:
        rows, factor = run_panel(context["metrics"])
        context["panel"] = rows
        files = write_panel(rows, factor, out_dir, config.output.xlsx)
        return StepResult(True, f"{len(rows)} rows", data=files)

    def fit(context: Dict[str, Any]) -> StepResult:
        context["fits"] = run_fit(context["panel"], config)
        files = write_fits(context["fits"], out_dir)
        return StepResult(True, f"{len(context['fits'])} models", data=files)

    def report(context: Dict[str, Any]) -> StepResult:
        documents = run_report(out_dir, metadata)
        return StepResult(True, f"{len(documents.files)} documents", data=documents.files)

    workflow.add_step(WorkflowStep("ingest", "Ingest archive", ingest))
    workflow.add_step(WorkflowStep("metrics", "Compute window metrics", metrics, dependencies=["ingest"]))
    workflow.add_step(WorkflowStep("panel", "Assemble panel", panel, dependencies=["metrics"]))
    workflow.add_step(WorkflowStep("fit", "Fit mixed models", fit, dependencies=["panel"]))
    workflow.add_step(WorkflowStep("report", "Render report", report, dependencies=["fit"]))
    return workflow
