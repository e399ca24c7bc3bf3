"""
Report Generator Module - Correlation and regression tables in several formats.
Renders plain text, Markdown and JSON documents from the panel, the fitted
models and the run metadata. Documents carry no wall-clock time so reruns
are byte-identical.
"""

import json
import math
from dataclasses import dataclass, field
from importlib import metadata as importlib_metadata
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .mlm import INTERCEPT, ModelFit, variance_icc
from .panel import (CorrelationReport, MaturityFactor, PanelRow, TABLE_VARIABLES,
                    correlation_matrix, describe, p_from_r, significance_stars)

try:
    from ..core.export_manager import JSONExporter, get_export_manager
    from ..utils.helpers import calculate_file_hash
except ImportError:
    from core.export_manager import JSONExporter, get_export_manager
    from utils.helpers import calculate_file_hash


PUBLISHED_TABLES = Path(__file__).resolve().parent.parent / "resources" / "published_tables.json"

CORRELATION_STARS = (0.01, 0.05)
REGRESSION_STARS = (0.01, 0.1)

LABELS = {
    INTERCEPT: "Constant",
    "joiners": "Joiners",
    "age": "Age",
    "size": "Size",
    "launch_phase": "Launch Phase",
    "emotionality": "Emotionality",
    "sentiment": "Sentiment",
    "complexity": "Complexity",
    "past_activity": "Past Activity",
    "group_betweenness": "Group Betweenness Centrality",
    "rotating_leadership": "Rotating Leadership",
    "maturity": "Maturity",
}

DEPENDENCIES = ("numpy", "scipy", "pandas", "networkx", "openpyxl")


def label(name: str) -> str:
    return LABELS.get(name, name.replace("_", " ").title())


def format_r(r: Optional[float]) -> str:
    """Three decimals without the leading zero: -0.17 -> '-.170'."""
    if r is None or math.isnan(r):
        return "n/a"
    if r == 1.0:
        return "1"
    text = f"{r:.3f}"
    return text.replace("0.", ".", 1)


def format_percent(value: Optional[float]) -> str:
    return "" if value is None else f"{value:.2f}%"


@dataclass
class RegressionColumn:
    """One model column: coefficient cells with stars, variances and counts."""
    name: str
    coefficients: Dict[str, Tuple[float, str]]
    sigma2_u: float
    sigma2_e: float
    n_obs: int
    n_groups: int
    is_null: bool = False
    change: Optional[Tuple[Optional[float], Optional[float]]] = None

    @classmethod
    def from_fit(cls, fit: ModelFit) -> "RegressionColumn":
        cells = {name: (fit.coefficients[name], significance_stars(fit.p_values[name], REGRESSION_STARS))
                 for name in fit.coefficients}
        return cls(fit.spec.name, cells, fit.sigma2_u, fit.sigma2_e, fit.n_obs, fit.n_groups,
                   is_null=not fit.spec.covariates)

    @classmethod
    def from_fit_dict(cls, data: Dict[str, Any]) -> "RegressionColumn":
        """Column from a fit JSON written by the fit stage."""
        coefficients = data["coefficients"]
        cells = {name: (coefficients[name]["estimate"],
                        significance_stars(coefficients[name]["p_value"], REGRESSION_STARS))
                 for name in [INTERCEPT] + list(data["covariates"])}
        return cls(data["model"], cells, data["variance_level2"], data["variance_level1"],
                   data["n_obs"], data["n_groups"], is_null=not data["covariates"])

    @classmethod
    def from_published(cls, data: Dict[str, Any]) -> "RegressionColumn":
        change = None
        if "change_level2" in data:
            change = (data["change_level2"], data["change_level1"])
        return cls(
            name=data["name"],
            coefficients={k: (float(v[0]), v[1]) for k, v in data["coefficients"].items()},
            sigma2_u=float(data["variance_level2"]),
            sigma2_e=float(data["variance_level1"]),
            n_obs=int(data["n_obs"]),
            n_groups=int(data["n_groups"]),
            is_null=list(data["coefficients"]) == [INTERCEPT],
            change=change,
        )


def _percent(value: float, reference: float) -> Optional[float]:
    return None if reference == 0 else 100.0 * (value - reference) / reference


def regression_rows(columns: Sequence[RegressionColumn]) -> List[List[str]]:
    """
    Table body in the published row order: constant, covariates, variances,
    ICC of the null model, variance change against it, N and groups.
    """
    covariates: List[str] = []
    for column in columns:
        for name in column.coefficients:
            if name != INTERCEPT and name not in covariates:
                covariates.append(name)

    null = next((c for c in columns if c.is_null), None)
    rows: List[List[str]] = []
    for name in [INTERCEPT] + covariates:
        cells = []
        for column in columns:
            cell = column.coefficients.get(name)
            cells.append("" if cell is None else f"{cell[0]:.3f}{cell[1]}")
        rows.append([label(name)] + cells)

    rows.append(["Variance Level 2"] + [f"{c.sigma2_u:.3f}" for c in columns])
    rows.append(["Variance Level 1"] + [f"{c.sigma2_e:.3f}" for c in columns])
    rows.append(["ICC"] + [format_percent(100.0 * variance_icc(c.sigma2_u, c.sigma2_e)) if c.is_null else ""
                           for c in columns])

    changes = []
    for column in columns:
        if column.is_null or null is None:
            changes.append((None, None))
        elif column.change is not None:
            changes.append(column.change)
        else:
            changes.append((_percent(column.sigma2_u, null.sigma2_u), _percent(column.sigma2_e, null.sigma2_e)))
    rows.append(["Change in variance Lev. 2"] + [format_percent(c[0]) for c in changes])
    rows.append(["Change in variance Lev. 1"] + [format_percent(c[1]) for c in changes])
    rows.append(["N"] + [str(c.n_obs) for c in columns])
    rows.append(["Groups"] + [str(c.n_groups) for c in columns])
    return rows


def correlation_rows(report: CorrelationReport) -> List[List[str]]:
    """Lower-triangular cells with significance stars."""
    rows = []
    for i, name in enumerate(report.variables):
        cells = []
        for j in range(i + 1):
            if i == j:
                cells.append("1" if not np.isnan(report.r[i, i]) else "n/a")
                continue
            r, p, _ = report.cell(name, report.variables[j])
            cells.append(format_r(r) + significance_stars(p, CORRELATION_STARS))
        rows.append([f"{i + 1} {label(name)}"] + cells + [""] * (len(report.variables) - i - 1))
    return rows


def _aligned(header: Sequence[str], rows: Sequence[Sequence[str]]) -> List[str]:
    widths = [max(len(str(r[k])) for r in [header, *rows]) for k in range(len(header))]
    lines = ["  ".join(str(cell).ljust(widths[0]) if k == 0 else str(cell).rjust(widths[k])
                       for k, cell in enumerate(row)).rstrip()
             for row in [header, *rows]]
    lines.insert(1, "-" * len(lines[0]))
    return lines


def _markdown(header: Sequence[str], rows: Sequence[Sequence[str]]) -> List[str]:
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    lines.extend("| " + " | ".join(row) + " |" for row in rows)
    return lines


def _correlation_n(report: CorrelationReport) -> str:
    off_diagonal = [int(report.n[i, j]) for i in range(len(report.variables)) for j in range(i)]
    if not off_diagonal:
        return "N=0"
    low, high = min(off_diagonal), max(off_diagonal)
    return f"N={low}" if low == high else f"N={low}..{high}"


def render_correlation_table(report: CorrelationReport, markdown: bool = False) -> str:
    """Correlation table with stars and legend '**p<0.01; *p<0.05.'."""
    header = [""] + [str(k + 1) for k in range(len(report.variables))]
    rows = correlation_rows(report)
    body = _markdown(header, rows) if markdown else _aligned(header, rows)
    return "\n".join([f"Correlation coefficients ({_correlation_n(report)})", ""] + body
                     + ["", "**p<0.01; *p<0.05."])


def render_regression_table(columns: Sequence[Union[RegressionColumn, ModelFit]], markdown: bool = False) -> str:
    """Regression table with legend '**p<0.01; *p<0.1.'."""
    columns = [c if isinstance(c, RegressionColumn) else RegressionColumn.from_fit(c) for c in columns]
    header = ["Variable"] + [c.name for c in columns]
    rows = regression_rows(columns)
    body = _markdown(header, rows) if markdown else _aligned(header, rows)
    return "\n".join(["Determinants of community growth", ""] + body + ["", "**p<0.01; *p<0.1."])


def render_maturity(factor: Union[MaturityFactor, Dict[str, Any]]) -> str:
    if isinstance(factor, MaturityFactor):
        loadings, explained = factor.loadings, factor.variance_explained
    else:
        loadings, explained = factor["loadings"], factor["variance_explained"]
    parts = ", ".join(f"{label(k)} {v:.2f}" for k, v in loadings.items())
    return f"Maturity factor: one component, {explained:.0%} of variance; loadings {parts}"


def load_published(path: Union[str, Path] = PUBLISHED_TABLES) -> Dict[str, Any]:
    with open(path, 'r', encoding='utf-8') as f:
        return json.load(f)


def published_correlations(data: Optional[Dict[str, Any]] = None) -> CorrelationReport:
    """CorrelationReport rebuilt from published r values; p follows from r and n."""
    data = (data or load_published())["correlations"]
    variables = list(data["variables"])
    n = int(data["n"])
    k = len(variables)
    r = np.eye(k)
    p = np.zeros((k, k))
    for i, row in enumerate(data["lower_triangle"]):
        for j, value in enumerate(row):
            r[i, j] = r[j, i] = value
            p[i, j] = p[j, i] = p_from_r(value, n)
    return CorrelationReport(variables, r, p, np.full((k, k), n, dtype=int))


def published_columns(data: Optional[Dict[str, Any]] = None) -> List[RegressionColumn]:
    return [RegressionColumn.from_published(m) for m in (data or load_published())["models"]]


def package_versions() -> Dict[str, str]:
    versions = {}
    for name in ("community-pulse",) + DEPENDENCIES:
        try:
            versions[name] = importlib_metadata.version(name)
        except importlib_metadata.PackageNotFoundError:
            versions[name] = "not installed"
    return versions


def run_metadata(flags: Dict[str, Any], seed: int, input_path: Optional[Union[str, Path]] = None) -> Dict[str, Any]:
    """Flags, versions, seed and the SHA-256 digest of the input file."""
    digest = None
    if input_path and Path(input_path).is_file():
        digest = calculate_file_hash(input_path, "sha256")
    return {
        "flags": {k: flags[k] for k in sorted(flags)},
        "versions": package_versions(),
        "seed": seed,
        "input": str(input_path) if input_path else None,
        "input_sha256": digest,
    }


@dataclass
class ReportDocuments:
    text: str
    markdown: str
    json: str
    files: List[str] = field(default_factory=list)


class ReportGenerator:
    """
    Build the report in text, Markdown and JSON from the same content.
    """

    def __init__(self, title: str = "CommunityPulse Report"):
        self.title = title

    def build(self, correlations: CorrelationReport, columns: Sequence[RegressionColumn],
              metadata: Dict[str, Any], descriptives: Optional[Dict[str, Any]] = None,
              maturity: Optional[Union[MaturityFactor, Dict[str, Any]]] = None,
              fits: Sequence[Dict[str, Any]] = ()) -> ReportDocuments:
        return ReportDocuments(
            text=self._build_text(correlations, columns, metadata, descriptives, maturity),
            markdown=self._build_markdown(correlations, columns, metadata, descriptives, maturity),
            json=self._build_json(correlations, columns, metadata, descriptives, maturity, fits),
        )

    def write(self, documents: ReportDocuments, out_dir: Union[str, Path], stem: str = "report") -> List[str]:
        """Write report.txt, report.md and report.json atomically."""
        manager = get_export_manager()
        out = Path(out_dir)
        written = []
        for suffix, content in (("txt", documents.text), ("md", documents.markdown)):
            result = manager.export(content, str(out / f"{stem}.{suffix}"), suffix).ensure()
            written.append(result.file_path)
        target = out / f"{stem}.json"
        manager.exporters["txt"].export(documents.json, str(target)).ensure()
        written.append(str(target))
        documents.files = written
        return written

    def _descriptive_lines(self, descriptives: Dict[str, Any]) -> List[List[str]]:
        def cell(value, digits=3):
            return "" if value is None else f"{value:.{digits}f}"
        return [[label(name), str(d["n"]), cell(d["mean"]), cell(d["sd"]), cell(d["min"]), cell(d["max"])]
                for name, d in descriptives.items()]

    def _build_text(self, correlations, columns, metadata, descriptives, maturity) -> str:
        lines = ["=" * 80, f" {self.title}", "=" * 80, ""]
        if descriptives:
            lines += ["-" * 40, "DESCRIPTIVE STATISTICS", "-" * 40]
            lines += _aligned(["Variable", "N", "Mean", "SD", "Min", "Max"], self._descriptive_lines(descriptives))
            lines.append("")
        lines += ["-" * 40, "CORRELATIONS", "-" * 40, render_correlation_table(correlations), ""]
        if maturity is not None:
            lines += [render_maturity(maturity), ""]
        if columns:
            lines += ["-" * 40, "MULTILEVEL MODELS", "-" * 40, render_regression_table(columns), ""]
        lines += ["-" * 40, "RUN METADATA", "-" * 40]
        lines += [f"  {key}: {json.dumps(value, sort_keys=True)}" for key, value in sorted(metadata.items())]
        lines += ["", "=" * 80]
        return "\n".join(lines) + "\n"

    def _build_markdown(self, correlations, columns, metadata, descriptives, maturity) -> str:
        lines = [f"# {self.title}", ""]
        if descriptives:
            lines += ["## Descriptive Statistics", ""]
            lines += _markdown(["Variable", "N", "Mean", "SD", "Min", "Max"], self._descriptive_lines(descriptives))
            lines.append("")
        lines += ["## Correlations", "", render_correlation_table(correlations, markdown=True), ""]
        if maturity is not None:
            lines += [render_maturity(maturity), ""]
        if columns:
            lines += ["## Multilevel Models", "", render_regression_table(columns, markdown=True), ""]
        lines += ["## Run Metadata", "", "```json", json.dumps(metadata, indent=2, sort_keys=True), "```"]
        return "\n".join(lines) + "\n"

    def _build_json(self, correlations, columns, metadata, descriptives, maturity, fits) -> str:
        if isinstance(maturity, MaturityFactor):
            maturity = {"loadings": maturity.loadings, "variance_explained": maturity.variance_explained}
        document = {
            "title": self.title,
            "metadata": metadata,
            "descriptives": descriptives or {},
            "correlations": correlations.to_dict(),
            "maturity": maturity,
            "regression_table": {
                "columns": [c.name for c in columns],
                "rows": regression_rows(columns) if columns else [],
            },
            "fits": list(fits),
        }
        return JSONExporter().render(document)


def build_report(panel: Sequence[PanelRow], fits: Sequence[ModelFit], metadata: Dict[str, Any],
                 maturity: Optional[MaturityFactor] = None,
                 variables: Sequence[str] = TABLE_VARIABLES) -> ReportDocuments:
    """Report documents for an analysed panel."""
    return ReportGenerator().build(
        correlations=correlation_matrix(panel, variables),
        columns=[RegressionColumn.from_fit(f) for f in fits],
        metadata=metadata,
        descriptives=describe(panel, variables),
        maturity=maturity,
        fits=[f.to_dict() for f in fits],
    )


def build_published_report(metadata: Dict[str, Any]) -> ReportDocuments:
    """Report documents rendering the published reference values."""
    data = load_published()
    return ReportGenerator("CommunityPulse Report (published reference values)").build(
        correlations=published_correlations(data),
        columns=published_columns(data),
        metadata=metadata,
        maturity=data["maturity"],
    )
