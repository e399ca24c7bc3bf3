"""
Panel Module - Monthly community panel and descriptive statistics.

Joins the dynamics, language and network rows on (community, month), computes
pairwise-complete Pearson correlations with two-tailed p-values and extracts
the single-component maturity factor from age, size and launch phase.
Missing-value handling for every later stage is decided here.
"""

import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union, get_args, get_type_hints

import numpy as np
import pandas as pd
from scipy import stats

from .dynamics import DynamicsRow
from .language import LanguageRow
from .netgraph import NetworkRow

try:
    from ..core.errors import ConsistencyError, DegenerateVariableError, PanelError
    from ..core.export_manager import CSVExporter, ExportResult, XLSXExporter
    from ..core.logging_system import get_logger
except ImportError:
    from core.errors import ConsistencyError, DegenerateVariableError, PanelError
    from core.export_manager import CSVExporter, ExportResult, XLSXExporter
    from core.logging_system import get_logger


PANEL_COLUMNS = (
    "community_id", "month", "joiners", "age", "size", "launch_phase",
    "emotionality", "sentiment", "complexity", "past_activity",
    "group_betweenness", "rotating_leadership", "maturity", "december",
)

# Correlation table order: outcome first, then the ten panel variables.
TABLE_VARIABLES = (
    "joiners", "age", "size", "launch_phase", "emotionality", "sentiment",
    "complexity", "past_activity", "group_betweenness", "rotating_leadership",
)

MATURITY_INPUTS = ("age", "size", "launch_phase")


@dataclass(frozen=True)
class PanelRow:
    """One community-month of the analysis panel."""
    community_id: str
    month: str
    joiners: Optional[int] = None
    age: Optional[int] = None
    size: Optional[int] = None
    launch_phase: Optional[int] = None
    emotionality: Optional[float] = None
    sentiment: Optional[float] = None
    complexity: Optional[float] = None
    past_activity: Optional[int] = None
    group_betweenness: Optional[float] = None
    rotating_leadership: Optional[float] = None
    maturity: Optional[float] = None
    december: int = 0

    def value(self, name: str) -> Optional[float]:
        return getattr(self, name)


@dataclass
class CorrelationReport:
    """Pairwise-complete Pearson correlations; undefined cells are NaN."""
    variables: List[str]
    r: np.ndarray
    p: np.ndarray
    n: np.ndarray

    def cell(self, a: str, b: str) -> Tuple[Optional[float], Optional[float], int]:
        i, j = self.variables.index(a), self.variables.index(b)
        r, p = self.r[i, j], self.p[i, j]
        return (None if np.isnan(r) else float(r), None if np.isnan(p) else float(p), int(self.n[i, j]))

    def to_dict(self) -> Dict:
        return {"variables": list(self.variables), "r": self.r.tolist(),
                "p": self.p.tolist(), "n": self.n.astype(int).tolist()}


@dataclass
class MaturityFactor:
    """First principal component of the age/size/launch correlation matrix."""
    variables: Tuple[str, ...]
    loadings: Dict[str, float]
    variance_explained: float
    eigenvalues: Tuple[float, ...]
    keys: List[Tuple[str, str]]
    scores: np.ndarray

    def score_map(self) -> Dict[Tuple[str, str], float]:
        return {key: float(s) for key, s in zip(self.keys, self.scores)}


def _by_key(rows: Iterable, label: str) -> Dict[Tuple[str, str], object]:
    keyed = {}
    for row in rows:
        key = (row.community_id, row.month)
        if key in keyed:
            raise ConsistencyError(f"Duplicate {label} row for {key[0]} {key[1]}")
        keyed[key] = row
    return keyed


def assemble_panel(dynamics_rows: Sequence[DynamicsRow], language_rows: Sequence[LanguageRow],
                   network_rows: Sequence[NetworkRow]) -> List[PanelRow]:
    """
    Full outer join of the metric rows on (community, month), sorted.

    Raises:
        ConsistencyError: the producers cover different community sets.
    """
    dynamics = _by_key(dynamics_rows, "dynamics")
    language = _by_key(language_rows, "language")
    network = _by_key(network_rows, "network")

    communities = {label: {k[0] for k in keyed} for label, keyed in
                   (("dynamics", dynamics), ("language", language), ("network", network))}
    if len({frozenset(c) for c in communities.values()}) > 1:
        details = "; ".join(f"{label}: {', '.join(sorted(c)) or '-'}" for label, c in communities.items())
        raise ConsistencyError(f"Metric producers disagree on communities ({details})")

    rows: List[PanelRow] = []
    for key in sorted(set(dynamics) | set(language) | set(network)):
        d, lang, net = dynamics.get(key), language.get(key), network.get(key)
        rows.append(PanelRow(
            community_id=key[0],
            month=key[1],
            joiners=d.joiners if d else None,
            age=d.age if d else None,
            size=d.size if d else None,
            launch_phase=int(d.launch_phase) if d else None,
            emotionality=lang.emotionality if lang else None,
            sentiment=lang.sentiment if lang else None,
            complexity=lang.complexity if lang else None,
            past_activity=d.past_activity if d else None,
            group_betweenness=net.group_betweenness if net else None,
            rotating_leadership=d.rotating_leadership if d else None,
            december=1 if key[1].endswith("-12") else 0,
        ))
    get_logger().info(f"Assembled panel: {len(rows)} rows, {len(communities['dynamics'])} communities",
                      source="panel")
    return rows


def panel_frame(rows: Sequence[PanelRow]) -> pd.DataFrame:
    """Panel as a DataFrame in fixed column order; missing values are NaN."""
    frame = pd.DataFrame([asdict(r) for r in rows], columns=list(PANEL_COLUMNS))
    for column in PANEL_COLUMNS[2:]:
        frame[column] = pd.to_numeric(frame[column], errors="coerce").astype(float)
    return frame


def _column(rows: Union[Sequence[PanelRow], pd.DataFrame], name: str) -> np.ndarray:
    if isinstance(rows, pd.DataFrame):
        return rows[name].to_numpy(dtype=float)
    return np.array([np.nan if r.value(name) is None else float(r.value(name)) for r in rows], dtype=float)


def pearson(x: Sequence[float], y: Sequence[float]) -> Optional[Tuple[float, float]]:
    """
    Product-moment correlation and two-tailed p-value over complete pairs.

    Returns None (undefined correlation) with fewer than 3 complete pairs or
    when either variable has zero variance.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    mask = np.isfinite(x) & np.isfinite(y)
    x, y = x[mask], y[mask]
    n = len(x)
    if n < 3:
        return None

    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        return None

    r = float(dx @ dy) / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    return r, p_from_r(r, n)


def p_from_r(r: float, n: int) -> float:
    """Two-tailed p-value of a correlation r over n pairs (t test, n - 2 df)."""
    if n < 3:
        raise ValueError("p-value of a correlation needs n >= 3")
    if abs(r) >= 1.0:
        return 0.0
    t = r * math.sqrt((n - 2) / (1.0 - r * r))
    # Student t tail is evaluated through the regularized incomplete beta
    return min(1.0, float(2.0 * stats.t.sf(abs(t), n - 2)))


def significance_stars(p: Optional[float], thresholds: Tuple[float, float] = (0.01, 0.05)) -> str:
    """'**' below the first threshold, '*' below the second, else ''."""
    if p is None or (isinstance(p, float) and math.isnan(p)):
        return ""
    strong, weak = thresholds
    if p < strong:
        return "**"
    if p < weak:
        return "*"
    return ""


def correlation_matrix(rows: Union[Sequence[PanelRow], pd.DataFrame],
                       variables: Sequence[str] = TABLE_VARIABLES) -> CorrelationReport:
    """Pairwise-complete correlation matrix with p-values and pair counts."""
    variables = list(variables)
    k = len(variables)
    columns = [_column(rows, v) for v in variables]
    r = np.full((k, k), np.nan)
    p = np.full((k, k), np.nan)
    n = np.zeros((k, k), dtype=int)

    for i in range(k):
        for j in range(i, k):
            mask = np.isfinite(columns[i]) & np.isfinite(columns[j])
            n[i, j] = n[j, i] = int(mask.sum())
            if i == j:
                if pearson(columns[i], columns[i]) is not None:
                    r[i, i], p[i, i] = 1.0, 0.0
                continue
            result = pearson(columns[i], columns[j])
            if result is not None:
                r[i, j] = r[j, i] = result[0]
                p[i, j] = p[j, i] = result[1]

    undefined = [v for i, v in enumerate(variables) if np.isnan(r[i, i])]
    if undefined:
        get_logger().warning(f"Correlation undefined for constant variables: {', '.join(undefined)}",
                             source="panel")
    return CorrelationReport(variables, r, p, n)


def describe(rows: Union[Sequence[PanelRow], pd.DataFrame],
             variables: Sequence[str] = TABLE_VARIABLES) -> Dict[str, Dict[str, Optional[float]]]:
    """n, mean, sample SD, min and max per variable over non-missing values."""
    summary: Dict[str, Dict[str, Optional[float]]] = {}
    for name in variables:
        values = _column(rows, name)
        values = values[np.isfinite(values)]
        n = len(values)
        summary[name] = {
            "n": n,
            "mean": float(values.mean()) if n else None,
            "sd": float(values.std(ddof=1)) if n > 1 else None,
            "min": float(values.min()) if n else None,
            "max": float(values.max()) if n else None,
        }
    return summary


def maturity_factor(rows: Union[Sequence[PanelRow], pd.DataFrame]) -> MaturityFactor:
    """
    Principal-component factoring of age, size and launch phase.

    Uses listwise-complete rows. Loadings are the leading eigenvector of the
    3x3 correlation matrix scaled by the root of its eigenvalue, oriented so
    the age loading is non-negative; scores are standardized projections.

    Raises:
        DegenerateVariableError: an input variable is constant.
        PanelError: fewer than 3 complete rows.
    """
    frame = rows if isinstance(rows, pd.DataFrame) else panel_frame(rows)
    data = np.column_stack([_column(frame, v) for v in MATURITY_INPUTS])
    mask = np.isfinite(data).all(axis=1)
    data = data[mask]
    keys = [(c, m) for c, m, keep in zip(frame["community_id"], frame["month"], mask) if keep]
    if len(data) < 3:
        raise PanelError(f"Maturity factor needs at least 3 complete rows, got {len(data)}")

    sd = data.std(axis=0, ddof=1)
    for name, value in zip(MATURITY_INPUTS, sd):
        if value == 0.0:
            raise DegenerateVariableError(name)

    z = (data - data.mean(axis=0)) / sd
    corr = np.corrcoef(z, rowvar=False)
    eigenvalues, eigenvectors = np.linalg.eigh(corr)
    order = np.argsort(eigenvalues)[::-1]
    eigenvalues = eigenvalues[order]
    leading = eigenvectors[:, order[0]]
    if leading[0] < 0:
        leading = -leading

    lam = max(float(eigenvalues[0]), 0.0)
    loadings = {name: float(v * math.sqrt(lam)) for name, v in zip(MATURITY_INPUTS, leading)}
    projection = z @ leading
    projection = projection - projection.mean()
    scale = projection.std(ddof=1)
    scores = projection / scale if scale > 0 else projection

    factor = MaturityFactor(
        variables=MATURITY_INPUTS,
        loadings=loadings,
        variance_explained=lam / len(MATURITY_INPUTS),
        eigenvalues=tuple(float(v) for v in eigenvalues),
        keys=keys,
        scores=scores,
    )
    get_logger().info(
        "Maturity factor: " + ", ".join(f"{k} {v:.2f}" for k, v in loadings.items())
        + f", {factor.variance_explained:.0%} variance", source="panel")
    return factor


def apply_maturity(rows: Sequence[PanelRow], factor: Optional[MaturityFactor] = None) -> List[PanelRow]:
    """Rows with the maturity column filled; rows left out of the factoring stay missing."""
    factor = factor or maturity_factor(rows)
    scores = factor.score_map()
    return [replace(r, maturity=scores.get((r.community_id, r.month))) for r in rows]


def render_panel_csv(rows: Sequence[PanelRow]) -> str:
    return CSVExporter().render(rows, PANEL_COLUMNS)


def write_panel_csv(rows: Sequence[PanelRow], path: Union[str, Path]) -> int:
    """Write the panel in fixed column order, missing values as empty fields."""
    return CSVExporter().export(rows, str(path), columns=PANEL_COLUMNS).ensure().size


def _cell(value, kind: type):
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return None
    if kind is str:
        return str(value)
    if kind is bool:
        return bool(int(round(float(value))))
    if kind is int:
        return int(round(float(value)))
    return float(value)


def _field_kind(annotation) -> type:
    args = [a for a in get_args(annotation) if a is not type(None)]
    return args[0] if args else annotation


def read_rows_csv(path: Union[str, Path], row_type: type) -> List:
    """
    Re-ingest a CSV written from dataclass rows (panel or metric rows).

    Raises:
        PanelError: unreadable file or missing columns.
    """
    hints = get_type_hints(row_type)
    names = [f.name for f in fields(row_type)]
    text_columns = {name: str for name in names if _field_kind(hints[name]) is str}
    try:
        frame = pd.read_csv(path, dtype=text_columns, keep_default_na=False, na_values=[""],
                            float_precision="round_trip")
    except (OSError, ValueError) as e:
        raise PanelError(f"Cannot read {path}: {e}") from e

    missing = [c for c in names if c not in frame.columns]
    if missing:
        raise PanelError(f"{path} lacks columns: {', '.join(missing)}")

    rows = []
    for record in frame[names].to_dict(orient="records"):
        values = {name: _cell(record[name], _field_kind(hints[name])) for name in names}
        rows.append(row_type(**values))
    return rows


def read_panel_csv(path: Union[str, Path]) -> List[PanelRow]:
    """Re-ingest a panel CSV written by write_panel_csv, sorted by community and month."""
    rows = [r if r.december is not None else replace(r, december=0) for r in read_rows_csv(path, PanelRow)]
    rows.sort(key=lambda r: (r.community_id, r.month))
    return rows


def export_panel_xlsx(rows: Sequence[PanelRow], report: Optional[CorrelationReport],
                      path: Union[str, Path]) -> ExportResult:
    """Panel sheet plus an optional correlation sheet in one workbook."""
    sheets = {"panel": (list(PANEL_COLUMNS), [[getattr(r, c) for c in PANEL_COLUMNS] for r in rows])}
    if report is not None:
        sheets["correlations"] = (
            ["variable"] + report.variables,
            [[name] + [None if np.isnan(v) else round(float(v), 3) for v in report.r[i]]
             for i, name in enumerate(report.variables)],
        )
    return XLSXExporter().export(sheets, str(path))
