"""
Export Manager - Artifact writers for the pipeline stages.
JSON with stable key order, CSV with a fixed column order, XLSX workbooks and
plain text. Every write goes through a temp file in the target directory.
"""

import csv
import io
import json
import math
import os
import tempfile
from abc import ABC, abstractmethod
from dataclasses import dataclass, asdict, is_dataclass
from datetime import date, datetime
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

try:
    from ..utils.helpers import atomic_write_text
except ImportError:
    from utils.helpers import atomic_write_text

from .errors import ExportError


@dataclass
class ExportResult:
    """Outcome of one artifact write."""
    success: bool
    file_path: str
    format: str
    size: int = 0
    message: str = ""

    def ensure(self) -> "ExportResult":
        """Raise ExportError for a failed write; returns self otherwise."""
        if not self.success:
            raise ExportError(f"Cannot write {self.file_path}: {self.message}")
        return self


def make_serializable(obj: Any) -> Any:
    """JSON-safe primitives; NaN and infinities become None."""
    if is_dataclass(obj) and not isinstance(obj, type):
        return make_serializable(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): make_serializable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [make_serializable(item) for item in obj]
    if isinstance(obj, (set, frozenset)):
        return sorted(make_serializable(x) for x in obj)
    if isinstance(obj, np.ndarray):
        return make_serializable(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else None
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (datetime, date)):
        return obj.isoformat()
    if isinstance(obj, Path):
        return str(obj)
    return obj


def format_cell(value: Any) -> str:
    """One CSV field: missing is empty, booleans are 0/1, floats round-trip exactly."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return repr(value) if math.isfinite(value) else ""
    return str(value)


def _rows_as_dicts(data: Any) -> List[Dict[str, Any]]:
    rows = []
    for item in data:
        if isinstance(item, dict):
            rows.append(item)
        elif is_dataclass(item):
            rows.append(asdict(item))
        elif hasattr(item, 'to_dict'):
            rows.append(item.to_dict())
    return rows


class BaseExporter(ABC):
    """Writes one artifact format; failures come back as ExportResult, not exceptions."""

    format_name = ""

    @abstractmethod
    def export(self, data: Any, file_path: str, **options) -> ExportResult:
        """Write data to file_path."""

    def _write(self, file_path: str, text: str, message: str = "Export successful") -> ExportResult:
        size = atomic_write_text(file_path, text)
        return ExportResult(True, str(file_path), self.format_name, size, message)

    def _failed(self, file_path: str, error: Exception) -> ExportResult:
        return ExportResult(False, str(file_path), self.format_name, message=str(error))


class JSONExporter(BaseExporter):
    """Sorted keys, two-space indent, trailing newline."""

    format_name = "JSON"

    def render(self, data: Any, indent: int = 2) -> str:
        return json.dumps(make_serializable(data), indent=indent, sort_keys=True,
                          ensure_ascii=False, allow_nan=False) + "\n"

    def export(self, data: Any, file_path: str, **options) -> ExportResult:
        try:
            return self._write(file_path, self.render(data, options.get('indent', 2)))
        except (OSError, TypeError, ValueError) as e:
            return self._failed(file_path, e)


class CSVExporter(BaseExporter):
    """Rows (dicts or dataclasses) with an explicit column order; RFC-4180 quoting, '\\n' line ends."""

    format_name = "CSV"

    def render(self, rows: Sequence[Any], columns: Optional[Sequence[str]] = None) -> str:
        dict_rows = _rows_as_dicts(rows)
        if columns is None:
            columns = list(dict.fromkeys(key for row in dict_rows for key in row))

        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        # minimal quoting leaves a bare '\r' unquoted, which readers take as a row end
        quote_all = csv.writer(buffer, lineterminator="\n", quoting=csv.QUOTE_ALL)
        writer.writerow(columns)
        for row in dict_rows:
            cells = [format_cell(row.get(col)) for col in columns]
            (quote_all if any("\r" in cell for cell in cells) else writer).writerow(cells)
        return buffer.getvalue()

    def export(self, data: Any, file_path: str, **options) -> ExportResult:
        try:
            rows = _rows_as_dicts(data)
            return self._write(file_path, self.render(rows, options.get('columns')),
                               f"Exported {len(rows)} rows")
        except (OSError, TypeError, ValueError) as e:
            return self._failed(file_path, e)


Sheet = Tuple[Sequence[str], Sequence[Sequence[Any]]]


class XLSXExporter(BaseExporter):
    """
    Workbook with one sheet per table; data is {sheet name: (columns, rows)}.
    Without openpyxl each sheet is written as <stem>_<sheet>.csv instead.
    """

    format_name = "XLSX"

    def export(self, data: Dict[str, Sheet], file_path: str, **options) -> ExportResult:
        try:
            import openpyxl
            from openpyxl.styles import Font
            from openpyxl.utils import get_column_letter
        except ImportError:
            return self._export_csv_fallback(data, file_path)

        try:
            wb = openpyxl.Workbook()
            wb.remove(wb.active)
            for sheet_name, (columns, rows) in data.items():
                ws = wb.create_sheet(title=sheet_name[:31])
                ws.append(list(columns))
                for cell in ws[1]:
                    cell.font = Font(bold=True)
                for row in rows:
                    ws.append([make_serializable(v) for v in row])
                for idx, col in enumerate(columns, 1):
                    ws.column_dimensions[get_column_letter(idx)].width = max(10, len(str(col)) + 2)
                ws.freeze_panes = "A2"

            target = Path(file_path)
            target.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp_name = tempfile.mkstemp(prefix=f".{target.name}.", suffix=".tmp", dir=str(target.parent))
            os.close(fd)
            try:
                wb.save(tmp_name)
                os.replace(tmp_name, target)
            finally:
                if os.path.exists(tmp_name):
                    os.unlink(tmp_name)
            return ExportResult(True, file_path, self.format_name, target.stat().st_size,
                                f"Exported {len(data)} sheets")
        except (OSError, TypeError, ValueError) as e:
            return self._failed(file_path, e)

    def _export_csv_fallback(self, data: Dict[str, Sheet], file_path: str) -> ExportResult:
        base = Path(file_path)
        csv_exporter = CSVExporter()
        written = 0
        for sheet_name, (columns, rows) in data.items():
            target = base.with_name(f"{base.stem}_{sheet_name}.csv")
            written += atomic_write_text(target, csv_exporter.render([dict(zip(columns, row)) for row in rows],
                                                                     columns))
        return ExportResult(True, str(base.with_suffix(".csv")), "CSV", written,
                            "openpyxl not installed, wrote CSV instead")


class TXTExporter(BaseExporter):
    """Already-rendered text (tables, Markdown); a trailing newline is ensured."""

    format_name = "TXT"

    def export(self, data: Any, file_path: str, **options) -> ExportResult:
        text = data if isinstance(data, str) else str(data)
        try:
            return self._write(file_path, text if text.endswith("\n") else text + "\n")
        except OSError as e:
            return self._failed(file_path, e)


class ExportManager:
    """Exporter registry keyed by format name or file extension."""

    def __init__(self):
        text = TXTExporter()
        self.exporters: Dict[str, BaseExporter] = {
            'json': JSONExporter(),
            'csv': CSVExporter(),
            'txt': text,
            'md': text,
            'xlsx': XLSXExporter(),
        }

    def get_available_formats(self) -> List[str]:
        return list(self.exporters)

    def export(self, data: Any, file_path: str, format: Optional[str] = None, **options) -> ExportResult:
        """Write data with the exporter for format, or for file_path's extension when format is None."""
        format = format or Path(file_path).suffix.lower().lstrip('.')
        exporter = self.exporters.get(format)
        if exporter is None:
            return ExportResult(False, file_path, format,
                                message=f"Unsupported format: {format}. Available: {', '.join(self.exporters)}")
        return exporter.export(data, file_path, **options)


_export_manager: Optional[ExportManager] = None


def get_export_manager() -> ExportManager:
    """Get the global export manager instance."""
    global _export_manager
    if _export_manager is None:
        _export_manager = ExportManager()
    return _export_manager
