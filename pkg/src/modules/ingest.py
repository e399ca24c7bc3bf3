"""
Ingest Module - Parse, validate and window forum post archives.
Reads json-lines or CSV dumps into an immutable Archive, collects per-record
diagnostics and splits each community's history into calendar-month windows (UTC).
"""

import csv
import io
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import BinaryIO, Dict, Iterable, List, Optional, Tuple, Union

try:
    from ..core.errors import IngestError
    from ..core.export_manager import CSVExporter
    from ..core.logging_system import get_logger
except ImportError:
    from core.errors import IngestError
    from core.export_manager import CSVExporter
    from core.logging_system import get_logger


FIELDS = ("post_id", "community_id", "author_id", "parent_post_id", "timestamp", "text")
REQUIRED_FIELDS = ("post_id", "community_id", "author_id", "timestamp", "text")
FORMATS = ("jsonl", "csv")
EXTENSION_FORMATS = {".jsonl": "jsonl", ".json": "jsonl", ".ndjson": "jsonl", ".csv": "csv"}


@dataclass(frozen=True)
class PostRecord:
    """One forum message."""
    post_id: str
    community_id: str
    author_id: str
    parent_post_id: Optional[str]
    timestamp: datetime
    text: str = ""


@dataclass(frozen=True)
class Diagnostic:
    """A non-fatal problem found while parsing."""
    line: int
    message: str

    def formatted(self) -> str:
        return f"{self.message}, line {self.line}"


@dataclass(frozen=True)
class Archive:
    """All valid posts of a dump, sorted by timestamp."""
    posts: Tuple[PostRecord, ...]
    communities: frozenset
    span: Tuple[datetime, datetime]
    diagnostics: Tuple[Diagnostic, ...] = field(default=(), compare=False)

    def __len__(self) -> int:
        return len(self.posts)

    def community_posts(self, community_id: str) -> List[PostRecord]:
        """Posts of one community in timestamp order."""
        return [p for p in self.posts if p.community_id == community_id]


@dataclass(frozen=True)
class MonthWindow:
    """Posts of one community in one calendar month (UTC)."""
    community_id: str
    month: str  # YYYY-MM
    posts: Tuple[PostRecord, ...]

    @property
    def start(self) -> datetime:
        return month_start(self.month)

    @property
    def end(self) -> datetime:
        """Exclusive end: first instant of the next month."""
        return month_start(shift_month(self.month, 1))

    @property
    def authors(self) -> List[str]:
        """Distinct authors in first-post order."""
        return list(dict.fromkeys(p.author_id for p in self.posts))


# ---------------------------------------------------------------------------
# Calendar month helpers
# ---------------------------------------------------------------------------

def month_label(ts: datetime) -> str:
    """YYYY-MM label of a UTC instant."""
    return f"{ts.year:04d}-{ts.month:02d}"


def month_start(label: str) -> datetime:
    """First instant of a YYYY-MM month, UTC."""
    year, month = (int(part) for part in label.split("-"))
    return datetime(year, month, 1, tzinfo=timezone.utc)


def shift_month(label: str, offset: int) -> str:
    """Label of the month offset calendar months away."""
    year, month = (int(part) for part in label.split("-"))
    index = year * 12 + (month - 1) + offset
    return f"{index // 12:04d}-{index % 12 + 1:02d}"


def months_between(first: str, last: str) -> int:
    """Calendar months from first to last, inclusive of both."""
    fy, fm = (int(part) for part in first.split("-"))
    ly, lm = (int(part) for part in last.split("-"))
    return (ly * 12 + lm) - (fy * 12 + fm) + 1


def month_range(first: str, last: str) -> List[str]:
    """All month labels from first to last inclusive."""
    return [shift_month(first, k) for k in range(months_between(first, last))]


def parse_timestamp(value: str) -> datetime:
    """
    Parse an ISO 8601 timestamp into an aware UTC datetime at second precision.
    Naive timestamps are taken as UTC.
    """
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc).replace(microsecond=0)


def format_timestamp(ts: datetime) -> str:
    """Render a UTC instant as YYYY-MM-DDTHH:MM:SSZ."""
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def _record_from_fields(values: Dict[str, object], line: int,
                        diagnostics: List[Diagnostic]) -> Optional[PostRecord]:
    """Validate one raw record; returns None (with a diagnostic) when ill-formed."""
    for name in REQUIRED_FIELDS:
        if name not in values or values[name] is None:
            diagnostics.append(Diagnostic(line, f"missing field: {name}"))
            return None

    ids = {}
    for name in ("post_id", "community_id", "author_id"):
        raw = values[name]
        if isinstance(raw, bool) or not isinstance(raw, (str, int)):
            diagnostics.append(Diagnostic(line, f"invalid field: {name}"))
            return None
        ids[name] = str(raw).strip()
        if not ids[name]:
            diagnostics.append(Diagnostic(line, f"empty field: {name}"))
            return None

    parent = values.get("parent_post_id")
    if parent is not None:
        if isinstance(parent, bool) or not isinstance(parent, (str, int)):
            diagnostics.append(Diagnostic(line, "invalid field: parent_post_id"))
            return None
        parent = str(parent).strip() or None

    raw_ts = values["timestamp"]
    if not isinstance(raw_ts, str):
        diagnostics.append(Diagnostic(line, "invalid field: timestamp"))
        return None
    try:
        ts = parse_timestamp(raw_ts)
    except ValueError:
        diagnostics.append(Diagnostic(line, f"invalid timestamp '{raw_ts}'"))
        return None

    text = values["text"]
    if not isinstance(text, str):
        diagnostics.append(Diagnostic(line, "invalid field: text"))
        return None

    return PostRecord(
        post_id=ids["post_id"],
        community_id=ids["community_id"],
        author_id=ids["author_id"],
        parent_post_id=parent,
        timestamp=ts,
        text=text,
    )


def _jsonl_lines(text: str) -> Iterable[Tuple[int, str]]:
    # records end at '\n' only; U+2028 and friends are legal inside JSON strings
    for line_no, line in enumerate(text.split("\n"), 1):
        yield line_no, line[:-1] if line.endswith("\r") else line


def _iter_jsonl(text: str, diagnostics: List[Diagnostic]) -> Iterable[Tuple[int, PostRecord]]:
    for line_no, line in _jsonl_lines(text):
        if not line.strip():
            continue
        try:
            values = json.loads(line)
        except json.JSONDecodeError as e:
            diagnostics.append(Diagnostic(line_no, f"invalid JSON ({e.msg})"))
            continue
        if not isinstance(values, dict):
            diagnostics.append(Diagnostic(line_no, "record is not a JSON object"))
            continue
        record = _record_from_fields(values, line_no, diagnostics)
        if record is not None:
            yield line_no, record


def _iter_csv(text: str, diagnostics: List[Diagnostic]) -> Iterable[Tuple[int, PostRecord]]:
    reader = csv.DictReader(io.StringIO(text, newline=""))
    header = reader.fieldnames or []
    missing = [name for name in REQUIRED_FIELDS if name not in header]
    if missing:
        raise IngestError(f"CSV header is missing columns: {', '.join(missing)}")

    for row in reader:
        line_no = reader.line_num
        if None in row:
            diagnostics.append(Diagnostic(line_no, "too many fields"))
            continue
        values: Dict[str, object] = {k: v for k, v in row.items() if v is not None}
        if values.get("parent_post_id", "") == "":
            values["parent_post_id"] = None
        record = _record_from_fields(values, line_no, diagnostics)
        if record is not None:
            yield line_no, record


def parse_archive(source: Union[BinaryIO, bytes], format: str) -> Archive:
    """
    Parse a byte stream into an Archive.

    Args:
        source: Binary stream or raw bytes, UTF-8 encoded.
        format: 'jsonl' or 'csv'.

    Returns:
        Archive with every well-formed record, sorted by timestamp, and the
        diagnostics collected on the way.

    Raises:
        IngestError: unreadable or undecodable stream, unknown format,
            or zero valid records.
    """
    logger = get_logger()
    if format not in FORMATS:
        raise IngestError(f"Unknown archive format '{format}' (expected one of {', '.join(FORMATS)})")

    try:
        raw = source if isinstance(source, (bytes, bytearray)) else source.read()
    except OSError as e:
        raise IngestError(f"Cannot read archive stream: {e}") from e
    try:
        text = bytes(raw).decode("utf-8-sig")
    except UnicodeDecodeError as e:
        raise IngestError(f"Archive is not valid UTF-8 (byte {e.start})") from e

    diagnostics: List[Diagnostic] = []
    reader = _iter_jsonl if format == "jsonl" else _iter_csv
    parsed = list(reader(text, diagnostics))

    seen: Dict[str, int] = {}
    unique: List[Tuple[int, PostRecord]] = []
    for line_no, record in parsed:
        if record.post_id in seen:
            diagnostics.append(Diagnostic(
                line_no, f"duplicate post_id '{record.post_id}' (first seen line {seen[record.post_id]})"))
            continue
        seen[record.post_id] = line_no
        unique.append((line_no, record))

    if not unique:
        details = "".join(f"\n  {d.formatted()}" for d in sorted(diagnostics, key=lambda d: d.line)[:20])
        raise IngestError(f"empty archive: no valid record found{details}")

    by_id = {record.post_id: record for _, record in unique}
    resolved: List[PostRecord] = []
    for line_no, record in unique:
        parent_id = record.parent_post_id
        if parent_id is not None:
            parent = by_id.get(parent_id)
            if parent is None:
                diagnostics.append(Diagnostic(
                    line_no, f"unresolved parent_post_id '{parent_id}', treated as thread start"))
                record = PostRecord(record.post_id, record.community_id, record.author_id,
                                    None, record.timestamp, record.text)
            elif parent.timestamp > record.timestamp:
                diagnostics.append(Diagnostic(
                    line_no, f"parent '{parent_id}' is later than reply '{record.post_id}'"))
        resolved.append(record)

    resolved.sort(key=lambda p: p.timestamp)
    diagnostics.sort(key=lambda d: d.line)

    archive = Archive(
        posts=tuple(resolved),
        communities=frozenset(p.community_id for p in resolved),
        span=(resolved[0].timestamp, resolved[-1].timestamp),
        diagnostics=tuple(diagnostics),
    )
    logger.info(f"Parsed {len(archive)} posts in {len(archive.communities)} communities "
                f"({len(diagnostics)} diagnostics)", source="ingest")
    return archive


def infer_format(path: Union[str, Path]) -> str:
    """Archive format from the file extension."""
    suffix = Path(path).suffix.lower()
    if suffix not in EXTENSION_FORMATS:
        raise IngestError(f"Cannot infer archive format from '{suffix}'; pass --format")
    return EXTENSION_FORMATS[suffix]


def read_archive(path: Union[str, Path], format: Optional[str] = None) -> Archive:
    """Open and parse an archive file."""
    fmt = format or infer_format(path)
    try:
        with open(path, "rb") as f:
            return parse_archive(f, fmt)
    except OSError as e:
        raise IngestError(f"Cannot open archive {path}: {e}") from e


def serialize_archive(archive: Archive, format: str) -> str:
    """Render an archive in the ingest schema so that parsing it back is lossless."""
    if format == "jsonl":
        lines = []
        for p in archive.posts:
            obj = {
                "post_id": p.post_id,
                "community_id": p.community_id,
                "author_id": p.author_id,
                "parent_post_id": p.parent_post_id,
                "timestamp": format_timestamp(p.timestamp),
                "text": p.text,
            }
            lines.append(json.dumps(obj, ensure_ascii=False))
        return "\n".join(lines) + "\n"

    if format == "csv":
        rows = [{
            "post_id": p.post_id,
            "community_id": p.community_id,
            "author_id": p.author_id,
            "parent_post_id": p.parent_post_id,
            "timestamp": format_timestamp(p.timestamp),
            "text": p.text,
        } for p in archive.posts]
        return CSVExporter().render(rows, FIELDS)

    raise IngestError(f"Unknown archive format '{format}'")


def post_index(archive: Archive) -> Dict[str, PostRecord]:
    """Map post_id to record."""
    return {p.post_id: p for p in archive.posts}


def window_by_month(archive: Archive) -> List[MonthWindow]:
    """
    Split each community into contiguous calendar-month windows.

    Every month from a community's first post month to its last post month
    gets a window, silent months included. Windows are ordered by community,
    then month.
    """
    grouped: Dict[str, Dict[str, List[PostRecord]]] = {}
    for post in archive.posts:
        grouped.setdefault(post.community_id, {}).setdefault(month_label(post.timestamp), []).append(post)

    windows: List[MonthWindow] = []
    for community_id in sorted(grouped):
        months = grouped[community_id]
        for label in month_range(min(months), max(months)):
            windows.append(MonthWindow(community_id, label, tuple(months.get(label, ()))))
    return windows


def validation_report(archive: Archive) -> Dict[str, object]:
    """Counts and diagnostics for the ingest subcommand."""
    windows = window_by_month(archive)
    per_community = {}
    for cid in sorted(archive.communities):
        posts = archive.community_posts(cid)
        per_community[cid] = {
            "posts": len(posts),
            "authors": len({p.author_id for p in posts}),
            "months": sum(1 for w in windows if w.community_id == cid),
            "replies": sum(1 for p in posts if p.parent_post_id is not None),
        }
    return {
        "posts": len(archive),
        "communities": len(archive.communities),
        "authors": len({p.author_id for p in archive.posts}),
        "span": [format_timestamp(archive.span[0]), format_timestamp(archive.span[1])],
        "windows": len(windows),
        "per_community": per_community,
        "diagnostics": [d.formatted() for d in archive.diagnostics],
    }
