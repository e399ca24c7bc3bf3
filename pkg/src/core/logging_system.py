"""
Logging System - Run log for the pipeline stages.
Writes to standard error (colored on a terminal) and optionally to a log file;
entries carry a source tag and key=value context fields.
"""

from collections import Counter, deque
from contextlib import contextmanager
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Any, Deque, Dict, Iterator, List, Optional, TextIO
import sys
import threading
import time


class LogLevel(Enum):
    """Log severity levels."""
    DEBUG = 0
    INFO = 1
    SUCCESS = 2
    WARNING = 3
    ERROR = 4
    CRITICAL = 5


@dataclass
class LogEntry:
    """A single log entry."""
    timestamp: datetime
    level: LogLevel
    message: str
    source: str = ""
    context: Dict[str, Any] = field(default_factory=dict)

    def formatted(self, include_timestamp: bool = True, include_level: bool = True) -> str:
        """'[HH:MM:SS] [LEVEL] [source] message key=value ...'"""
        tags = [
            self.timestamp.strftime('%H:%M:%S') if include_timestamp else "",
            self.level.name if include_level else "",
            self.source,
        ]
        fields = [f"{key}={value}" for key, value in sorted(self.context.items())]
        return " ".join([f"[{tag}]" for tag in tags if tag] + [self.message] + fields)


class LogManager:
    """
    Run log shared by every module.

    Standard output is reserved for reports (the ingest summary), so the
    console stream is standard error. Only the newest max_entries entries
    are kept in memory.
    """

    # ANSI colors on a terminal; INFO and SUCCESS stay uncolored
    LEVEL_COLORS = {
        LogLevel.DEBUG: "90",
        LogLevel.WARNING: "93",
        LogLevel.ERROR: "91",
        LogLevel.CRITICAL: "95",
    }

    def __init__(self, name: str = "CommunityPulse", max_entries: int = 10000):
        self.name = name
        self.min_level = LogLevel.INFO
        self.entries: Deque[LogEntry] = deque(maxlen=max_entries)
        self.level_counts: Counter = Counter()

        self._sink: Optional[TextIO] = None
        self._console = True
        self._colors = False
        self._lock = threading.Lock()

    def configure(self, verbose: bool = False, quiet: bool = False,
                  log_file: Optional[str] = None, console: bool = True) -> None:
        """Apply the --verbose / --quiet / --log-file flags."""
        self.min_level = LogLevel.DEBUG if verbose else LogLevel.WARNING if quiet else LogLevel.INFO
        self.enable_console(console, use_colors=console and sys.stderr.isatty())
        self.set_file(log_file)

    def set_level(self, level: LogLevel) -> None:
        self.min_level = level

    def enable_console(self, enabled: bool = True, use_colors: bool = True) -> None:
        self._console, self._colors = enabled, use_colors

    def set_file(self, file_path: Optional[str]) -> None:
        """Append entries to file_path; None closes the current log file."""
        with self._lock:
            if self._sink is not None:
                self._sink.close()
            self._sink = None
            if file_path:
                target = Path(file_path)
                target.parent.mkdir(parents=True, exist_ok=True)
                self._sink = target.open('a', encoding='utf-8')

    def close(self) -> None:
        self.set_file(None)

    def _emit(self, stream: TextIO, text: str) -> None:
        try:
            stream.write(text + "\n")
            stream.flush()
        except (OSError, ValueError):
            pass

    def _record(self, entry: LogEntry) -> None:
        line = entry.formatted()
        with self._lock:
            self.entries.append(entry)
            self.level_counts[entry.level] += 1
            if self._console and sys.stderr is not None:
                code = self.LEVEL_COLORS.get(entry.level) if self._colors and sys.stderr.isatty() else None
                self._emit(sys.stderr, f"\033[{code}m{line}\033[0m" if code else line)
            if self._sink is not None:
                self._emit(self._sink, line)

    def log(self, message: str, level: LogLevel = LogLevel.INFO, source: str = "", **context: Any) -> None:
        """Record a message; keyword arguments become key=value context fields."""
        if level.value >= self.min_level.value:
            self._record(LogEntry(datetime.now(), level, message, source, context))

    def debug(self, message: str, source: str = "", **context: Any) -> None:
        self.log(message, LogLevel.DEBUG, source, **context)

    def info(self, message: str, source: str = "", **context: Any) -> None:
        self.log(message, LogLevel.INFO, source, **context)

    def success(self, message: str, source: str = "", **context: Any) -> None:
        self.log(message, LogLevel.SUCCESS, source, **context)

    def warning(self, message: str, source: str = "", **context: Any) -> None:
        self.log(message, LogLevel.WARNING, source, **context)

    def error(self, message: str, source: str = "", **context: Any) -> None:
        self.log(message, LogLevel.ERROR, source, **context)

    def critical(self, message: str, source: str = "", **context: Any) -> None:
        self.log(message, LogLevel.CRITICAL, source, **context)

    @contextmanager
    def timed(self, label: str, source: str = "") -> Iterator[None]:
        """Log label's wall time at DEBUG when the block exits."""
        started = time.perf_counter()
        try:
            yield
        finally:
            self.debug(f"{label} finished", source, seconds=f"{time.perf_counter() - started:.3f}")

    def get_entries(self, level: Optional[LogLevel] = None, source: Optional[str] = None,
                    limit: Optional[int] = None) -> List[LogEntry]:
        """Recorded entries at or above level, optionally from one source; limit keeps the newest."""
        with self._lock:
            snapshot = list(self.entries)
        floor = level.value if level else LogLevel.DEBUG.value
        selected = [e for e in snapshot
                    if e.level.value >= floor and (not source or e.source == source)]
        return selected[-limit:] if limit else selected

    def problem_count(self) -> int:
        """Warnings and errors recorded so far."""
        return sum(n for level, n in self.level_counts.items() if level.value >= LogLevel.WARNING.value)

    def clear(self) -> None:
        with self._lock:
            self.entries.clear()
            self.level_counts.clear()


_run_logger: Optional[LogManager] = None


def get_logger() -> LogManager:
    """Process-wide logger, created on first use."""
    global _run_logger
    if _run_logger is None:
        _run_logger = LogManager()
    return _run_logger


def set_logger(logger: LogManager) -> None:
    """Replace the process-wide logger."""
    global _run_logger
    _run_logger = logger
