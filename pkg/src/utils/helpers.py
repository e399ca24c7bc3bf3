"""
Helper Functions - Common utilities used across the pipeline.
"""

import hashlib
import os
import re
import tempfile
from pathlib import Path
from typing import Union


def safe_path(path: Union[str, Path]) -> Path:
    """Convert string to an absolute Path."""
    return Path(path).resolve()


_UNSAFE_CHARS = re.compile(r'[<>:"/\\|?* ]')
_CONTROL_CHARS = re.compile(r'[\x00-\x1f]')


def sanitize_filename(filename: str, replacement: str = "_") -> str:
    """File-system-safe name for per-window graph dumps and fit files named after ids."""
    cleaned = _CONTROL_CHARS.sub("", _UNSAFE_CHARS.sub(replacement, filename)).strip().strip('.')
    if len(cleaned) > 255:
        stem, ext = os.path.splitext(cleaned)
        cleaned = stem[:255 - len(ext)] + ext
    return cleaned or "unnamed"


def calculate_file_hash(file_path: Union[str, Path], algorithm: str = 'sha256') -> str:
    """Calculate hash of a file."""
    hash_func = hashlib.new(algorithm)
    with open(file_path, 'rb') as f:
        for chunk in iter(lambda: f.read(8192), b''):
            hash_func.update(chunk)
    return hash_func.hexdigest()


def atomic_write_text(file_path: Union[str, Path], content: str, encoding: str = 'utf-8') -> int:
    """
    Write text through a temp file in the target directory, then rename.
    Returns the number of bytes written.
    """
    path = Path(file_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = content.encode(encoding)

    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=str(path.parent))
    try:
        with os.fdopen(fd, 'wb') as f:
            f.write(data)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return len(data)


def format_size(size_bytes: float) -> str:
    """'512 B', '2.00 KB', '1.50 MB' ..."""
    if size_bytes < 1024:
        return f"{int(size_bytes)} B"
    for unit in ('KB', 'MB', 'GB', 'TB'):
        size_bytes /= 1024
        if size_bytes < 1024:
            return f"{size_bytes:.2f} {unit}"
    return f"{size_bytes / 1024:.2f} PB"
