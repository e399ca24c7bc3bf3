"""
CommunityPulse - Utilities Module
Path, hashing and atomic file helpers.
"""

from .helpers import atomic_write_text, calculate_file_hash, format_size, safe_path, sanitize_filename

__all__ = [
    'atomic_write_text',
    'calculate_file_hash',
    'format_size',
    'safe_path',
    'sanitize_filename',
]
