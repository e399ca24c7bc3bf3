"""
CommunityPulse - Command line package.
Argument parsing, stage orchestration and exit codes.
"""

__version__ = "1.0.0"
