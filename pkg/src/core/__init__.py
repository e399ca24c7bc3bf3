"""
CommunityPulse - Core Module
Configuration, errors, export, logging and workflow.
"""

from .config_manager import ConfigManager, get_config, RunConfig
from .errors import CommunityPulseError
from .export_manager import ExportManager, get_export_manager, ExportResult
from .logging_system import LogManager, LogLevel, get_logger
from .workflow import WorkflowManager, WorkflowStep, StepResult, run_parallel

__all__ = [
    "ConfigManager",
    "get_config",
    "RunConfig",
    "CommunityPulseError",
    "ExportManager",
    "get_export_manager",
    "ExportResult",
    "LogManager",
    "LogLevel",
    "get_logger",
    "WorkflowManager",
    "WorkflowStep",
    "StepResult",
    "run_parallel",
]
