"""
Configuration Manager - Run configuration with JSON persistence.
Holds every pipeline flag, validates documented ranges and merges CLI overrides.
"""

import json
from dataclasses import dataclass, field, asdict, fields
from pathlib import Path
from typing import Any, Dict, List, Optional

from .errors import ConfigError


@dataclass
class IngestConfig:
    """Where the archive comes from."""
    input_path: str = ""
    format: str = ""  # jsonl, csv; empty = infer from extension


@dataclass
class DynamicsConfig:
    """Snapshot series and launch-phase settings."""
    snapshot_days: int = 1
    trail_days: int = 7
    launch_age: int = 3
    launch_size: int = 50
    launch_rule: str = "or"  # or, and


@dataclass
class LanguageConfig:
    """Lexicon files and dictionary smoothing."""
    lexicon_pos: str = ""
    lexicon_neg: str = ""
    smoothing: float = 1.0


@dataclass
class ModelConfig:
    """Mixed model fitting options."""
    models: List[str] = field(default_factory=lambda: ["null", "full"])
    criterion: str = "ml"  # ml, reml
    seasonal_months: List[int] = field(default_factory=list)
    theta_max: float = 1.0e4
    tolerance: float = 1.0e-10


@dataclass
class OutputConfig:
    """Output locations and execution options."""
    out_dir: str = "out"
    dump_graphs: str = ""
    jobs: int = 1
    xlsx: bool = False


@dataclass
class RunConfig:
    """Complete configuration of one pipeline run."""
    version: str = "1.0.0"
    seed: int = 0

    ingest: IngestConfig = field(default_factory=IngestConfig)
    dynamics: DynamicsConfig = field(default_factory=DynamicsConfig)
    language: LanguageConfig = field(default_factory=LanguageConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    output: OutputConfig = field(default_factory=OutputConfig)


SECTIONS = {
    "ingest": IngestConfig,
    "dynamics": DynamicsConfig,
    "language": LanguageConfig,
    "model": ModelConfig,
    "output": OutputConfig,
}


class ConfigManager:
    """
    Manages the run configuration.
    Features: JSON load/save, dot-notation access, range validation, reset.
    """

    def __init__(self, config_file: Optional[Path] = None):
        self.config_file = Path(config_file) if config_file else None
        self.config: RunConfig = RunConfig()

        if self.config_file is not None:
            self.load()

    def load(self) -> bool:
        """Load configuration from the config file; missing file keeps defaults."""
        if self.config_file is None or not self.config_file.exists():
            self.config = RunConfig()
            return False

        try:
            with open(self.config_file, 'r', encoding='utf-8') as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"Cannot read config file {self.config_file}: {e}") from e

        self.config = self._dict_to_config(data)
        return True

    def save(self, file_path: Optional[str] = None) -> Path:
        """Save configuration as stable-key JSON."""
        target = Path(file_path) if file_path else self.config_file
        if target is None:
            raise ConfigError("No config file path given")

        target.parent.mkdir(parents=True, exist_ok=True)
        with open(target, 'w', encoding='utf-8') as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True, ensure_ascii=False)
            f.write("\n")
        return target

    def reset_to_defaults(self, section: Optional[str] = None) -> None:
        """Reset the whole configuration or one section."""
        if section is None:
            self.config = RunConfig()
        elif section in SECTIONS:
            setattr(self.config, section, SECTIONS[section]())
        else:
            raise ConfigError(f"Unknown config section: {section}")

    def get(self, key: str, default: Any = None) -> Any:
        """Get a configuration value by dot-notation key."""
        value: Any = self.config
        for part in key.split('.'):
            if hasattr(value, part):
                value = getattr(value, part)
            else:
                return default
        return value

    def set(self, key: str, value: Any) -> None:
        """Set a configuration value by dot-notation key."""
        parts = key.split('.')
        obj: Any = self.config
        for part in parts[:-1]:
            if not hasattr(obj, part):
                raise ConfigError(f"Unknown config key: {key}")
            obj = getattr(obj, part)
        if not hasattr(obj, parts[-1]):
            raise ConfigError(f"Unknown config key: {key}")
        setattr(obj, parts[-1], value)

    def apply_overrides(self, overrides: Dict[str, Any]) -> None:
        """Apply dot-notation overrides, skipping None (flag not given)."""
        for key, value in overrides.items():
            if value is not None:
                self.set(key, value)

    def validate(self) -> None:
        """Raise ConfigError when a value is outside its documented range."""
        dyn = self.config.dynamics
        if dyn.snapshot_days < 1:
            raise ConfigError("--snapshot-days must be >= 1")
        if not dyn.snapshot_days <= dyn.trail_days <= 31:
            raise ConfigError("--snapshot-days <= --trail-days <= 31 is required")
        if dyn.launch_age < 1 or dyn.launch_size < 1:
            raise ConfigError("--launch-age and --launch-size must be positive")
        if dyn.launch_rule not in ("or", "and"):
            raise ConfigError(f"--launch-rule must be 'or' or 'and', got '{dyn.launch_rule}'")

        if self.config.language.smoothing <= 0:
            raise ConfigError("--smoothing must be > 0")

        model = self.config.model
        if model.criterion not in ("ml", "reml"):
            raise ConfigError(f"Unknown estimation criterion: {model.criterion}")
        if any(not 1 <= m <= 12 for m in model.seasonal_months):
            raise ConfigError("--seasonal-months values must be calendar months 1..12")
        if model.theta_max <= 0 or model.tolerance <= 0:
            raise ConfigError("theta_max and tolerance must be positive")

        if self.config.output.jobs < 1:
            raise ConfigError("--jobs must be >= 1")

        fmt = self.config.ingest.format
        if fmt and fmt not in ("jsonl", "csv"):
            raise ConfigError(f"--format must be jsonl or csv, got '{fmt}'")

    def to_dict(self) -> Dict[str, Any]:
        """Configuration as a plain dictionary."""
        return asdict(self.config)

    def _dict_to_config(self, data: Dict) -> RunConfig:
        """Convert dictionary to config dataclass, rejecting unknown keys."""
        config = RunConfig()

        for name, section_cls in SECTIONS.items():
            if name not in data:
                continue
            known = {f.name for f in fields(section_cls)}
            unknown = set(data[name]) - known
            if unknown:
                raise ConfigError(f"Unknown keys in section '{name}': {', '.join(sorted(unknown))}")
            setattr(config, name, section_cls(**data[name]))

        config.version = data.get('version', config.version)
        config.seed = int(data.get('seed', config.seed))
        return config


_config_manager: Optional[ConfigManager] = None


def get_config() -> ConfigManager:
    """Get the global configuration manager instance."""
    global _config_manager
    if _config_manager is None:
        _config_manager = ConfigManager()
    return _config_manager


def set_config(manager: ConfigManager) -> None:
    """Set the global configuration manager instance."""
    global _config_manager
    _config_manager = manager
