"""
Error types shared by all CommunityPulse modules.
Fatal conditions raise; recoverable ones are reported as diagnostics or None values.
"""

from typing import List, Optional, Sequence, Tuple


class CommunityPulseError(Exception):
    """Base class for every fatal pipeline error."""


class ConfigError(CommunityPulseError):
    """A configuration value is outside its documented range."""


class IngestError(CommunityPulseError):
    """The archive could not be read or holds no valid record."""


class GraphError(CommunityPulseError):
    """Interaction graph construction failed."""


class ExportError(CommunityPulseError):
    """An output artifact could not be written."""


class LanguageError(CommunityPulseError):
    """Lexicon or dictionary could not be built."""


class PanelError(CommunityPulseError):
    """Panel assembly or panel statistics failed."""


class ConsistencyError(PanelError):
    """Metric producers disagree on the set of communities."""


class DegenerateVariableError(PanelError):
    """A variable has zero variance where a correlation matrix is needed."""

    def __init__(self, variable: str):
        super().__init__(f"Variable '{variable}' is constant; correlation matrix is degenerate")
        self.variable = variable


class ModelError(CommunityPulseError):
    """Mixed model specification or estimation failed."""


class InadmissibleModelError(ModelError):
    """Too few groups or rows for a random-intercept model."""


class RankDeficientError(ModelError):
    """The fixed-effects design matrix is not of full column rank."""

    def __init__(self, columns: Sequence[str]):
        super().__init__(f"Design matrix is rank deficient; collinear columns: {', '.join(columns)}")
        self.columns = list(columns)


class ConvergenceError(ModelError):
    """The profile likelihood search did not converge."""

    def __init__(self, message: str, trace: Optional[List[Tuple[float, float]]] = None):
        super().__init__(message)
        self.trace = trace or []


class SynthError(CommunityPulseError):
    """A synthetic community specification cannot be generated."""
