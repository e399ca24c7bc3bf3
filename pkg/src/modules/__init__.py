"""
CommunityPulse - Modules Package
Contains the analysis stages: ingest, network, dynamics, language, panel,
mixed models, synthetic archives and reporting.
"""

from .ingest import Archive, MonthWindow, PostRecord, parse_archive, read_archive, window_by_month
from .netgraph import InteractionGraph, betweenness, build_graph, group_betweenness
from .dynamics import betweenness_series, count_oscillations, rotating_leadership
from .language import Dictionary, Lexicon, build_dictionary, complexity, emotionality, sentiment_score
from .panel import PanelRow, assemble_panel, correlation_matrix, maturity_factor, pearson
from .mlm import ModelFit, ModelSpec, fit_lmm, icc, seasonal_covariates, variance_change
from .synth import CommunitySpec, generate_archive
from .report_generator import ReportGenerator

__all__ = [
    'Archive',
    'MonthWindow',
    'PostRecord',
    'parse_archive',
    'read_archive',
    'window_by_month',
    'InteractionGraph',
    'betweenness',
    'build_graph',
    'group_betweenness',
    'betweenness_series',
    'count_oscillations',
    'rotating_leadership',
    'Dictionary',
    'Lexicon',
    'build_dictionary',
    'complexity',
    'emotionality',
    'sentiment_score',
    'PanelRow',
    'assemble_panel',
    'correlation_matrix',
    'maturity_factor',
    'pearson',
    'ModelFit',
    'ModelSpec',
    'fit_lmm',
    'icc',
    'seasonal_covariates',
    'variance_change',
    'CommunitySpec',
    'generate_archive',
    'ReportGenerator',
]
