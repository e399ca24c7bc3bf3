"""
Language Module - Sentiment, emotionality and vocabulary complexity.

Sentiment comes from a pluggable scorer mapping text to [0, 1]; the default
counts positive and negative lexicon hits. Complexity is the mean information
content (bits per token) of a post under a corpus-wide, add-alpha smoothed
unigram dictionary, so months that reuse common vocabulary score lower.
"""

import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Optional, Protocol, Sequence, Union

import numpy as np

from .ingest import Archive, MonthWindow, PostRecord

try:
    from ..core.errors import LanguageError
    from ..core.logging_system import get_logger
    from ..core.workflow import run_parallel
except ImportError:
    from core.errors import LanguageError
    from core.logging_system import get_logger
    from core.workflow import run_parallel


RESOURCE_DIR = Path(__file__).resolve().parent.parent / "resources"
DEFAULT_POSITIVE = RESOURCE_DIR / "lexicon_positive.txt"
DEFAULT_NEGATIVE = RESOURCE_DIR / "lexicon_negative.txt"

# maximal runs of letters; digits, hyphens, apostrophes and underscores split tokens
TOKEN_PATTERN = re.compile(r"[^\W\d_]+", re.UNICODE)


def tokenize(text: str) -> List[str]:
    """Lowercased letter-run tokens: 're-test 123' -> ['re', 'test']."""
    if not text:
        return []
    return [token.lower() for token in TOKEN_PATTERN.findall(text)]


@dataclass(frozen=True)
class Lexicon:
    """Positive and negative opinion words."""
    positive: FrozenSet[str]
    negative: FrozenSet[str]
    source: str = "custom"

    def __post_init__(self):
        overlap = self.positive & self.negative
        if overlap:
            raise LanguageError(f"Lexicon words cannot be both positive and negative: {', '.join(sorted(overlap))}")

    def swapped(self) -> "Lexicon":
        """Same lexicon with polarities exchanged."""
        return Lexicon(self.negative, self.positive, f"{self.source} (swapped)")


def _read_word_list(path: Union[str, Path]) -> FrozenSet[str]:
    try:
        with open(path, 'r', encoding='utf-8') as f:
            lines = f.read().splitlines()
    except OSError as e:
        raise LanguageError(f"Cannot read lexicon file {path}: {e}") from e
    return frozenset(line.strip().lower() for line in lines
                     if line.strip() and not line.lstrip().startswith('#'))


def load_lexicon(positive_path: Union[str, Path], negative_path: Union[str, Path],
                 source: Optional[str] = None) -> Lexicon:
    """
    Load a lexicon from two word-per-line files ('#' starts a comment).
    Words listed in both files are dropped from both.
    """
    positive = _read_word_list(positive_path)
    negative = _read_word_list(negative_path)
    overlap = positive & negative
    if overlap:
        get_logger().warning(f"Dropping {len(overlap)} words listed as both positive and negative",
                             source="language")
        positive -= overlap
        negative -= overlap
    return Lexicon(positive, negative, source or f"{Path(positive_path).name}+{Path(negative_path).name}")


def default_lexicon() -> Lexicon:
    """The small general-purpose lexicon shipped in src/resources."""
    return load_lexicon(DEFAULT_POSITIVE, DEFAULT_NEGATIVE, source="communitypulse-default")


class SentimentScorer(Protocol):
    """Anything mapping a text to a score in [0, 1]."""

    def __call__(self, text: str) -> float: ...


def sentiment_score(text: str, lexicon: Lexicon) -> float:
    """0.5 + 0.5 (P - N) / (P + N) over lexicon hits; 0.5 without hits."""
    positive = negative = 0
    for token in tokenize(text):
        if token in lexicon.positive:
            positive += 1
        elif token in lexicon.negative:
            negative += 1
    if positive + negative == 0:
        return 0.5
    return 0.5 + 0.5 * (positive - negative) / (positive + negative)


class LexiconScorer:
    """Default sentiment scorer."""

    def __init__(self, lexicon: Optional[Lexicon] = None):
        self.lexicon = lexicon or default_lexicon()

    def __call__(self, text: str) -> float:
        return sentiment_score(text, self.lexicon)


def emotionality(scores: Sequence[float]) -> Optional[float]:
    """Population standard deviation of per-post sentiment; None without posts."""
    if len(scores) == 0:
        return None
    return float(np.std(np.asarray(scores, dtype=float), ddof=0))


@dataclass(frozen=True)
class Dictionary:
    """
    Corpus-wide unigram probabilities with add-alpha smoothing.

    p(w) = (c(w) + alpha) / (N + alpha (V + 1)); one extra slot holds the
    mass reserved for tokens never seen in the corpus.
    """
    probabilities: Dict[str, float]
    unseen_probability: float
    vocabulary_size: int
    total_tokens: int
    smoothing: float = 1.0

    def probability(self, token: str) -> float:
        return self.probabilities.get(token, self.unseen_probability)

    def information(self, token: str) -> float:
        """Information content of a token in bits."""
        return -math.log2(self.probability(token))


def build_dictionary(token_streams: Iterable[Sequence[str]], smoothing: float = 1.0) -> Dictionary:
    """
    Build the smoothed unigram dictionary over every token stream given.

    Raises:
        LanguageError: no token in the corpus, or smoothing <= 0.
    """
    if smoothing <= 0:
        raise LanguageError("Dictionary smoothing must be > 0")

    counts: Dict[str, int] = {}
    for tokens in token_streams:
        for token in tokens:
            counts[token] = counts.get(token, 0) + 1

    total = sum(counts.values())
    if total == 0:
        raise LanguageError("Cannot build a dictionary from an empty corpus")

    vocabulary = len(counts)
    denominator = total + smoothing * (vocabulary + 1)
    probabilities = {token: (count + smoothing) / denominator for token, count in sorted(counts.items())}
    return Dictionary(
        probabilities=probabilities,
        unseen_probability=smoothing / denominator,
        vocabulary_size=vocabulary,
        total_tokens=total,
        smoothing=smoothing,
    )


def archive_dictionary(archive: Archive, smoothing: float = 1.0) -> Dictionary:
    """Dictionary over all communities of an archive."""
    return build_dictionary((tokenize(p.text) for p in archive.posts), smoothing)


def _texts(posts: Iterable[Union[PostRecord, str]]) -> List[str]:
    return [p if isinstance(p, str) else p.text for p in posts]


def post_complexity(text: str, dictionary: Dictionary) -> Optional[float]:
    """Mean -log2 p(token) of one post; None for a post without tokens."""
    tokens = tokenize(text)
    if not tokens:
        return None
    return sum(dictionary.information(t) for t in tokens) / len(tokens)


def complexity(posts: Iterable[Union[PostRecord, str]], dictionary: Dictionary) -> Optional[float]:
    """Mean post complexity over token-bearing posts; None when there are none."""
    values = [v for v in (post_complexity(t, dictionary) for t in _texts(posts)) if v is not None]
    if not values:
        return None
    return sum(values) / len(values)


@dataclass(frozen=True)
class LanguageRow:
    """Monthly language metrics of one community."""
    community_id: str
    month: str
    scored_posts: int
    sentiment: Optional[float]
    emotionality: Optional[float]
    complexity: Optional[float]


def window_language(window: MonthWindow, dictionary: Dictionary, scorer: SentimentScorer) -> LanguageRow:
    """Language metrics of one window; only token-bearing posts are scored."""
    texts = [t for t in _texts(window.posts) if tokenize(t)]
    scores = [float(scorer(t)) for t in texts]
    for score in scores:
        if not 0.0 <= score <= 1.0:
            raise LanguageError(f"Sentiment scorer returned {score}, outside [0, 1]")
    return LanguageRow(
        community_id=window.community_id,
        month=window.month,
        scored_posts=len(texts),
        sentiment=sum(scores) / len(scores) if scores else None,
        emotionality=emotionality(scores),
        complexity=complexity(texts, dictionary),
    )


def compute_language(windows: Sequence[MonthWindow], dictionary: Dictionary,
                     scorer: Optional[SentimentScorer] = None, jobs: int = 1) -> List[LanguageRow]:
    """Language rows for every window, in window order."""
    scorer = scorer or LexiconScorer()
    rows = run_parallel(lambda w: window_language(w, dictionary, scorer), windows, jobs)
    get_logger().info(f"Computed language metrics for {len(rows)} community-months "
                      f"(vocabulary {dictionary.vocabulary_size})", source="language")
    return rows
