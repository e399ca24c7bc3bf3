"""
Synthetic Archive Module - Forum archives with controllable structure.

Each community has one hub member. The centralization dial is the probability
that a reply targets the hub's latest post rather than a uniformly chosen
member's; the rotation dial is the daily probability that the hub role moves
to another member. Joiners post once in the month they join, and their monthly
count can be coupled to that month's centralization. Post text mixes common
and rare vocabulary with lexicon words at a sentiment-biased polarity.
"""

import json
import string
from dataclasses import asdict, dataclass, fields
from datetime import timedelta
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from .ingest import Archive, PostRecord, month_start, shift_month
from .language import Lexicon, default_lexicon

try:
    from ..core.errors import SynthError
    from ..core.logging_system import get_logger
    from ..core.workflow import run_parallel
except ImportError:
    from core.errors import SynthError
    from core.logging_system import get_logger
    from core.workflow import run_parallel


COMMON_WORDS = (
    "the", "and", "of", "to", "in", "for", "on", "with", "this", "that",
    "we", "our", "you", "your", "is", "are", "was", "have", "has", "from",
    "patients", "clinic", "health", "care", "staff", "training", "program",
    "community", "members", "question", "answer", "team", "district", "data",
    "report", "meeting", "project", "hospital", "nurses", "doctors",
)
RARE_POOL_SIZE = 4000
LEXICON_RATE = 0.1
HUB_FIRST_POST = timedelta(minutes=1)
DIALS = ("centralization", "rotation", "sentiment_bias", "rare_share",
         "centralization_jitter", "joiner_coupling")


def _letters(index: int, width: int = 3) -> str:
    """Digit-free encoding of an index: 0 -> 'aaa', 1 -> 'aab', ..."""
    chars = []
    for _ in range(width):
        index, rest = divmod(index, 26)
        chars.append(string.ascii_lowercase[rest])
    return "".join(reversed(chars))


RARE_WORDS = tuple(f"rar{_letters(i)}" for i in range(RARE_POOL_SIZE))


@dataclass(frozen=True)
class CommunitySpec:
    """Generator settings of one synthetic community."""
    community_id: str
    members: int = 100
    months: int = 12
    start: str = "2010-01"
    posts_per_month: float = 30.0
    centralization: float = 0.5
    rotation: float = 0.0
    sentiment_bias: float = 0.5
    rare_share: float = 0.2
    seed: int = 0
    centralization_jitter: float = 0.0
    joiner_coupling: float = 0.0

    def __post_init__(self):
        for name in DIALS:
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise SynthError(f"{self.community_id}: {name} = {value} outside [0, 1]")
        if self.months < 1:
            raise SynthError(f"{self.community_id}: months must be >= 1")
        if self.posts_per_month < 0:
            raise SynthError(f"{self.community_id}: posts_per_month must be >= 0")
        if self.members < 1 and self.posts_per_month > 0:
            raise SynthError(f"{self.community_id}: 0 members cannot post at rate {self.posts_per_month}")
        if self.members < 0:
            raise SynthError(f"{self.community_id}: members must be >= 0")
        try:
            month_start(self.start)
        except ValueError as e:
            raise SynthError(f"{self.community_id}: start '{self.start}' is not YYYY-MM") from e


class _CommunityGenerator:
    """Draws the posts of one community from its own random stream."""

    def __init__(self, spec: CommunitySpec, lexicon: Lexicon):
        self.spec = spec
        self.rng = np.random.default_rng(spec.seed)
        self.positive = sorted(lexicon.positive)
        self.negative = sorted(lexicon.negative)
        self.posts: List[PostRecord] = []
        self.joined: List[str] = []
        self.posted: List[str] = []
        self.position: Dict[str, int] = {}
        self.latest: Dict[str, str] = {}
        self.hub: Optional[str] = None

    def _member_id(self, k: int) -> str:
        return f"{self.spec.community_id}-m{k:05d}"

    def _text(self) -> str:
        words = []
        for _ in range(5 + int(self.rng.poisson(10))):
            roll = self.rng.random()
            if roll < LEXICON_RATE and self.positive and self.negative:
                pool = self.positive if self.rng.random() < self.spec.sentiment_bias else self.negative
                words.append(pool[int(self.rng.integers(len(pool)))])
            elif self.rng.random() < self.spec.rare_share:
                words.append(RARE_WORDS[int(self.rng.integers(RARE_POOL_SIZE))])
            else:
                words.append(COMMON_WORDS[int(self.rng.integers(len(COMMON_WORDS)))])
        return " ".join(words)

    def _pick(self, candidates: Sequence[str]) -> str:
        return candidates[int(self.rng.integers(len(candidates)))]

    def _pick_other(self, exclude: str) -> Optional[str]:
        """Uniform member who has posted, other than exclude."""
        skip = self.position.get(exclude)
        count = len(self.posted) - (skip is not None)
        if count <= 0:
            return None
        k = int(self.rng.integers(count))
        if skip is not None and k >= skip:
            k += 1
        return self.posted[k]

    def _parent(self, author: str, centralization: float) -> Optional[str]:
        """Post the author replies to; None starts a thread."""
        if author == self.hub:
            other = self._pick_other(author)
            return self.latest[other] if other else None
        if self.rng.random() < centralization:
            return self.latest[self.hub]
        return self.latest[self._pick_other(author) or self.hub]

    def _emit(self, author: str, when, parent: Optional[str]) -> None:
        post_id = f"{self.spec.community_id}-p{len(self.posts) + 1:06d}"
        self.posts.append(PostRecord(post_id, self.spec.community_id, author, parent, when, self._text()))
        if author not in self.latest:
            self.position[author] = len(self.posted)
            self.posted.append(author)
        self.latest[author] = post_id

    def _rotate(self) -> None:
        if self.rng.random() < self.spec.rotation:
            other = self._pick_other(self.hub)
            if other:
                self.hub = other

    def generate(self) -> List[PostRecord]:
        spec = self.spec
        base_joiners = spec.members / spec.months

        for m in range(spec.months):
            label = shift_month(spec.start, m)
            start = month_start(label)
            seconds = int((month_start(shift_month(label, 1)) - start).total_seconds())
            c_m = float(np.clip(spec.centralization + spec.centralization_jitter * self.rng.standard_normal(),
                                0.0, 1.0))

            rate = base_joiners * (1.0 - spec.joiner_coupling + 2.0 * spec.joiner_coupling * c_m)
            remaining = spec.members - len(self.joined)
            new_count = min(remaining, int(self.rng.poisson(rate)))
            if not self.joined and remaining > 0:
                new_count = max(new_count, 1)
            regular = int(self.rng.poisson(spec.posts_per_month)) if self.joined or new_count else 0

            first = len(self.joined)
            newcomers = [self._member_id(first + i) for i in range(new_count)]
            if self.hub is None and newcomers:
                self.hub = newcomers[0]
                self.joined.append(self.hub)
                self._emit(self.hub, start + HUB_FIRST_POST, None)
                newcomers = newcomers[1:]

            events = [(int(t), "join", name) for t, name in
                      zip(self.rng.integers(120, seconds, size=len(newcomers)), newcomers)]
            events += [(int(t), "post", None) for t in self.rng.integers(120, seconds, size=regular)]
            events.sort(key=lambda e: e[0])

            day = 0
            for offset, kind, name in events:
                while day < offset // 86400:
                    day += 1
                    self._rotate()
                if kind == "join":
                    self.joined.append(name)
                    author = name
                else:
                    author = self._pick(self.joined)
                when = start + timedelta(seconds=offset)
                self._emit(author, when, self._parent(author, c_m))
            while day < seconds // 86400:
                day += 1
                self._rotate()

        return self.posts


def generate_community(spec: CommunitySpec, lexicon: Optional[Lexicon] = None) -> List[PostRecord]:
    """Posts of one community, fully determined by its spec and seed."""
    return _CommunityGenerator(spec, lexicon or default_lexicon()).generate()


def generate_archive(specs: Sequence[CommunitySpec], lexicon: Optional[Lexicon] = None,
                     jobs: int = 1) -> Archive:
    """
    Archive holding every specified community.

    Raises:
        SynthError: no specs, duplicate community ids, or nothing generated.
    """
    if not specs:
        raise SynthError("No community specs given")
    ids = [s.community_id for s in specs]
    if len(set(ids)) != len(ids):
        raise SynthError("Duplicate community ids in specs")

    lexicon = lexicon or default_lexicon()
    communities = run_parallel(lambda s: generate_community(s, lexicon), specs, jobs)
    posts = sorted((p for community in communities for p in community), key=lambda p: p.timestamp)
    if not posts:
        raise SynthError("Specs generated no posts")

    archive = Archive(
        posts=tuple(posts),
        communities=frozenset(p.community_id for p in posts),
        span=(posts[0].timestamp, posts[-1].timestamp),
    )
    get_logger().info(f"Generated {len(posts)} posts, {len({p.author_id for p in posts})} members, "
                      f"{len(archive.communities)} communities", source="synth")
    return archive


def spec_from_dict(data: Dict) -> CommunitySpec:
    known = {f.name for f in fields(CommunitySpec)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise SynthError(f"Unknown community spec keys: {', '.join(unknown)}")
    if "community_id" not in data:
        raise SynthError("Community spec lacks community_id")
    try:
        return CommunitySpec(**data)
    except TypeError as e:
        raise SynthError(f"Invalid community spec: {e}") from e


def load_specs(path: Union[str, Path]) -> List[CommunitySpec]:
    """Read specs from a JSON list or an object with a 'communities' list."""
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise SynthError(f"Cannot read spec file {path}: {e}") from e
    if isinstance(data, dict):
        data = data.get("communities")
    if not isinstance(data, list) or not all(isinstance(item, dict) for item in data):
        raise SynthError(f"{path}: expected a list of community specs")
    return [spec_from_dict(item) for item in data]


def specs_to_json(specs: Sequence[CommunitySpec]) -> Dict:
    return {"communities": [asdict(s) for s in specs]}


def full_scale_specs(seed: int = 0) -> List[CommunitySpec]:
    """Sixteen communities over 47 months, about 20,000 posts and 14,000 members."""
    centralization = np.linspace(0.2, 0.9, 16)
    rotation = np.linspace(0.05, 0.6, 16)[::-1]
    return [
        CommunitySpec(
            community_id=f"c{i + 1:02d}",
            members=875,
            months=47,
            start=shift_month("2008-01", i),
            posts_per_month=8.0,
            centralization=round(float(centralization[i]), 4),
            rotation=round(float(rotation[i]), 4),
            sentiment_bias=0.6,
            rare_share=0.2,
            seed=seed * 1000 + i,
            centralization_jitter=0.15,
            joiner_coupling=0.5,
        )
        for i in range(16)
    ]
