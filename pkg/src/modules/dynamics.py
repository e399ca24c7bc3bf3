"""
Dynamics Module - Time-dependent community variables.

Rotating leadership counts how often members' betweenness reverses direction
across daily snapshots of a trailing reply window; the remaining variables
(joiners, size, age, launch phase, past activity) are monthly counts.
"""

from bisect import bisect_right
from dataclasses import dataclass
from datetime import timedelta
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .ingest import Archive, MonthWindow, PostRecord, month_start, months_between, post_index, shift_month
from .netgraph import betweenness, build_graph

try:
    from ..core.config_manager import DynamicsConfig
    from ..core.logging_system import get_logger
    from ..core.workflow import run_parallel
except ImportError:
    from core.config_manager import DynamicsConfig
    from core.logging_system import get_logger
    from core.workflow import run_parallel


ONE_SECOND = timedelta(seconds=1)


@dataclass(frozen=True)
class MemberSeries:
    """Raw betweenness of one member at each snapshot of a month."""
    author_id: str
    values: Tuple[float, ...]
    spacing: timedelta = timedelta(days=1)
    trail: timedelta = timedelta(days=7)


@dataclass(frozen=True)
class DynamicsRow:
    """Monthly dynamics of one community."""
    community_id: str
    month: str
    posts: int
    active_members: int
    joiners: int
    size: int
    age: int
    launch_phase: bool
    past_activity: int
    rotating_leadership: float


def snapshot_instants(month: str, spacing: timedelta) -> List:
    """
    Snapshot instants t_k = start + k*spacing - 1s inside the month, k >= 1.
    A 30-day month with daily spacing has 30 snapshots.
    """
    start = month_start(month)
    end = month_start(shift_month(month, 1))
    count = (end - start) // spacing
    return [start + k * spacing - ONE_SECOND for k in range(1, count + 1)]


def betweenness_series(community_posts: Sequence[PostRecord], month: str,
                       index: Mapping[str, PostRecord],
                       spacing: timedelta = timedelta(days=1),
                       trail: timedelta = timedelta(days=7)) -> List[MemberSeries]:
    """
    Betweenness series of every member who posted in the month.

    Each snapshot graph holds the community posts with t - trail < timestamp <= t,
    earlier months included. Members absent from a snapshot score 0.

    Args:
        community_posts: All posts of one community, sorted by timestamp.
        month: YYYY-MM label.
        index: post_id -> PostRecord, used to resolve reply parents.
        spacing: Distance between snapshots.
        trail: Length of the trailing window.
    """
    if not spacing <= trail <= timedelta(days=31):
        raise ValueError("spacing <= trail <= 31 days is required")

    start = month_start(month)
    end = month_start(shift_month(month, 1))
    timestamps = [p.timestamp for p in community_posts]
    lo_month = bisect_right(timestamps, start - ONE_SECOND)
    hi_month = bisect_right(timestamps, end - ONE_SECOND)
    members = sorted({p.author_id for p in community_posts[lo_month:hi_month]})
    if not members:
        return []

    columns: Dict[str, List[float]] = {m: [] for m in members}
    previous_bounds: Optional[Tuple[int, int]] = None
    raw: Dict[str, float] = {}

    for t in snapshot_instants(month, spacing):
        bounds = (bisect_right(timestamps, t - trail), bisect_right(timestamps, t))
        if bounds != previous_bounds:
            lo, hi = bounds
            raw = betweenness(build_graph(community_posts[lo:hi], index)).raw if hi > lo else {}
            previous_bounds = bounds
        for member in members:
            columns[member].append(raw.get(member, 0.0))

    return [MemberSeries(m, tuple(columns[m]), spacing, trail) for m in members]


def count_oscillations(series: Sequence[float]) -> int:
    """
    Number of strict interior local extrema.

    Runs of equal values are collapsed first; an interior run counts once when
    both neighbours lie on the same side of it (a peak or a trough), and not
    at all when the series passes through it.
    """
    runs: List[float] = []
    for value in series:
        if not runs or value != runs[-1]:
            runs.append(value)

    count = 0
    for left, mid, right in zip(runs, runs[1:], runs[2:]):
        if (mid > left and mid > right) or (mid < left and mid < right):
            count += 1
    return count


def rotating_leadership(series: Sequence[MemberSeries]) -> float:
    """Mean oscillation count over member series; 0 when there are none."""
    if not series:
        return 0.0
    return sum(count_oscillations(s.values) for s in series) / len(series)


def _first_months(windows: Sequence[MonthWindow]) -> Dict[str, str]:
    """Month of each author's earliest post in the community."""
    first: Dict[str, str] = {}
    for window in sorted(windows, key=lambda w: w.month):
        for post in window.posts:
            first.setdefault(post.author_id, window.month)
    return first


def joiners(windows: Sequence[MonthWindow], month: str) -> int:
    """Authors whose first post in the community falls in the month."""
    return sum(1 for m in _first_months(windows).values() if m == month)


def size(windows: Sequence[MonthWindow], month: str) -> int:
    """Distinct contributors up to the end of the month."""
    return sum(1 for m in _first_months(windows).values() if m <= month)


def age(first_month: str, month: str) -> int:
    """Months since start-up; the first month with a post is 1."""
    return months_between(first_month, month)


def launch_phase(age_months: int, size_members: int, age_threshold: int = 3,
                 size_threshold: int = 50, rule: str = "or") -> bool:
    """Launch phase when age <= age_threshold or (rule 'and': and) size < size_threshold."""
    young = age_months <= age_threshold
    small = size_members < size_threshold
    if rule == "or":
        return young or small
    if rule == "and":
        return young and small
    raise ValueError(f"Unknown launch rule '{rule}'")


def past_activity(windows: Sequence[MonthWindow], month: str) -> int:
    """Post count of the previous month; 0 in the first month."""
    previous = shift_month(month, -1)
    for window in windows:
        if window.month == previous:
            return len(window.posts)
    return 0


def community_dynamics(community_posts: Sequence[PostRecord], windows: Sequence[MonthWindow],
                       index: Mapping[str, PostRecord],
                       config: Optional[DynamicsConfig] = None) -> List[DynamicsRow]:
    """All monthly rows of one community in a single pass."""
    config = config or DynamicsConfig()
    spacing = timedelta(days=config.snapshot_days)
    trail = timedelta(days=config.trail_days)
    windows = sorted(windows, key=lambda w: w.month)
    first_month = windows[0].month
    first_seen = _first_months(windows)

    rows: List[DynamicsRow] = []
    cumulative = 0
    previous_posts = 0
    for i, window in enumerate(windows):
        new_members = sum(1 for m in first_seen.values() if m == window.month)
        cumulative += new_members
        community_age = age(first_month, window.month)
        series = betweenness_series(community_posts, window.month, index, spacing, trail)
        rows.append(DynamicsRow(
            community_id=window.community_id,
            month=window.month,
            posts=len(window.posts),
            active_members=len(window.authors),
            joiners=new_members,
            size=cumulative,
            age=community_age,
            launch_phase=launch_phase(community_age, cumulative, config.launch_age,
                                      config.launch_size, config.launch_rule),
            past_activity=previous_posts if i > 0 else 0,
            rotating_leadership=rotating_leadership(series),
        ))
        previous_posts = len(window.posts)
    return rows


def compute_dynamics(archive: Archive, windows: Sequence[MonthWindow],
                     config: Optional[DynamicsConfig] = None, jobs: int = 1) -> List[DynamicsRow]:
    """Dynamics rows for every window, ordered by community then month."""
    logger = get_logger()
    index = post_index(archive)
    by_community: Dict[str, List[MonthWindow]] = {}
    for window in windows:
        by_community.setdefault(window.community_id, []).append(window)

    def run_one(community_id: str) -> List[DynamicsRow]:
        rows = community_dynamics(archive.community_posts(community_id), by_community[community_id],
                                  index, config)
        logger.debug(f"{community_id}: {len(rows)} months", source="dynamics")
        return rows

    results = run_parallel(run_one, sorted(by_community), jobs)
    rows = [row for community_rows in results for row in community_rows]
    logger.info(f"Computed dynamics for {len(rows)} community-months", source="dynamics")
    return rows
