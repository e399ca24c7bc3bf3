"""
Network Module - Reply-interaction graphs and betweenness centralization.

Directed, weighted reply counts are kept as data; geodesics are computed on
the symmetrized simple graph (unit edge lengths, self-replies excluded).
Individual betweenness sums, over unordered pairs j < k, the fraction of
shortest j-k paths through a node. Group betweenness centralization
normalizes the gaps to the maximum so that a star scores exactly 1.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, Mapping, Optional, Tuple, Union

import networkx as nx

from .ingest import MonthWindow, PostRecord

try:
    from ..core.errors import GraphError
    from ..core.export_manager import CSVExporter
except ImportError:
    from core.errors import GraphError
    from core.export_manager import CSVExporter


class InteractionGraph:
    """
    Who-replied-to-whom within one window.

    edges maps (replying author, parent author) to the number of replies;
    self-replies are counted separately and never enter the undirected view.
    """

    def __init__(self, nodes: Iterable[str], edges: Mapping[Tuple[str, str], int],
                 self_replies: Optional[Mapping[str, int]] = None):
        self.nodes = frozenset(nodes)
        self.edges: Dict[Tuple[str, str], int] = dict(sorted(edges.items()))
        self.self_replies: Dict[str, int] = dict(sorted((self_replies or {}).items()))

        for (src, dst), weight in self.edges.items():
            if src == dst:
                raise GraphError(f"Self-loop {src} must be recorded in self_replies")
            if weight < 1:
                raise GraphError(f"Edge {src}->{dst} has weight {weight} < 1")
            if src not in self.nodes or dst not in self.nodes:
                raise GraphError(f"Edge {src}->{dst} references an unknown node")

        undirected = nx.Graph()
        undirected.add_nodes_from(sorted(self.nodes))
        undirected.add_edges_from(sorted({tuple(sorted(pair)) for pair in self.edges}))
        self._undirected = undirected

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def undirected(self) -> nx.Graph:
        """Symmetrized simple graph used for geodesics (a copy)."""
        return self._undirected.copy()

    def to_digraph(self) -> nx.DiGraph:
        """Directed weighted view, self-replies as weighted self-loops."""
        g = nx.DiGraph()
        g.add_nodes_from(sorted(self.nodes))
        for (src, dst), weight in self.edges.items():
            g.add_edge(src, dst, weight=weight)
        for node, weight in self.self_replies.items():
            g.add_edge(node, node, weight=weight)
        return g

    @classmethod
    def from_undirected(cls, graph: nx.Graph) -> "InteractionGraph":
        """Wrap a plain undirected graph (one unit reply per edge)."""
        edges = {(str(u), str(v)): 1 for u, v in graph.edges() if u != v}
        return cls((str(v) for v in graph.nodes()), edges)


@dataclass(frozen=True)
class BetweennessMap:
    """Raw and standardized betweenness of every node."""
    raw: Dict[str, float]
    standardized: Optional[Dict[str, float]]
    n: int


@dataclass(frozen=True)
class NetworkRow:
    """Per-window network metrics."""
    community_id: str
    month: str
    nodes: int
    edges: int
    replies: int
    self_replies: int
    group_betweenness: Optional[float]


def build_graph(posts: Union[MonthWindow, Iterable[PostRecord]],
                index: Mapping[str, PostRecord]) -> InteractionGraph:
    """
    Build the interaction graph of a set of posts.

    Every author is a node. A reply whose parent is in the index adds or
    increments the edge reply author -> parent author; the parent author
    becomes a node even when their post lies outside the window. Parents
    from another community are ignored.
    """
    records = posts.posts if isinstance(posts, MonthWindow) else posts
    nodes = set()
    edges: Dict[Tuple[str, str], int] = {}
    self_replies: Dict[str, int] = {}

    for post in records:
        nodes.add(post.author_id)
        if post.parent_post_id is None:
            continue
        parent = index.get(post.parent_post_id)
        if parent is None or parent.community_id != post.community_id:
            continue
        if parent.author_id == post.author_id:
            self_replies[post.author_id] = self_replies.get(post.author_id, 0) + 1
            continue
        nodes.add(parent.author_id)
        key = (post.author_id, parent.author_id)
        edges[key] = edges.get(key, 0) + 1

    return InteractionGraph(nodes, edges, self_replies)


def standardization_divisor(n: int) -> Optional[float]:
    """(n-1)(n-2)/2, the largest raw betweenness an undirected graph of n nodes allows."""
    if n < 3:
        return None
    return (n - 1) * (n - 2) / 2.0


def betweenness(graph: InteractionGraph) -> BetweennessMap:
    """
    Raw and standardized betweenness via Brandes accumulation.

    Disconnected pairs contribute nothing. Standardized scores are absent
    for graphs with fewer than three nodes.
    """
    if graph.n == 0:
        return BetweennessMap(raw={}, standardized=None, n=0)

    # unnormalized undirected betweenness is already halved to count unordered pairs
    scores = nx.betweenness_centrality(graph._undirected, normalized=False)
    raw = {node: float(scores[node]) for node in sorted(scores)}

    divisor = standardization_divisor(graph.n)
    standardized = None
    if divisor is not None:
        standardized = {node: value / divisor for node, value in raw.items()}
    return BetweennessMap(raw=raw, standardized=standardized, n=graph.n)


def group_betweenness(graph: Union[InteractionGraph, BetweennessMap]) -> Optional[float]:
    """
    Group betweenness centralization in [0, 1], or None when n < 3.

    GB = 2 * sum(B_max - B_i) / ((n-1)^2 (n-2)) on raw scores.
    """
    scores = graph if isinstance(graph, BetweennessMap) else betweenness(graph)
    n = scores.n
    if n < 3:
        return None
    values = list(scores.raw.values())
    top = max(values)
    gap = sum(top - value for value in values)
    value = 2.0 * gap / ((n - 1) ** 2 * (n - 2))
    return min(1.0, max(0.0, value))


def graph_metrics(window: MonthWindow, index: Mapping[str, PostRecord]) -> Tuple[NetworkRow, InteractionGraph]:
    """Network metrics row for one month window, plus the graph itself."""
    graph = build_graph(window, index)
    return NetworkRow(
        community_id=window.community_id,
        month=window.month,
        nodes=graph.n,
        edges=graph._undirected.number_of_edges(),
        replies=sum(graph.edges.values()),
        self_replies=sum(graph.self_replies.values()),
        group_betweenness=group_betweenness(graph),
    ), graph


def dump_edge_list(graph: InteractionGraph, path: Union[str, Path]) -> int:
    """Write the directed edge list (from, to, weight) as CSV, self-replies included."""
    rows = [{"from": src, "to": dst, "weight": w} for (src, dst), w in graph.edges.items()]
    rows.extend({"from": node, "to": node, "weight": w} for node, w in graph.self_replies.items())
    rows.sort(key=lambda r: (r["from"], r["to"]))
    return CSVExporter().export(rows, str(path), columns=["from", "to", "weight"]).ensure().size
