"""Mention and follower graphs, reciprocal subnetworks and network alignment."""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field, replace
from pathlib import Path

import networkx as nx
import pandas as pd

from .errors import ConsistencyError
from .logging import get_logger
from .model import Corpus, FollowerEdgeList, SentimentScore, UserId

logger = get_logger(__name__)

type Edge = tuple[UserId, UserId]

MENTION_COLUMNS = ["source", "target", "mean_sentiment", "n_original", "n_reply", "n_retweet"]
FOLLOWER_COLUMNS = ["follower", "followee"]


@dataclass(frozen=True, slots=True)
class EdgeData:
    mean_sentiment: float
    n_original: int = 0
    n_reply: int = 0
    n_retweet: int = 0

    @property
    def total(self) -> int:
        return self.n_original + self.n_reply + self.n_retweet

    def with_sentiment(self, value: float) -> EdgeData:
        return replace(self, mean_sentiment=value)


@dataclass(frozen=True, slots=True)
class InteractionGraph:
    """Directed mention graph; edge data holds mean sentiment and per-kind counts."""

    nodes: frozenset[UserId] = field(default=frozenset())
    edges: Mapping[Edge, EdgeData] = field(default_factory=dict)

    def edge_set(self) -> frozenset[Edge]:
        return frozenset(self.edges)

    def restrict(self, keep: Iterable[UserId]) -> InteractionGraph:
        nodes = self.nodes & frozenset(keep)
        edges = {e: d for e, d in self.edges.items() if e[0] in nodes and e[1] in nodes}
        return InteractionGraph(nodes=nodes, edges=edges)

    def keep_edges(self, keep: Iterable[Edge]) -> InteractionGraph:
        wanted = set(keep)
        edges = {e: d for e, d in sorted(self.edges.items()) if e in wanted}
        return InteractionGraph(nodes=_endpoints(edges), edges=edges)


@dataclass(frozen=True, slots=True)
class FollowerGraph:
    nodes: frozenset[UserId] = field(default=frozenset())
    edges: frozenset[Edge] = field(default=frozenset())

    def edge_set(self) -> frozenset[Edge]:
        return self.edges

    def restrict(self, keep: Iterable[UserId]) -> FollowerGraph:
        nodes = self.nodes & frozenset(keep)
        edges = frozenset(e for e in self.edges if e[0] in nodes and e[1] in nodes)
        return FollowerGraph(nodes=nodes, edges=edges)

    def keep_edges(self, keep: Iterable[Edge]) -> FollowerGraph:
        edges = self.edges & frozenset(keep)
        return FollowerGraph(nodes=_endpoints(edges), edges=edges)


type Graph = InteractionGraph | FollowerGraph


@dataclass(frozen=True, slots=True)
class GraphStats:
    nodes: int
    links: int
    reciprocal_links: int
    avg_out_degree: float
    transitivity: float

    def to_dict(self) -> dict[str, int | float]:
        return {
            "nodes": self.nodes,
            "links": self.links,
            "reciprocal_links": self.reciprocal_links,
            "avg_out_degree": self.avg_out_degree,
            "transitivity": self.transitivity,
        }


def _endpoints(edges: Iterable[Edge]) -> frozenset[UserId]:
    return frozenset(node for edge in edges for node in edge)


def build_mention_graph(
    corpus: Corpus, scores: Mapping[str, SentimentScore]
) -> InteractionGraph:
    sums: dict[Edge, int] = {}
    counts: dict[Edge, list[int]] = {}
    kind_slot = {"original": 0, "reply": 1, "retweet": 2}
    for message in corpus.messages:
        score = scores.get(message.id)
        if score is None:
            raise ConsistencyError(f"No sentiment score for message {message.id!r}.")
        for target in message.mentions:
            if target == message.author:
                continue
            edge = (message.author, target)
            sums[edge] = sums.get(edge, 0) + score.difference
            counts.setdefault(edge, [0, 0, 0])[kind_slot[message.kind]] += 1

    edges: dict[Edge, EdgeData] = {}
    for edge in sorted(counts):
        n_original, n_reply, n_retweet = counts[edge]
        total = n_original + n_reply + n_retweet
        edges[edge] = EdgeData(
            mean_sentiment=sums[edge] / total,
            n_original=n_original,
            n_reply=n_reply,
            n_retweet=n_retweet,
        )
    graph = InteractionGraph(nodes=_endpoints(edges), edges=edges)
    logger.info("graph.mention.built", nodes=len(graph.nodes), edges=len(edges))
    return graph


def build_follower_graph(follower_edges: FollowerEdgeList) -> FollowerGraph:
    edges = frozenset(follower_edges.edges)
    graph = FollowerGraph(nodes=_endpoints(edges), edges=edges)
    logger.info("graph.follower.built", nodes=len(graph.nodes), edges=len(edges))
    return graph


def reciprocal_subgraph[G: (InteractionGraph, FollowerGraph)](g: G) -> G:
    edges = g.edge_set()
    return g.keep_edges(e for e in edges if (e[1], e[0]) in edges)


def to_networkx(g: Graph) -> nx.DiGraph:
    digraph = nx.DiGraph()
    digraph.add_nodes_from(sorted(g.nodes))
    digraph.add_edges_from(sorted(g.edge_set()))
    return digraph


def largest_connected_component[G: (InteractionGraph, FollowerGraph)](g: G) -> G:
    if not g.nodes:
        return g
    components = nx.weakly_connected_components(to_networkx(g))
    largest = min(components, key=lambda comp: (-len(comp), min(comp)))
    return g.restrict(largest)


def align_networks(
    mention_recip: InteractionGraph, follower_recip: FollowerGraph
) -> tuple[InteractionGraph, FollowerGraph]:
    mention_lcc = largest_connected_component(mention_recip)
    follower_lcc = largest_connected_component(follower_recip)
    common = mention_lcc.nodes & follower_lcc.nodes
    if not common:
        raise ConsistencyError(
            "Mention and follower networks share no users: "
            f"mention LCC has {len(mention_lcc.nodes)} nodes, "
            f"follower LCC has {len(follower_lcc.nodes)} nodes."
        )
    logger.info(
        "graph.aligned",
        mention_lcc=len(mention_lcc.nodes),
        follower_lcc=len(follower_lcc.nodes),
        nodes=len(common),
    )
    return mention_recip.restrict(common), follower_recip.restrict(common)


def summary_stats(g: Graph) -> GraphStats:
    edges = g.edge_set()
    n_nodes = len(g.nodes)
    if n_nodes == 0:
        return GraphStats(
            nodes=0, links=0, reciprocal_links=0, avg_out_degree=0.0, transitivity=0.0
        )
    reciprocal = sum(1 for u, v in edges if (v, u) in edges)
    undirected = to_networkx(g).to_undirected(as_view=False)
    return GraphStats(
        nodes=n_nodes,
        links=len(edges),
        reciprocal_links=reciprocal,
        avg_out_degree=len(edges) / n_nodes,
        transitivity=float(nx.transitivity(undirected)),
    )


def write_mention_edges(g: InteractionGraph, path: Path) -> None:
    rows = [
        (u, v, d.mean_sentiment, d.n_original, d.n_reply, d.n_retweet)
        for (u, v), d in sorted(g.edges.items())
    ]
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(rows, columns=MENTION_COLUMNS).to_csv(path, index=False, lineterminator="\n")


def read_mention_edges(path: Path, *, nodes: Iterable[UserId] | None = None) -> InteractionGraph:
    frame = pd.read_csv(
        path,
        dtype={"source": str, "target": str},
        keep_default_na=False,
        float_precision="round_trip",
    )
    edges = {
        (str(row.source), str(row.target)): EdgeData(
            mean_sentiment=float(row.mean_sentiment),
            n_original=int(row.n_original),
            n_reply=int(row.n_reply),
            n_retweet=int(row.n_retweet),
        )
        for row in frame.itertuples(index=False)
    }
    edges = dict(sorted(edges.items()))
    node_set = frozenset(nodes) if nodes is not None else _endpoints(edges)
    return InteractionGraph(nodes=node_set | _endpoints(edges), edges=edges)


def write_follower_edges(g: FollowerGraph, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(sorted(g.edges), columns=FOLLOWER_COLUMNS).to_csv(
        path, index=False, lineterminator="\n"
    )


def read_follower_edges(path: Path, *, nodes: Iterable[UserId] | None = None) -> FollowerGraph:
    frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    edges = frozenset(zip(frame["follower"], frame["followee"], strict=True))
    node_set = frozenset(nodes) if nodes is not None else _endpoints(edges)
    return FollowerGraph(nodes=node_set | _endpoints(edges), edges=edges)


def write_nodes(nodes: Iterable[UserId], path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(f"{node}\n" for node in sorted(nodes)), encoding="utf-8")


def read_nodes(path: Path) -> frozenset[UserId]:
    lines = path.read_text(encoding="utf-8").splitlines()
    return frozenset(line.strip() for line in lines if line.strip())
