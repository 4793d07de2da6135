from __future__ import annotations

from itertools import combinations

import numpy as np
import pytest

from alignet.errors import ConsistencyError
from alignet.graphs import (
    align_networks,
    build_follower_graph,
    build_mention_graph,
    largest_connected_component,
    read_follower_edges,
    read_mention_edges,
    reciprocal_subgraph,
    summary_stats,
    write_follower_edges,
    write_mention_edges,
)
from alignet.model import Corpus, FollowerEdgeList, SentimentScore


def test_mention_graph_averages_edge_sentiment(make_message) -> None:
    corpus = Corpus.from_messages(
        [
            make_message("m1", "a", ts=1, mentions=["b"]),
            make_message("m2", "a", ts=2, kind="reply", mentions=["b", "a"], reply_to="b"),
            make_message("m3", "b", ts=3),
        ]
    )
    scores = {
        "m1": SentimentScore(3, -1),
        "m2": SentimentScore(1, -2),
        "m3": SentimentScore(1, -1),
    }
    graph = build_mention_graph(corpus, scores)
    assert graph.edge_set() == {("a", "b")}
    edge = graph.edges[("a", "b")]
    assert edge.mean_sentiment == pytest.approx(0.5)
    assert (edge.n_original, edge.n_reply, edge.n_retweet) == (1, 1, 0)
    assert edge.total == 2


def test_mention_graph_needs_every_score(make_message) -> None:
    corpus = Corpus.from_messages([make_message("m1", "a", mentions=["b"])])
    with pytest.raises(ConsistencyError, match="m1"):
        build_mention_graph(corpus, {})


def test_follower_graph_nodes_are_edge_endpoints() -> None:
    graph = build_follower_graph(FollowerEdgeList.from_pairs([("a", "b"), ("c", "b")]))
    assert graph.nodes == {"a", "b", "c"}


def test_reciprocal_subgraph(mention_graph, follower_graph) -> None:
    mentions = mention_graph({("a", "b"): 1.0, ("b", "a"): -1.0, ("a", "c"): 2.0})
    recip = reciprocal_subgraph(mentions)
    assert recip.edge_set() == {("a", "b"), ("b", "a")}
    assert recip.nodes == {"a", "b"}
    assert recip.edges[("b", "a")].mean_sentiment == -1.0

    tournament = follower_graph([("a", "b"), ("b", "c"), ("a", "c")])
    assert reciprocal_subgraph(tournament).edge_set() == frozenset()


def test_reciprocal_subgraph_properties(mention_graph, follower_graph) -> None:
    rng = np.random.default_rng(3)
    for _ in range(200):
        nodes = [f"n{i:02d}" for i in range(int(rng.integers(2, 12)))]
        edges = [(u, v) for u in nodes for v in nodes if u != v and rng.random() < 0.3]
        graphs = (
            follower_graph(edges, nodes=nodes),
            mention_graph({edge: float(rng.integers(-4, 5)) for edge in edges}),
        )
        for graph in graphs:
            recip = reciprocal_subgraph(graph)
            assert reciprocal_subgraph(recip) == recip
            stats = summary_stats(recip)
            assert stats.reciprocal_links == stats.links
            assert stats.links == summary_stats(graph).reciprocal_links


def test_largest_component_breaks_ties_by_smallest_id(follower_graph) -> None:
    graph = follower_graph([("c", "d"), ("d", "c"), ("a", "b"), ("b", "a")])
    assert largest_connected_component(graph).nodes == {"a", "b"}
    bigger = follower_graph([("a", "b"), ("x", "y"), ("y", "z")])
    assert largest_connected_component(bigger).nodes == {"x", "y", "z"}


def test_align_networks_keeps_common_users(mention_graph, follower_graph) -> None:
    mentions = mention_graph({("a", "b"): 1, ("b", "a"): 1, ("b", "c"): 2, ("c", "b"): 2})
    followers = follower_graph([("b", "c"), ("c", "b"), ("c", "d"), ("d", "c")])
    aligned_mentions, aligned_followers = align_networks(mentions, followers)
    assert aligned_mentions.nodes == aligned_followers.nodes == {"b", "c"}
    assert aligned_mentions.edge_set() == {("b", "c"), ("c", "b")}
    assert aligned_followers.edge_set() == {("b", "c"), ("c", "b")}


def test_align_networks_without_overlap_fails(mention_graph, follower_graph) -> None:
    mentions = mention_graph({("a", "b"): 1, ("b", "a"): 1})
    followers = follower_graph([("c", "d"), ("d", "c")])
    with pytest.raises(ConsistencyError):
        align_networks(mentions, followers)


def test_summary_stats_triangle_and_path(follower_graph) -> None:
    triangle = follower_graph(
        [(u, v) for u, v in [("a", "b"), ("b", "c"), ("c", "a")]]
        + [(v, u) for u, v in [("a", "b"), ("b", "c"), ("c", "a")]]
    )
    stats = summary_stats(triangle)
    assert stats.transitivity == 1.0
    assert stats.reciprocal_links == 6
    assert stats.avg_out_degree == 2.0

    path = summary_stats(follower_graph([("a", "b"), ("b", "c")]))
    assert path.transitivity == 0.0
    assert path.reciprocal_links == 0

    empty = summary_stats(follower_graph([]))
    assert empty.to_dict()["nodes"] == 0


def _brute_transitivity(nodes: list[str], undirected: set[frozenset[str]]) -> float:
    closed = triples = 0
    for v in nodes:
        neighbours = sorted(u for u in nodes if frozenset((u, v)) in undirected)
        for u, w in combinations(neighbours, 2):
            triples += 1
            closed += frozenset((u, w)) in undirected
    return closed / triples if triples else 0.0


def test_transitivity_matches_brute_force(follower_graph) -> None:
    rng = np.random.default_rng(11)
    for _ in range(500):
        n = int(rng.integers(2, 13))
        nodes = [f"n{i:02d}" for i in range(n)]
        edges = [(u, v) for u in nodes for v in nodes if u != v and rng.random() < 0.25]
        graph = follower_graph(edges, nodes=nodes)
        undirected = {frozenset(edge) for edge in edges}
        expected = _brute_transitivity(nodes, undirected)
        assert summary_stats(graph).transitivity == pytest.approx(expected, abs=1e-12)


def test_edge_files_reload(tmp_path, mention_graph, follower_graph) -> None:
    mentions = mention_graph({("a", "b"): 0.1 + 0.2, ("b", "a"): -4.0}, nodes=["z"])
    path = tmp_path / "mentions.csv"
    write_mention_edges(mentions, path)
    assert read_mention_edges(path, nodes=mentions.nodes) == mentions

    followers = follower_graph([("a", "b"), ("c", "a")])
    fpath = tmp_path / "followers.csv"
    write_follower_edges(followers, fpath)
    assert read_follower_edges(fpath) == followers
