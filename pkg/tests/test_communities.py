from __future__ import annotations

import math

import numpy as np
import pytest

from alignet.communities import (
    detect_communities,
    intersect_partitions,
    prune_small,
    read_partition,
    stability_scan,
    subcommunity_profiles,
    to_undirected_weighted,
    variation_of_information,
    write_partition,
)
from alignet.errors import ConsistencyError, InputError
from alignet.model import Partition, UserSentiment

from conftest import clique_edges


def test_two_cliques_split_in_two(follower_graph, two_cliques) -> None:
    left, right, edges = two_cliques
    partition = detect_communities(follower_graph(edges), 1.0, restarts=5, seed=0)
    assert partition == Partition.from_groups([left, right])


def test_complete_graph_is_one_community(follower_graph) -> None:
    graph = follower_graph(clique_edges([f"n{i}" for i in range(8)]))
    assert detect_communities(graph, 1.0, restarts=5).k == 1


def test_communities_stay_inside_components(follower_graph) -> None:
    graph = follower_graph(clique_edges("abc") + clique_edges("xyz") + [("p", "q")])
    partition = detect_communities(graph, 0.5, restarts=3)
    for cell in partition.cells():
        assert cell <= set("abc") or cell <= set("xyz") or cell <= {"p", "q"}


def test_weights_follow_mention_counts(mention_graph) -> None:
    graph = to_undirected_weighted(mention_graph({("a", "b"): 1.0, ("b", "a"): -1.0}))
    assert graph["a"]["b"]["weight"] == 2.0


def test_detection_is_reproducible(follower_graph) -> None:
    rng = np.random.default_rng(4)
    nodes = [f"u{i:02d}" for i in range(30)]
    edges = [(u, v) for u in nodes for v in nodes if u != v and rng.random() < 0.15]
    graph = follower_graph(edges)
    first = detect_communities(graph, 1.0, restarts=4, seed=8, threads=1)
    assert first == detect_communities(graph, 1.0, restarts=4, seed=8, threads=3)


def test_stability_scan_prefers_the_planted_split(follower_graph, two_cliques) -> None:
    left, right, edges = two_cliques
    partition, diagnostics = stability_scan(follower_graph(edges), [0.5, 1.0, 2.0], restarts=5)
    assert [d.time for d in diagnostics] == [0.5, 1.0, 2.0]
    assert diagnostics[1].resolution == 1.0
    assert partition == Partition.from_groups([left, right])
    chosen = next(d for d in diagnostics if d.k == 2)
    assert chosen.mean_vi == 0.0


def test_stability_scan_with_one_time_matches_detection(follower_graph, two_cliques) -> None:
    _, _, edges = two_cliques
    graph = follower_graph(edges)
    partition, _ = stability_scan(graph, [1.0], restarts=3, seed=5)
    assert partition == detect_communities(graph, 1.0, restarts=3, seed=5)
    with pytest.raises(InputError):
        stability_scan(graph, [])


def test_variation_of_information_example() -> None:
    p1 = Partition.from_groups([["a", "b"], ["c", "d"]])
    p2 = Partition.from_groups([["a", "c"], ["b", "d"]])
    assert variation_of_information(p1, p2) == pytest.approx(2 * math.log(2))
    assert variation_of_information(p1, p1) == 0.0
    assert intersect_partitions(p1, p2).sizes() == [1, 1, 1, 1]


def _random_partition(rng: np.random.Generator, nodes: list[str]) -> Partition:
    labels = rng.integers(0, int(rng.integers(1, 5)), size=len(nodes))
    return Partition.from_labels(dict(zip(nodes, labels.tolist(), strict=True)))


def test_variation_of_information_properties() -> None:
    rng = np.random.default_rng(12)
    nodes = [f"n{i}" for i in range(12)]
    for _ in range(200):
        p1, p2 = _random_partition(rng, nodes), _random_partition(rng, nodes)
        vi = variation_of_information(p1, p2)
        assert vi >= 0.0
        assert vi == pytest.approx(variation_of_information(p2, p1))
        assert (vi == 0.0) == (p1 == p2)


def test_mismatched_nodes_are_rejected() -> None:
    with pytest.raises(InputError):
        variation_of_information(
            Partition.from_groups([["a", "b"]]), Partition.from_groups([["a", "c"]])
        )


def test_intersection_algebra() -> None:
    rng = np.random.default_rng(3)
    nodes = [f"n{i}" for i in range(15)]
    for _ in range(50):
        p1, p2, p3 = (_random_partition(rng, nodes) for _ in range(3))
        assert intersect_partitions(p1, p1) == p1
        assert intersect_partitions(p1, p2) == intersect_partitions(p2, p1)
        left = intersect_partitions(intersect_partitions(p1, p2), p3)
        assert left == intersect_partitions(p1, intersect_partitions(p2, p3))


def test_prune_small() -> None:
    groups = [[f"a{i}" for i in range(25)], [f"b{i}" for i in range(20)], ["c0", "c1", "c2"]]
    kept, removed = prune_small(Partition.from_groups(groups), 21)
    assert kept.k == 1
    assert len(removed) == 23
    same, none_removed = prune_small(Partition.from_groups(groups), 1)
    assert same == Partition.from_groups(groups)
    assert none_removed == frozenset()
    with pytest.raises(ConsistencyError):
        prune_small(Partition.from_groups(groups), 30)


def test_subcommunity_profiles_skip_undefined_values() -> None:
    partition = Partition.from_groups([["a", "b"], ["c"]])
    aggregates = {
        "a": UserSentiment(s_in=1.0, s_out=2.0),
        "b": UserSentiment(s_in=3.0, s_out=None, s_n_in=-1.0),
        "c": UserSentiment(),
    }
    first, second = subcommunity_profiles(partition, aggregates)
    assert first.size == 2
    assert first.sent_vector == (2.0, 2.0, -1.0, None)
    assert second.sent_vector == (None, None, None, None)
    with pytest.raises(ConsistencyError):
        subcommunity_profiles(partition, {"a": UserSentiment()})


def test_partition_file_reloads(tmp_path) -> None:
    partition = Partition.from_groups([["b", "c"], ["a"]])
    path = tmp_path / "partition.csv"
    write_partition(partition, path, column="cell")
    assert read_partition(path, column="cell") == partition
