from __future__ import annotations

import pytest

from alignet.aggregate import (
    aggregate_summary,
    classify_polarity,
    compute_user_sentiment,
    group_users,
    neighbour_sentiment,
    polarity_labels,
    read_user_aggregates,
    user_sentiment,
    write_user_aggregates,
)
from alignet.errors import InputError
from alignet.model import UserSentiment


def test_user_sentiment_means(mention_graph) -> None:
    graph = mention_graph({("b", "a"): 1.0, ("c", "a"): 3.0, ("a", "d"): -2.0}, nodes=["z"])
    assert user_sentiment(graph, "a") == (2.0, -2.0)
    assert user_sentiment(graph, "b") == (None, 1.0)
    assert user_sentiment(graph, "z") == (None, None)
    with pytest.raises(InputError):
        user_sentiment(graph, "nobody")


def test_neighbour_sentiment_of_star_centre(mention_graph) -> None:
    graph = mention_graph({("c", "l1"): 1.0, ("c", "l2"): 2.0, ("c", "l3"): 3.0})
    aggregates = compute_user_sentiment(graph)
    assert aggregates["c"].s_n_in == pytest.approx(2.0)
    assert aggregates["c"].s_n_out is None
    assert aggregates["l1"].s_n_out == pytest.approx(2.0)
    assert neighbour_sentiment(graph, "c", aggregates) == (pytest.approx(2.0), None)


def test_out_neighbours_mode_ignores_in_links(mention_graph) -> None:
    graph = mention_graph({("a", "b"): 2.0, ("c", "a"): -1.0})
    aggregates = compute_user_sentiment(graph, neighbours="out")
    assert aggregates["a"].s_n_in == pytest.approx(2.0)
    assert aggregates["a"].s_n_out is None
    union = compute_user_sentiment(graph, neighbours="union")
    assert union["a"].s_n_out == pytest.approx(-1.0)


def test_isolated_user_has_no_aggregates(mention_graph) -> None:
    graph = mention_graph({("a", "b"): 1.0}, nodes=["z"])
    assert compute_user_sentiment(graph)["z"] == UserSentiment()


def test_threads_do_not_change_aggregates(mention_graph) -> None:
    edges = {(f"u{i}", f"u{(i * 7 + 3) % 40}"): float(i % 9 - 4) for i in range(40)}
    graph = mention_graph(edges)
    assert compute_user_sentiment(graph, threads=1) == compute_user_sentiment(graph, threads=4)


@pytest.mark.parametrize(
    ("score", "label"),
    [(0.5, "positive"), (0.0, "unknown"), (-0.2, "negative"), (None, "unknown")],
)
def test_classify_polarity(score, label) -> None:
    assert classify_polarity(score) == label


def test_polarity_labels_use_requested_field() -> None:
    aggregates = {"a": UserSentiment(s_in=-1.0, s_out=2.0), "b": UserSentiment(s_in=1.0)}
    assert polarity_labels(aggregates) == {"a": "positive", "b": "unknown"}
    assert polarity_labels(aggregates, field="s_in") == {"a": "negative", "b": "positive"}


def test_median_split() -> None:
    groups = group_users({"a": 0.0, "b": 1.0, "c": 2.0, "d": 3.0}, "median_split")
    assert groups == {"a": "below", "b": "below", "c": "above", "d": "above"}


def test_mean_split_with_equal_values_puts_everyone_above() -> None:
    groups = group_users({"a": 1.0, "b": 1.0, "c": 1.0}, "mean_split")
    assert set(groups.values()) == {"above"}


def test_quartiles() -> None:
    groups = group_users({f"u{i}": float(i) for i in range(1, 9)}, "quartiles")
    counts = {label: list(groups.values()).count(label) for label in ("q1", "q2", "q3", "q4")}
    assert counts == {"q1": 2, "q2": 2, "q3": 2, "q4": 2}


def test_quartile_boundaries_go_to_lower_group() -> None:
    groups = group_users({f"u{i}": float(i) for i in range(5)}, "quartiles")
    assert groups == {"u0": "q1", "u1": "q1", "u2": "q2", "u3": "q3", "u4": "q4"}


def test_grouping_skips_undefined_and_needs_one_value() -> None:
    assert group_users({"a": 1.0, "b": None}, "sign") == {"a": "positive"}
    with pytest.raises(InputError):
        group_users({"a": None}, "sign")


def test_aggregates_file_reloads(tmp_path) -> None:
    aggregates = {
        "a": UserSentiment(s_in=0.1 + 0.2, s_out=None, s_n_in=-1.5, s_n_out=None),
        "b": UserSentiment(),
    }
    labels = {"a": "positive"}
    path = tmp_path / "users.csv"
    write_user_aggregates(aggregates, labels, path)
    loaded, loaded_labels = read_user_aggregates(path)
    assert loaded == aggregates
    assert loaded_labels == {"a": "positive", "b": "unknown"}
    assert aggregate_summary(loaded)["s_in"] == {"count": 1, "mean": pytest.approx(0.3)}
