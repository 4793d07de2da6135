from __future__ import annotations

from collections.abc import Callable, Iterable
from pathlib import Path
from typing import Any

import msgspec
import pytest

from alignet.graphs import EdgeData, FollowerGraph, InteractionGraph
from alignet.lexicon import Lexicon, load_test_lexicon
from alignet.model import Message, MessageKind


@pytest.fixture
def test_lexicon() -> Lexicon:
    return load_test_lexicon()


@pytest.fixture
def make_message() -> Callable[..., Message]:
    def _make(
        id: str,
        author: str,
        ts: int = 0,
        text: str = "",
        kind: MessageKind = "original",
        mentions: Iterable[str] = (),
        hashtags: Iterable[str] = (),
        reply_to: str | None = None,
        retweet_of: str | None = None,
    ) -> Message:
        return Message(
            id=id,
            author=author,
            timestamp=ts,
            text=text,
            kind=kind,
            mentions=tuple(mentions),
            hashtags=tuple(hashtags),
            reply_to=reply_to,
            retweet_of=retweet_of,
        )

    return _make


@pytest.fixture
def write_jsonl(tmp_path: Path) -> Callable[..., Path]:
    def _write(records: Iterable[dict[str, Any] | str], name: str = "messages.jsonl") -> Path:
        path = tmp_path / name
        lines = [
            record if isinstance(record, str) else msgspec.json.encode(record).decode()
            for record in records
        ]
        path.write_text("".join(f"{line}\n" for line in lines), encoding="utf-8")
        return path

    return _write


@pytest.fixture
def mention_graph() -> Callable[..., InteractionGraph]:
    """InteractionGraph from {(u, v): mean_sentiment}; every edge counts one original."""

    def _build(
        edges: dict[tuple[str, str], float], nodes: Iterable[str] = ()
    ) -> InteractionGraph:
        data = {
            edge: EdgeData(mean_sentiment=float(value), n_original=1, n_reply=0, n_retweet=0)
            for edge, value in sorted(edges.items())
        }
        endpoints = {n for edge in data for n in edge}
        return InteractionGraph(nodes=frozenset(endpoints | set(nodes)), edges=data)

    return _build


@pytest.fixture
def follower_graph() -> Callable[..., FollowerGraph]:
    def _build(edges: Iterable[tuple[str, str]], nodes: Iterable[str] = ()) -> FollowerGraph:
        edge_set = frozenset(edges)
        endpoints = {n for edge in edge_set for n in edge}
        return FollowerGraph(nodes=frozenset(endpoints | set(nodes)), edges=edge_set)

    return _build


def clique_edges(members: Iterable[str]) -> list[tuple[str, str]]:
    nodes = list(members)
    return [(u, v) for u in nodes for v in nodes if u != v]


@pytest.fixture
def two_cliques() -> tuple[list[str], list[str], list[tuple[str, str]]]:
    """Two 5-cliques (both directions) joined by one reciprocal bridge."""
    left = [f"a{i}" for i in range(5)]
    right = [f"b{i}" for i in range(5)]
    edges = clique_edges(left) + clique_edges(right) + [("a0", "b0"), ("b0", "a0")]
    return left, right, edges
