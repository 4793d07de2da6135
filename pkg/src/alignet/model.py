"""Alignet domain model types (messages, corpora, scores, partitions)."""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from typing import Literal

type UserId = str
type MessageKind = Literal["original", "reply", "retweet"]

MESSAGE_KINDS: tuple[MessageKind, ...] = ("original", "reply", "retweet")


@dataclass(frozen=True, slots=True)
class Message:
    id: str
    author: UserId
    timestamp: int
    text: str
    kind: MessageKind
    mentions: tuple[UserId, ...] = ()
    hashtags: tuple[str, ...] = ()
    reply_to: UserId | None = None
    retweet_of: UserId | None = None


@dataclass(frozen=True, slots=True)
class Corpus:
    messages: tuple[Message, ...]
    users: frozenset[UserId] = field(default=frozenset())

    @classmethod
    def from_messages(cls, messages: Iterable[Message]) -> Corpus:
        ordered = tuple(sorted(messages, key=lambda m: (m.timestamp, m.id)))
        return cls(messages=ordered, users=frozenset(m.author for m in ordered))

    def __len__(self) -> int:
        return len(self.messages)

    def mention_messages(self) -> tuple[Message, ...]:
        return tuple(m for m in self.messages if m.mentions)


@dataclass(frozen=True, slots=True)
class FollowerEdgeList:
    edges: tuple[tuple[UserId, UserId], ...]

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]]) -> FollowerEdgeList:
        seen: set[tuple[str, str]] = set()
        for follower, followee in pairs:
            a, b = follower.strip().lower(), followee.strip().lower()
            if not a or not b or a == b:
                continue
            seen.add((a, b))
        return cls(edges=tuple(sorted(seen)))


@dataclass(frozen=True, slots=True)
class SentimentScore:
    positive: int
    negative: int

    @property
    def difference(self) -> int:
        return self.positive + self.negative

    @property
    def is_neutral(self) -> bool:
        return self.positive == 1 and self.negative == -1


NEUTRAL_SCORE = SentimentScore(positive=1, negative=-1)


@dataclass(frozen=True, slots=True)
class UserSentiment:
    s_in: float | None = None
    s_out: float | None = None
    s_n_in: float | None = None
    s_n_out: float | None = None

    def vector(self) -> tuple[float | None, float | None, float | None, float | None]:
        return (self.s_in, self.s_out, self.s_n_in, self.s_n_out)


@dataclass(frozen=True, slots=True)
class Partition:
    """Node -> community index; indices ordered by each community's smallest node id."""

    assignment: Mapping[UserId, int]
    k: int

    @classmethod
    def from_groups(cls, groups: Iterable[Iterable[UserId]]) -> Partition:
        cells = [sorted(set(group)) for group in groups]
        cells = [cell for cell in cells if cell]
        cells.sort(key=lambda cell: cell[0])
        assignment: dict[UserId, int] = {}
        for index, cell in enumerate(cells):
            for node in cell:
                if node in assignment:
                    raise ValueError(f"node {node!r} assigned to two communities")
                assignment[node] = index
        return cls(assignment=dict(sorted(assignment.items())), k=len(cells))

    @classmethod
    def from_labels(cls, labels: Mapping[UserId, object]) -> Partition:
        groups: dict[object, list[UserId]] = {}
        for node, label in labels.items():
            groups.setdefault(label, []).append(node)
        return cls.from_groups(groups.values())

    @property
    def nodes(self) -> frozenset[UserId]:
        return frozenset(self.assignment)

    def cells(self) -> list[frozenset[UserId]]:
        members: list[set[UserId]] = [set() for _ in range(self.k)]
        for node, index in self.assignment.items():
            members[index].add(node)
        return [frozenset(cell) for cell in members]

    def sizes(self) -> list[int]:
        return [len(cell) for cell in self.cells()]
