"""Cluster-level interaction tables, activity series and annotation evaluation."""

from __future__ import annotations

import math
from collections import Counter
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np
import pandas as pd

from .errors import ConsistencyError, InputError, ValidationError
from .graphs import FollowerGraph, InteractionGraph
from .logging import get_logger
from .model import MESSAGE_KINDS, Corpus, MessageKind, SentimentScore, UserId
from .utils.rng import derive_rng

logger = get_logger(__name__)

type Direction = Literal["either", "directed"]
type ClusterPair = tuple[int, int]

ANNOTATION_LABELS = ("yes", "no", "unaligned")
UNKNOWN_LABEL = "unknown"


def _cluster_of(clusters: Mapping[UserId, int], user: UserId) -> int:
    try:
        return clusters[user]
    except KeyError:
        raise ConsistencyError(f"User {user!r} is not in any cluster.") from None


def _cluster_ids(clusters: Mapping[UserId, int]) -> list[int]:
    return sorted(set(clusters.values()))


def cluster_link_fractions(
    g: InteractionGraph | FollowerGraph, clusters: Mapping[UserId, int]
) -> dict[ClusterPair, float]:
    """Share of each source cluster's out-links landing in each target cluster."""
    counts: Counter[ClusterPair] = Counter()
    for u, v in sorted(g.edge_set()):
        counts[(_cluster_of(clusters, u), _cluster_of(clusters, v))] += 1
    ids = _cluster_ids(clusters)
    fractions: dict[ClusterPair, float] = {}
    for source in ids:
        row_total = sum(counts[(source, target)] for target in ids)
        if row_total == 0:
            continue
        for target in ids:
            fractions[(source, target)] = counts[(source, target)] / row_total
    return fractions


@dataclass(frozen=True, slots=True)
class SentimentStats:
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float
    mean: float
    count: int

    @classmethod
    def of(cls, values: Sequence[float]) -> SentimentStats:
        data = np.asarray(values, dtype=float)
        q1, median, q3 = np.quantile(data, [0.25, 0.5, 0.75], method="linear")
        return cls(
            minimum=float(data.min()),
            q1=float(q1),
            median=float(median),
            q3=float(q3),
            maximum=float(data.max()),
            mean=float(data.mean()),
            count=int(data.size),
        )

    def to_dict(self) -> dict[str, float | int]:
        return {
            "min": self.minimum,
            "q1": self.q1,
            "median": self.median,
            "q3": self.q3,
            "max": self.maximum,
            "mean": self.mean,
            "count": self.count,
        }


@dataclass(frozen=True, slots=True)
class ClusterInteraction:
    source: int
    target: int
    counts: Mapping[MessageKind, int]
    proportions: Mapping[MessageKind, float]
    mean_difference: Mapping[MessageKind, float | None] = field(default_factory=dict)
    follower_coverage: Mapping[MessageKind, float | None] = field(default_factory=dict)
    sentiment_stats: SentimentStats | None = None


@dataclass(frozen=True, slots=True)
class MentionTypeTable:
    interactions: tuple[ClusterInteraction, ...]
    excluded: int

    def row(self, source: int, target: int) -> ClusterInteraction:
        for item in self.interactions:
            if item.source == source and item.target == target:
                return item
        raise KeyError((source, target))


def _mention_pairs(corpus: Corpus) -> Iterable[tuple[str, UserId, UserId, MessageKind]]:
    for message in corpus.messages:
        for target in message.mentions:
            if target != message.author:
                yield message.id, message.author, target, message.kind


def mention_type_table(
    corpus: Corpus,
    scores: Mapping[str, SentimentScore],
    clusters: Mapping[UserId, int],
) -> MentionTypeTable:
    """Mention messages counted per (source cluster, target cluster, kind).

    Each message-target pair counts once; pairs with an unclustered party are
    left out and counted in ``excluded``.
    """
    counts: Counter[tuple[int, int, MessageKind]] = Counter()
    sums: Counter[tuple[int, int, MessageKind]] = Counter()
    excluded = 0
    for message_id, author, target, kind in _mention_pairs(corpus):
        if author not in clusters or target not in clusters:
            excluded += 1
            continue
        key = (clusters[author], clusters[target], kind)
        counts[key] += 1
        score = scores.get(message_id)
        if score is None:
            raise ConsistencyError(f"No sentiment score for message {message_id!r}.")
        sums[key] += score.difference

    ids = _cluster_ids(clusters)
    source_totals = {
        s: sum(counts[(s, t, k)] for t in ids for k in MESSAGE_KINDS) for s in ids
    }
    rows: list[ClusterInteraction] = []
    for source in ids:
        total = source_totals[source]
        for target in ids:
            cell = {k: counts[(source, target, k)] for k in MESSAGE_KINDS}
            rows.append(
                ClusterInteraction(
                    source=source,
                    target=target,
                    counts=cell,
                    proportions={k: (cell[k] / total if total else 0.0) for k in MESSAGE_KINDS},
                    mean_difference={
                        k: (sums[(source, target, k)] / cell[k] if cell[k] else None)
                        for k in MESSAGE_KINDS
                    },
                )
            )
    if excluded:
        logger.warning("report.mentions.excluded", excluded=excluded)
    return MentionTypeTable(interactions=tuple(rows), excluded=excluded)


def follower_coverage(
    corpus: Corpus,
    clusters: Mapping[UserId, int],
    followers: FollowerGraph,
    *,
    direction: Direction = "either",
) -> dict[tuple[int, int, MessageKind], float | None]:
    """Fraction of mention messages per cell sent between follower-connected users."""
    edges = followers.edges
    counts: Counter[tuple[int, int, MessageKind]] = Counter()
    connected: Counter[tuple[int, int, MessageKind]] = Counter()
    for _, author, target, kind in _mention_pairs(corpus):
        if author not in clusters or target not in clusters:
            continue
        key = (clusters[author], clusters[target], kind)
        counts[key] += 1
        linked = (author, target) in edges
        if direction == "either":
            linked = linked or (target, author) in edges
        if linked:
            connected[key] += 1
    ids = _cluster_ids(clusters)
    return {
        (s, t, k): (connected[(s, t, k)] / counts[(s, t, k)] if counts[(s, t, k)] else None)
        for s in ids
        for t in ids
        for k in MESSAGE_KINDS
    }


def cluster_sentiment_stats(
    g: InteractionGraph, clusters: Mapping[UserId, int]
) -> dict[ClusterPair, SentimentStats | None]:
    grouped: dict[ClusterPair, list[float]] = {}
    for (u, v), data in sorted(g.edges.items()):
        key = (_cluster_of(clusters, u), _cluster_of(clusters, v))
        grouped.setdefault(key, []).append(data.mean_sentiment)
    ids = _cluster_ids(clusters)
    return {
        (s, t): (SentimentStats.of(grouped[(s, t)]) if (s, t) in grouped else None)
        for s in ids
        for t in ids
    }


def combine_interactions(
    table: MentionTypeTable,
    coverage: Mapping[tuple[int, int, MessageKind], float | None],
    sentiment: Mapping[ClusterPair, SentimentStats | None],
) -> list[ClusterInteraction]:
    return [
        ClusterInteraction(
            source=row.source,
            target=row.target,
            counts=row.counts,
            proportions=row.proportions,
            mean_difference=row.mean_difference,
            follower_coverage={k: coverage.get((row.source, row.target, k)) for k in MESSAGE_KINDS},
            sentiment_stats=sentiment.get((row.source, row.target)),
        )
        for row in table.interactions
    ]


@dataclass(frozen=True, slots=True)
class ActivityPoint:
    cluster: int
    day: int
    day_start: int
    messages: int
    tweets_per_user: float
    mean_sentiment: float | None


def day_boundaries(start: int, end: int, day_seconds: int = 86400) -> list[int]:
    if day_seconds <= 0:
        raise InputError("day_seconds must be positive.")
    if end < start:
        raise InputError(f"Invalid range: start {start} is after end {end}.")
    bounds = [*range(start, end, day_seconds), end]
    return bounds if len(bounds) > 1 else [start, start + day_seconds]


def activity_timeseries(
    corpus: Corpus,
    scores: Mapping[str, SentimentScore],
    clusters: Mapping[UserId, int],
    boundaries: Sequence[int],
) -> list[ActivityPoint]:
    """Tweets per user and mean difference score per cluster over half-open days."""
    if len(boundaries) < 2 or any(b >= a for a, b in zip(boundaries[1:], boundaries, strict=False)):
        raise InputError("Day boundaries must be strictly increasing with at least two entries.")
    bounds = np.asarray(boundaries, dtype=np.int64)
    sizes = Counter(clusters.values())
    n_days = len(boundaries) - 1
    messages: Counter[tuple[int, int]] = Counter()
    sums: Counter[tuple[int, int]] = Counter()
    for message in corpus.messages:
        cluster = clusters.get(message.author)
        if cluster is None:
            continue
        day = int(np.searchsorted(bounds, message.timestamp, side="right")) - 1
        if not 0 <= day < n_days:
            continue
        messages[(cluster, day)] += 1
        sums[(cluster, day)] += scores[message.id].difference
    points: list[ActivityPoint] = []
    for cluster in sorted(sizes):
        for day in range(n_days):
            n = messages[(cluster, day)]
            points.append(
                ActivityPoint(
                    cluster=cluster,
                    day=day,
                    day_start=int(boundaries[day]),
                    messages=n,
                    tweets_per_user=n / sizes[cluster],
                    mean_sentiment=sums[(cluster, day)] / n if n else None,
                )
            )
    return points


def activity_bins(corpus: Corpus, bin_seconds: int = 900) -> list[tuple[int, int, int]]:
    """(bin start, messages, unique authors) for every bin from the first to the last message."""
    if bin_seconds <= 0:
        raise InputError("bin_seconds must be positive.")
    if not corpus.messages:
        return []
    authors: dict[int, set[UserId]] = {}
    counts: Counter[int] = Counter()
    for message in corpus.messages:
        start = (message.timestamp // bin_seconds) * bin_seconds
        counts[start] += 1
        authors.setdefault(start, set()).add(message.author)
    first, last = min(counts), max(counts)
    return [
        (start, counts[start], len(authors.get(start, ())))
        for start in range(first, last + bin_seconds, bin_seconds)
    ]


def tweets_per_user_ccdf(corpus: Corpus) -> list[tuple[int, float]]:
    """P(X >= x) for the number of messages per author."""
    per_user = Counter(m.author for m in corpus.messages)
    if not per_user:
        return []
    values = np.sort(np.fromiter(per_user.values(), dtype=np.int64))
    distinct = np.unique(values)
    n = values.size
    return [
        (int(x), float((n - np.searchsorted(values, x, side="left")) / n)) for x in distinct
    ]


def kind_breakdown(corpus: Corpus) -> dict[str, dict[MessageKind, int]]:
    all_kinds = Counter(m.kind for m in corpus.messages)
    mention_kinds = Counter(m.kind for m in corpus.messages if m.mentions)
    return {
        "all": {k: all_kinds.get(k, 0) for k in MESSAGE_KINDS},
        "mention": {k: mention_kinds.get(k, 0) for k in MESSAGE_KINDS},
    }


@dataclass(frozen=True, slots=True)
class ConfusionMatrix:
    """Counts keyed by (predicted label, actual label)."""

    counts: Mapping[tuple[str, str], int]

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]]) -> ConfusionMatrix:
        return cls(counts=dict(sorted(Counter(pairs).items())))

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def cell(self, predicted: str, actual: str) -> int:
        return self.counts.get((predicted, actual), 0)

    def actual_total(self, actual: str) -> int:
        return sum(n for (_, a), n in self.counts.items() if a == actual)

    def predicted_total(self, predicted: str) -> int:
        return sum(n for (p, _), n in self.counts.items() if p == predicted)

    def to_rows(self) -> list[dict[str, str | int]]:
        return [
            {"predicted": p, "actual": a, "count": n} for (p, a), n in sorted(self.counts.items())
        ]


def overall_accuracy(cm: ConfusionMatrix, classes: Sequence[str] = ("yes", "no")) -> float:
    total = cm.total
    if total == 0:
        raise InputError("Accuracy is undefined for an empty confusion matrix.")
    return sum(cm.cell(c, c) for c in classes) / total


def balanced_accuracy(cm: ConfusionMatrix, classes: Sequence[str] = ("yes", "no")) -> float:
    recalls = [cm.cell(c, c) / cm.actual_total(c) for c in classes if cm.actual_total(c) > 0]
    if not recalls:
        raise InputError("Balanced accuracy needs at least one annotated class member.")
    return float(np.mean(recalls))


def per_cluster_accuracy(
    composition: Mapping[int, Mapping[str, int]], cluster_labels: Mapping[int, str]
) -> float:
    """Mean over labelled clusters of the share of annotations matching the cluster label."""
    shares = []
    for cluster, label in sorted(cluster_labels.items()):
        if label == UNKNOWN_LABEL:
            continue
        counts = composition.get(cluster, {})
        annotated = sum(counts.values())
        if annotated:
            shares.append(counts.get(label, 0) / annotated)
    if not shares:
        raise InputError("No labelled cluster has annotations.")
    return float(np.mean(shares))


@dataclass(frozen=True, slots=True)
class AlignmentEvaluation:
    composition: Mapping[int, Mapping[str, int]]
    cluster_labels: Mapping[int, str]
    confusion: ConfusionMatrix
    overall: float
    balanced: float
    per_cluster: float

    def to_dict(self) -> dict[str, object]:
        return {
            "composition": {str(c): dict(v) for c, v in sorted(self.composition.items())},
            "cluster_labels": {str(c): v for c, v in sorted(self.cluster_labels.items())},
            "confusion": self.confusion.to_rows(),
            "overall_accuracy": self.overall,
            "balanced_accuracy": self.balanced,
            "per_cluster_accuracy": self.per_cluster,
        }


def evaluate_alignment(
    annotations: Mapping[UserId, str],
    clusters: Mapping[UserId, int],
    *,
    classes: Sequence[str] = ("yes", "no"),
    ignore: Sequence[str] = ("unaligned",),
) -> AlignmentEvaluation:
    unknown_users = sorted(u for u in annotations if u not in clusters)
    if unknown_users:
        raise ConsistencyError(f"Annotated user {unknown_users[0]!r} is not in any cluster.")
    allowed = set(classes) | set(ignore)
    bad = sorted({label for label in annotations.values() if label not in allowed})
    if bad:
        raise ValidationError(
            f"Unknown annotation label {bad[0]!r}; expected one of {sorted(allowed)}."
        )

    composition: dict[int, dict[str, int]] = {}
    for user, label in sorted(annotations.items()):
        row = composition.setdefault(clusters[user], {})
        row[label] = row.get(label, 0) + 1
    composition = {
        c: {label: composition[c].get(label, 0) for label in (*classes, *ignore)}
        for c in sorted(composition)
    }

    cluster_labels: dict[int, str] = {}
    for cluster in _cluster_ids(clusters):
        votes = composition.get(cluster, {})
        best = max(classes, key=lambda c: (votes.get(c, 0), -classes.index(c)))
        if votes.get(best, 0) == 0:
            cluster_labels[cluster] = UNKNOWN_LABEL
            if votes:
                logger.warning(
                    "report.cluster.unlabelled", cluster=cluster, annotated=sum(votes.values())
                )
        else:
            cluster_labels[cluster] = best

    confusion = ConfusionMatrix.from_pairs(
        (cluster_labels[clusters[user]], label)
        for user, label in sorted(annotations.items())
        if cluster_labels[clusters[user]] != UNKNOWN_LABEL
    )
    evaluation = AlignmentEvaluation(
        composition=composition,
        cluster_labels=cluster_labels,
        confusion=confusion,
        overall=overall_accuracy(confusion, classes),
        balanced=balanced_accuracy(confusion, classes),
        per_cluster=per_cluster_accuracy(composition, cluster_labels),
    )
    logger.info(
        "report.evaluated",
        annotated=len(annotations),
        overall=evaluation.overall,
        balanced=evaluation.balanced,
    )
    return evaluation


def read_annotations(path: Path) -> dict[UserId, str]:
    frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    missing = {"user", "label"} - set(frame.columns)
    if missing:
        raise ValidationError(f"{path}: missing column(s) {sorted(missing)}; expected user,label.")
    annotations: dict[UserId, str] = {}
    for line, (user, label) in enumerate(zip(frame["user"], frame["label"], strict=True), start=2):
        label = label.strip().lower()
        if label not in ANNOTATION_LABELS:
            raise ValidationError(f"{path}: line {line}: unknown label {label!r}.")
        annotations[user.strip().lower()] = label
    return dict(sorted(annotations.items()))


def sample_for_annotation(
    clusters: Mapping[UserId, int], fraction: float = 0.2, seed: int = 0
) -> dict[UserId, int]:
    """Seeded stratified sample: ceil(fraction * size), at least one user, per cluster."""
    if not 0.0 < fraction <= 1.0:
        raise InputError(f"fraction must be in (0, 1], got {fraction}.")
    members: dict[int, list[UserId]] = {}
    for user, cluster in sorted(clusters.items()):
        members.setdefault(cluster, []).append(user)
    sample: dict[UserId, int] = {}
    for cluster, users in sorted(members.items()):
        size = max(1, math.ceil(round(fraction * len(users), 9)))
        picked = derive_rng(seed, cluster).choice(len(users), size=size, replace=False)
        for index in sorted(int(i) for i in picked):
            sample[users[index]] = cluster
    return dict(sorted(sample.items()))


def write_annotation_sample(sample: Mapping[UserId, int], path: Path) -> None:
    """user,cluster,label rows with an empty label column to fill in by hand."""
    rows = [(user, cluster, "") for user, cluster in sorted(sample.items())]
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(rows, columns=["user", "cluster", "label"]).to_csv(
        path, index=False, lineterminator="\n"
    )
