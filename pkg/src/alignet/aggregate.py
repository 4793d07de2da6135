"""Per-user sentiment aggregates and coarse polarity groupings."""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np
import pandas as pd

from .errors import InputError
from .graphs import InteractionGraph
from .logging import get_logger
from .model import UserId, UserSentiment
from .utils.parallel import ordered_map

logger = get_logger(__name__)

type PolarityLabel = Literal["positive", "negative", "unknown"]
type GroupScheme = Literal["sign", "mean_split", "median_split", "quartiles"]
type NeighbourMode = Literal["union", "out"]
type AggregateField = Literal["s_in", "s_out", "s_n_in", "s_n_out"]

AGGREGATE_FIELDS: tuple[AggregateField, ...] = ("s_in", "s_out", "s_n_in", "s_n_out")
GROUP_SCHEMES: tuple[GroupScheme, ...] = ("sign", "mean_split", "median_split", "quartiles")
SCHEME_LABELS: dict[GroupScheme, tuple[str, ...]] = {
    "sign": ("negative", "positive", "unknown"),
    "mean_split": ("above", "below"),
    "median_split": ("above", "below"),
    "quartiles": ("q1", "q2", "q3", "q4"),
}
AGGREGATE_COLUMNS = ["user", *AGGREGATE_FIELDS, "label"]


@dataclass(frozen=True, slots=True)
class _Adjacency:
    incoming: dict[UserId, list[float]]
    outgoing: dict[UserId, list[float]]
    in_neighbours: dict[UserId, set[UserId]]
    out_neighbours: dict[UserId, set[UserId]]

    @classmethod
    def of(cls, g: InteractionGraph) -> _Adjacency:
        adjacency = cls({}, {}, {}, {})
        for (source, target), data in sorted(g.edges.items()):
            adjacency.outgoing.setdefault(source, []).append(data.mean_sentiment)
            adjacency.incoming.setdefault(target, []).append(data.mean_sentiment)
            adjacency.out_neighbours.setdefault(source, set()).add(target)
            adjacency.in_neighbours.setdefault(target, set()).add(source)
        return adjacency

    def neighbours(self, u: UserId, mode: NeighbourMode) -> set[UserId]:
        found = set(self.out_neighbours.get(u, ()))
        if mode == "union":
            found |= self.in_neighbours.get(u, set())
        found.discard(u)
        return found


def _mean(values: Iterable[float | None]) -> float | None:
    defined = [v for v in values if v is not None]
    if not defined:
        return None
    return float(np.mean(defined))


def _require_node(g: InteractionGraph, u: UserId) -> None:
    if u not in g.nodes:
        raise InputError(f"User {u!r} is not a node of the graph.")


def user_sentiment(g: InteractionGraph, u: UserId) -> tuple[float | None, float | None]:
    _require_node(g, u)
    incoming = [d.mean_sentiment for (_, t), d in g.edges.items() if t == u]
    outgoing = [d.mean_sentiment for (s, _), d in g.edges.items() if s == u]
    return _mean(incoming), _mean(outgoing)


def neighbour_sentiment(
    g: InteractionGraph,
    u: UserId,
    all_user_sent: Mapping[UserId, UserSentiment],
    *,
    neighbours: NeighbourMode = "union",
) -> tuple[float | None, float | None]:
    _require_node(g, u)
    return _neighbour_means(_Adjacency.of(g), u, all_user_sent, neighbours)


def _neighbour_means(
    adjacency: _Adjacency,
    u: UserId,
    all_user_sent: Mapping[UserId, UserSentiment],
    mode: NeighbourMode,
) -> tuple[float | None, float | None]:
    near = sorted(adjacency.neighbours(u, mode))
    missing = [v for v in near if v not in all_user_sent]
    if missing:
        raise InputError(f"No aggregates for neighbour {missing[0]!r} of {u!r}.")
    return (
        _mean(all_user_sent[v].s_in for v in near),
        _mean(all_user_sent[v].s_out for v in near),
    )


def compute_user_sentiment(
    g: InteractionGraph, *, neighbours: NeighbourMode = "union", threads: int = 1
) -> dict[UserId, UserSentiment]:
    adjacency = _Adjacency.of(g)
    users = sorted(g.nodes)
    direct = {
        u: UserSentiment(
            s_in=_mean(adjacency.incoming.get(u, ())),
            s_out=_mean(adjacency.outgoing.get(u, ())),
        )
        for u in users
    }
    neighbour_values = ordered_map(
        lambda u: _neighbour_means(adjacency, u, direct, neighbours), users, threads=threads
    )
    aggregates = {
        u: UserSentiment(
            s_in=direct[u].s_in, s_out=direct[u].s_out, s_n_in=s_n_in, s_n_out=s_n_out
        )
        for u, (s_n_in, s_n_out) in zip(users, neighbour_values, strict=True)
    }
    logger.info("aggregate.computed", users=len(aggregates), neighbours=neighbours)
    return aggregates


def classify_polarity(score: float | None) -> PolarityLabel:
    if score is None or np.isnan(score) or score == 0:
        return "unknown"
    return "positive" if score > 0 else "negative"


def polarity_labels(
    aggregates: Mapping[UserId, UserSentiment], *, field: AggregateField = "s_out"
) -> dict[UserId, PolarityLabel]:
    return {u: classify_polarity(getattr(s, field)) for u, s in sorted(aggregates.items())}


def group_users(
    scores: Mapping[UserId, float | None], scheme: GroupScheme = "sign"
) -> dict[UserId, str]:
    defined = {u: float(v) for u, v in sorted(scores.items()) if v is not None}
    if not defined:
        raise InputError("Cannot group users: no user has a defined score.")
    values = np.fromiter(defined.values(), dtype=float)

    match scheme:
        case "sign":
            return {u: classify_polarity(v) for u, v in defined.items()}
        case "mean_split" | "median_split":
            centre = np.mean(values) if scheme == "mean_split" else np.median(values)
            threshold = float(np.clip(centre, values.min(), values.max()))
            return {u: "below" if v < threshold else "above" for u, v in defined.items()}
        case "quartiles":
            bounds = np.quantile(values, [0.25, 0.5, 0.75], method="linear")
            # boundary values belong to the lower quartile group
            slots = np.searchsorted(bounds, values, side="left")
            return {u: f"q{int(slot) + 1}" for u, slot in zip(defined, slots, strict=True)}
        case _:
            raise InputError(f"Unknown grouping scheme {scheme!r}.")


def aggregate_summary(
    aggregates: Mapping[UserId, UserSentiment],
) -> dict[str, dict[str, float | int | None]]:
    summary: dict[str, dict[str, float | int | None]] = {}
    for name in AGGREGATE_FIELDS:
        values = [getattr(s, name) for s in aggregates.values() if getattr(s, name) is not None]
        summary[name] = {"count": len(values), "mean": _mean(values)}
    return summary


def write_user_aggregates(
    aggregates: Mapping[UserId, UserSentiment],
    labels: Mapping[UserId, str],
    path: Path,
) -> None:
    rows = [
        (u, s.s_in, s.s_out, s.s_n_in, s.s_n_out, labels.get(u, "unknown"))
        for u, s in sorted(aggregates.items())
    ]
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(rows, columns=AGGREGATE_COLUMNS).to_csv(
        path, index=False, na_rep="", lineterminator="\n"
    )


def read_user_aggregates(path: Path) -> tuple[dict[UserId, UserSentiment], dict[UserId, str]]:
    frame = pd.read_csv(
        path, dtype={"user": str, "label": str}, keep_default_na=False, float_precision="round_trip"
    )

    def cell(value: object) -> float | None:
        if value == "" or value is None:
            return None
        number = float(value)
        return None if np.isnan(number) else number

    aggregates: dict[UserId, UserSentiment] = {}
    labels: dict[UserId, str] = {}
    for row in frame.itertuples(index=False):
        user = str(row.user)
        aggregates[user] = UserSentiment(
            s_in=cell(row.s_in),
            s_out=cell(row.s_out),
            s_n_in=cell(row.s_n_in),
            s_n_out=cell(row.s_n_out),
        )
        labels[user] = str(row.label)
    return aggregates, labels
