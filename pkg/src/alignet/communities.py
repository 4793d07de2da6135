"""Community detection, partition algebra and sub-community sentiment profiles.

Communities are found by maximising modularity with a resolution parameter
(Louvain node moving plus aggregation). A Markov time ``t`` maps to
resolution ``1 / t``: larger times favour coarser partitions.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path

import networkx as nx
import numpy as np
import pandas as pd
from scipy import stats
from sklearn.metrics import mutual_info_score

from .aggregate import AGGREGATE_FIELDS
from .errors import ConsistencyError, InputError
from .graphs import Graph, InteractionGraph
from .logging import get_logger
from .model import Partition, UserId, UserSentiment
from .utils.parallel import ordered_map
from .utils.rng import derive_seed

logger = get_logger(__name__)

PROFILE_COLUMNS = ["cell", "size", *AGGREGATE_FIELDS]


@dataclass(frozen=True, slots=True)
class CommunityRun:
    partition: Partition
    quality: float


@dataclass(frozen=True, slots=True)
class ScanDiagnostics:
    time: float
    resolution: float
    k: int
    quality: float
    mean_vi: float
    trivial: bool

    def to_dict(self) -> dict[str, float | int | bool]:
        return {
            "time": self.time,
            "resolution": self.resolution,
            "k": self.k,
            "quality": self.quality,
            "mean_vi": self.mean_vi,
            "trivial": self.trivial,
        }


@dataclass(frozen=True, slots=True)
class SubCommunityProfile:
    index: int
    members: frozenset[UserId]
    sent_vector: tuple[float | None, float | None, float | None, float | None]

    @property
    def size(self) -> int:
        return len(self.members)


def to_undirected_weighted(g: Graph) -> nx.Graph:
    """Collapse directions and sum weights: mention counts, or 1 per follower edge."""
    weights: dict[tuple[UserId, UserId], float] = {}
    if isinstance(g, InteractionGraph):
        items = [(edge, float(data.total)) for edge, data in g.edges.items()]
    else:
        items = [(edge, 1.0) for edge in g.edges]
    for (u, v), weight in items:
        key = (u, v) if u <= v else (v, u)
        weights[key] = weights.get(key, 0.0) + weight
    graph = nx.Graph()
    graph.add_nodes_from(sorted(g.nodes))
    graph.add_weighted_edges_from((u, v, w) for (u, v), w in sorted(weights.items()))
    return graph


def _quality(graph: nx.Graph, partition: Partition, resolution: float) -> float:
    if graph.number_of_edges() == 0:
        return 0.0
    return float(
        nx.community.modularity(
            graph, [set(cell) for cell in partition.cells()], weight="weight", resolution=resolution
        )
    )


def _single_run(graph: nx.Graph, resolution: float, seed: int) -> CommunityRun:
    if graph.number_of_edges() == 0:
        partition = Partition.from_groups([[node] for node in graph.nodes])
        return CommunityRun(partition=partition, quality=0.0)
    groups = nx.community.louvain_communities(
        graph, weight="weight", resolution=resolution, seed=seed
    )
    partition = Partition.from_groups(groups)
    return CommunityRun(partition=partition, quality=_quality(graph, partition, resolution))


def _runs(
    graph: nx.Graph, markov_time: float, restarts: int, seed: int, threads: int
) -> list[CommunityRun]:
    if markov_time <= 0:
        raise InputError(f"Markov time must be positive, got {markov_time}.")
    if restarts < 1:
        raise InputError("restarts must be positive.")
    resolution = 1.0 / markov_time
    return ordered_map(
        lambda r: _single_run(graph, resolution, derive_seed(seed, r)),
        range(restarts),
        threads=threads,
    )


def _best(runs: Sequence[CommunityRun]) -> CommunityRun:
    return min(
        runs,
        key=lambda run: (
            -run.quality,
            run.partition.k,
            tuple(run.partition.assignment.values()),
        ),
    )


def detect_communities(
    g: Graph, markov_time: float = 1.0, restarts: int = 10, seed: int = 0, *, threads: int = 1
) -> Partition:
    if not g.nodes:
        raise InputError("Cannot detect communities in an empty graph.")
    graph = to_undirected_weighted(g)
    best = _best(_runs(graph, markov_time, restarts, seed, threads))
    logger.debug("communities.detected", time=markov_time, k=best.partition.k, quality=best.quality)
    return best.partition


def _mean_pairwise_vi(partitions: Sequence[Partition]) -> float:
    distances = [variation_of_information(a, b) for a, b in combinations(partitions, 2)]
    return float(np.mean(distances)) if distances else 0.0


def _is_trivial(partition: Partition) -> bool:
    return partition.k <= 1 or partition.k == len(partition.assignment)


def stability_scan(
    g: Graph,
    times: Sequence[float],
    restarts: int = 10,
    seed: int = 0,
    *,
    threads: int = 1,
) -> tuple[Partition, list[ScanDiagnostics]]:
    if not times:
        raise InputError("stability_scan needs at least one Markov time.")
    if not g.nodes:
        raise InputError("Cannot detect communities in an empty graph.")
    graph = to_undirected_weighted(g)

    best_per_time: list[Partition] = []
    diagnostics: list[ScanDiagnostics] = []
    for markov_time in times:
        runs = _runs(graph, float(markov_time), restarts, seed, threads)
        best = _best(runs)
        mean_vi = _mean_pairwise_vi([run.partition for run in runs])
        entry = ScanDiagnostics(
            time=float(markov_time),
            resolution=1.0 / float(markov_time),
            k=best.partition.k,
            quality=best.quality,
            mean_vi=mean_vi,
            trivial=_is_trivial(best.partition),
        )
        logger.info("communities.scan.time", **entry.to_dict())
        best_per_time.append(best.partition)
        diagnostics.append(entry)

    candidates = [i for i, d in enumerate(diagnostics) if not d.trivial] or list(
        range(len(diagnostics))
    )
    chosen = min(candidates, key=lambda i: (diagnostics[i].mean_vi, diagnostics[i].k, i))
    logger.info(
        "communities.scan.selected",
        time=diagnostics[chosen].time,
        k=diagnostics[chosen].k,
        mean_vi=diagnostics[chosen].mean_vi,
    )
    return best_per_time[chosen], diagnostics


def _check_same_nodes(p1: Partition, p2: Partition) -> list[UserId]:
    if p1.nodes != p2.nodes:
        diff = sorted(p1.nodes ^ p2.nodes)
        raise InputError(
            f"Partitions cover different node sets ({len(diff)} nodes differ, e.g. {diff[0]!r})."
        )
    return sorted(p1.nodes)


def variation_of_information(p1: Partition, p2: Partition) -> float:
    """H(p1) + H(p2) - 2 I(p1; p2), natural logarithm."""
    nodes = _check_same_nodes(p1, p2)
    if not nodes:
        return 0.0
    labels1 = [p1.assignment[n] for n in nodes]
    labels2 = [p2.assignment[n] for n in nodes]
    h1 = float(stats.entropy(np.bincount(labels1)))
    h2 = float(stats.entropy(np.bincount(labels2)))
    mi = float(mutual_info_score(labels1, labels2))
    vi = h1 + h2 - 2.0 * mi
    return 0.0 if vi < 1e-12 else vi


def intersect_partitions(p1: Partition, p2: Partition) -> Partition:
    nodes = _check_same_nodes(p1, p2)
    cells: dict[tuple[int, int], list[UserId]] = {}
    for node in nodes:
        cells.setdefault((p1.assignment[node], p2.assignment[node]), []).append(node)
    return Partition.from_groups(cells.values())


def prune_small(p: Partition, min_size: int = 21) -> tuple[Partition, frozenset[UserId]]:
    if min_size < 1:
        raise InputError("min_size must be positive.")
    kept = [cell for cell in p.cells() if len(cell) >= min_size]
    if not kept:
        raise ConsistencyError(
            f"All {p.k} cells have fewer than {min_size} members; nothing left after pruning "
            f"(largest cell has {max(p.sizes(), default=0)} members)."
        )
    removed = frozenset(n for cell in p.cells() if len(cell) < min_size for n in cell)
    logger.info(
        "communities.pruned",
        cells=p.k,
        kept=len(kept),
        removed_users=len(removed),
        min_size=min_size,
    )
    return Partition.from_groups(kept), removed


def subcommunity_profiles(
    p: Partition, aggregates: Mapping[UserId, UserSentiment]
) -> list[SubCommunityProfile]:
    profiles: list[SubCommunityProfile] = []
    for index, cell in enumerate(p.cells()):
        missing = sorted(n for n in cell if n not in aggregates)
        if missing:
            raise ConsistencyError(f"No sentiment aggregates for user {missing[0]!r}.")
        vector = []
        for name in AGGREGATE_FIELDS:
            values = [getattr(aggregates[n], name) for n in sorted(cell)]
            defined = [v for v in values if v is not None]
            vector.append(float(np.mean(defined)) if defined else None)
        profiles.append(SubCommunityProfile(index=index, members=cell, sent_vector=tuple(vector)))
    return profiles


def write_partition(p: Partition, path: Path, *, column: str = "community") -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(sorted(p.assignment.items()), columns=["user", column]).to_csv(
        path, index=False, lineterminator="\n"
    )


def read_partition(path: Path, *, column: str = "community") -> Partition:
    frame = pd.read_csv(path, dtype={"user": str}, keep_default_na=False)
    return Partition.from_labels(dict(zip(frame["user"], frame[column].astype(int), strict=True)))


def write_profiles(profiles: Sequence[SubCommunityProfile], path: Path) -> None:
    rows = [(p.index, p.size, *p.sent_vector) for p in profiles]
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(rows, columns=PROFILE_COLUMNS).to_csv(
        path, index=False, na_rep="", lineterminator="\n"
    )
