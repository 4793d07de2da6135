"""k-means over sub-community sentiment vectors and elbow selection of k."""

from __future__ import annotations

import warnings
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
from sklearn.cluster import KMeans
from sklearn.exceptions import ConvergenceWarning
from sklearn.preprocessing import StandardScaler

from .communities import SubCommunityProfile
from .errors import ConsistencyError, InputError
from .logging import get_logger
from .model import UserId
from .utils.parallel import ordered_map
from .utils.rng import derive_rng, derive_seed

logger = get_logger(__name__)

MAX_ITER = 300


@dataclass(frozen=True, slots=True)
class KMeansResult:
    assignment: Mapping[int, int]
    centroids: tuple[tuple[float, ...], ...]
    wss: float

    @property
    def k(self) -> int:
        return len(self.centroids)


@dataclass(frozen=True, slots=True)
class CommunityCluster:
    index: int
    members: frozenset[UserId]
    cells: tuple[int, ...]
    mean_s_out: float | None

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass(frozen=True, slots=True)
class PreparedPoints:
    points: np.ndarray
    weights: np.ndarray | None
    imputed: np.ndarray


def prepare_points(
    profiles: Sequence[SubCommunityProfile], *, standardize: bool = False, weighted: bool = False
) -> PreparedPoints:
    """Stack profile vectors; undefined components take the mean of that component."""
    raw = np.array(
        [[np.nan if v is None else v for v in p.sent_vector] for p in profiles], dtype=float
    ).reshape(len(profiles), 4)
    imputed = np.isnan(raw)
    points = raw.copy()
    for column in range(points.shape[1]):
        defined = points[~imputed[:, column], column]
        fill = float(np.mean(defined)) if defined.size else 0.0
        points[imputed[:, column], column] = fill
    if standardize and len(profiles) > 0:
        points = StandardScaler().fit_transform(points)
    weights = np.array([p.size for p in profiles], dtype=float) if weighted else None
    return PreparedPoints(points=points, weights=weights, imputed=imputed)


def _farthest_point_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    chosen = [int(rng.integers(n))]
    nearest = ((points - points[chosen[0]]) ** 2).sum(axis=1)
    while len(chosen) < k:
        candidates = nearest.copy()
        candidates[chosen] = -1.0
        index = int(np.argmax(candidates))
        chosen.append(index)
        nearest = np.minimum(nearest, ((points - points[index]) ** 2).sum(axis=1))
    return points[chosen].copy()


def _assign(points: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    distances = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    # argmin keeps the lowest centroid index on ties
    labels = np.argmin(distances, axis=1)
    return labels, distances[np.arange(points.shape[0]), labels]


def _one_restart(
    points: np.ndarray, k: int, weights: np.ndarray | None, seed: int, restart: int
) -> KMeansResult:
    init = _farthest_point_init(points, k, derive_rng(seed, restart))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        model = KMeans(
            n_clusters=k,
            init=init,
            n_init=1,
            max_iter=MAX_ITER,
            tol=0.0,
            algorithm="lloyd",
            random_state=derive_seed(seed, restart),
        ).fit(points, sample_weight=weights)
    centroids = np.asarray(model.cluster_centers_, dtype=float)
    labels, sq = _assign(points, centroids)
    w = np.ones(points.shape[0]) if weights is None else weights
    return KMeansResult(
        assignment={i: int(label) for i, label in enumerate(labels)},
        centroids=tuple(tuple(float(c) for c in row) for row in centroids),
        wss=float(np.dot(w, sq)),
    )


def kmeans(
    points: np.ndarray | Sequence[Sequence[float]],
    k: int,
    restarts: int = 10,
    seed: int = 0,
    *,
    weights: np.ndarray | Sequence[float] | None = None,
    threads: int = 1,
) -> KMeansResult:
    data = np.asarray(points, dtype=float)
    if data.ndim != 2 or data.shape[0] == 0:
        raise InputError("kmeans needs a non-empty 2-D array of points.")
    n = data.shape[0]
    if not 1 <= k <= n:
        raise InputError(f"k={k} is outside [1, {n}].")
    if restarts < 1:
        raise InputError("restarts must be positive.")
    w = None if weights is None else np.asarray(weights, dtype=float)
    results = ordered_map(
        lambda r: _one_restart(data, k, w, seed, r), range(restarts), threads=threads
    )
    best = min(range(restarts), key=lambda r: (results[r].wss, r))
    return results[best]


def elbow_from_curve(curve: Mapping[int, float]) -> int:
    """k maximising wss(k-1) - 2 wss(k) + wss(k+1); ties go to the smaller k."""
    ks = sorted(curve)
    if len(ks) < 3:
        raise InputError("The elbow needs a wss curve with at least three points.")
    interior = [k for k in ks if k - 1 in curve and k + 1 in curve]
    if not interior:
        raise InputError("The wss curve has no interior point.")
    return max(interior, key=lambda k: (curve[k - 1] - 2.0 * curve[k] + curve[k + 1], -k))


def elbow_select(
    points: np.ndarray | Sequence[Sequence[float]],
    k_range: tuple[int, int],
    restarts: int = 10,
    seed: int = 0,
    *,
    weights: np.ndarray | Sequence[float] | None = None,
    threads: int = 1,
) -> tuple[int, dict[int, float]]:
    data = np.asarray(points, dtype=float)
    n = data.shape[0]
    lo, hi = k_range
    if not 1 <= lo <= hi <= n:
        raise InputError(f"k range {k_range} is outside [1, {n}].")
    curve = {
        k: kmeans(data, k, restarts, seed, weights=weights, threads=threads).wss
        for k in range(lo, hi + 1)
    }
    extended = dict(curve)
    if hi == n:
        extended[n + 1] = 0.0
    if len(extended) < 3:
        raise InputError(f"k range {k_range} is too short for elbow selection.")
    selected = elbow_from_curve(extended)
    logger.info("cluster.elbow", k=selected, curve={str(k): v for k, v in curve.items()})
    return selected, curve


def assemble_clusters(
    kres: KMeansResult, profiles: Sequence[SubCommunityProfile]
) -> list[CommunityCluster]:
    missing = [p.index for p in profiles if p.index not in kres.assignment]
    if missing:
        raise ConsistencyError(f"Cell {missing[0]} has no cluster assignment.")
    grouped: dict[int, list[SubCommunityProfile]] = {}
    for profile in profiles:
        grouped.setdefault(kres.assignment[profile.index], []).append(profile)

    def mean_s_out(cells: list[SubCommunityProfile]) -> float | None:
        values = [p.sent_vector[1] for p in cells if p.sent_vector[1] is not None]
        return float(np.mean(values)) if values else None

    drafts = [
        (
            frozenset(n for p in cells for n in p.members),
            tuple(p.index for p in cells),
            mean_s_out(cells),
        )
        for _, cells in sorted(grouped.items())
    ]
    # most positive out-sentiment first; undefined last; ties by smallest member
    drafts.sort(
        key=lambda d: (d[2] is None, -(d[2] or 0.0), min(d[0]) if d[0] else "")
    )
    return [
        CommunityCluster(index=i, members=members, cells=cells, mean_s_out=mean)
        for i, (members, cells, mean) in enumerate(drafts)
    ]


def cluster_assignment(clusters: Sequence[CommunityCluster]) -> dict[UserId, int]:
    return {n: c.index for c in clusters for n in sorted(c.members)}


def write_clusters(clusters: Sequence[CommunityCluster], path: Path) -> None:
    rows = sorted(cluster_assignment(clusters).items())
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(rows, columns=["user", "cluster"]).to_csv(path, index=False, lineterminator="\n")


def read_clusters(path: Path) -> dict[UserId, int]:
    frame = pd.read_csv(path, dtype={"user": str}, keep_default_na=False)
    return dict(zip(frame["user"], (int(c) for c in frame["cluster"]), strict=True))


def write_wss_curve(curve: Mapping[int, float], path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(sorted(curve.items()), columns=["k", "wss"]).to_csv(
        path, index=False, lineterminator="\n"
    )
