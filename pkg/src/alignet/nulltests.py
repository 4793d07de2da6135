"""Randomisation tests for sentiment homophily.

Two nulls are provided: edge-sentiment resampling (topology fixed, link
scores redrawn with replacement) for the in/out sentiment correlation, and
label resampling for the fractions of links between polarity groups. Every
iteration draws from its own stream derived from (seed, iteration), so the
samples do not depend on the thread count.
"""

from __future__ import annotations

from collections import Counter
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy import stats

from .errors import ConsistencyError, InputError
from .graphs import Graph, InteractionGraph
from .logging import get_logger
from .model import UserId
from .utils.parallel import ordered_map
from .utils.rng import derive_rng

logger = get_logger(__name__)

type Verdict = Literal["outside_band", "inside_band"]
type LabelMode = Literal["resample", "permute"]
type PairType = tuple[str, str]
type LinkFractions = dict[PairType, float]

DEFAULT_BAND = (0.025, 0.975)
MIN_CORRELATION_USERS = 3


@dataclass(frozen=True, slots=True)
class RandTestResult:
    observed: float
    null_samples: tuple[float, ...]
    quantile_lo: float
    quantile_hi: float
    verdict: Verdict
    band: tuple[float, float] = DEFAULT_BAND
    seed: int = 0
    expected: float | None = None

    @property
    def iterations(self) -> int:
        return len(self.null_samples)

    def to_dict(self) -> dict[str, object]:
        payload: dict[str, object] = {
            "observed": self.observed,
            "band": list(self.band),
            "quantile_lo": self.quantile_lo,
            "quantile_hi": self.quantile_hi,
            "verdict": self.verdict,
            "iterations": self.iterations,
            "seed": self.seed,
        }
        if self.expected is not None:
            payload["null_mean_expected"] = self.expected
        return payload


def pair_key(a: str, b: str) -> PairType:
    return (a, b) if a <= b else (b, a)


def pair_name(pair: PairType) -> str:
    return f"{pair[0]}|{pair[1]}"


def _check_band(band: tuple[float, float]) -> tuple[float, float]:
    lo, hi = float(band[0]), float(band[1])
    if not 0.0 <= lo <= hi <= 1.0:
        raise InputError(f"Invalid quantile band {band!r}.")
    return lo, hi


def _summarise(
    observed: float, samples: np.ndarray, band: tuple[float, float], seed: int
) -> RandTestResult:
    valid = samples[~np.isnan(samples)]
    if valid.size == 0:
        raise InputError("Every null sample was undefined; the test has no null distribution.")
    lo, hi = (float(q) for q in np.quantile(valid, band, method="linear"))
    verdict: Verdict = "outside_band" if observed < lo or observed > hi else "inside_band"
    return RandTestResult(
        observed=float(observed),
        null_samples=tuple(float(s) for s in samples),
        quantile_lo=lo,
        quantile_hi=hi,
        verdict=verdict,
        band=band,
        seed=seed,
    )


def pearson(x: Sequence[float] | np.ndarray, y: Sequence[float] | np.ndarray) -> float:
    xs = np.asarray(x, dtype=float)
    ys = np.asarray(y, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise InputError("pearson() needs two sequences of equal length.")
    if xs.size < 2:
        raise InputError("pearson() needs at least two observations.")
    if np.ptp(xs) == 0 or np.ptp(ys) == 0:
        raise InputError("Correlation is undefined for a constant sequence.")
    return float(np.clip(stats.pearsonr(xs, ys).statistic, -1.0, 1.0))


def _edge_arrays(g: InteractionGraph) -> tuple[list[UserId], np.ndarray, np.ndarray, np.ndarray]:
    keys = sorted(g.edges)
    nodes = sorted(g.nodes)
    index = {node: i for i, node in enumerate(nodes)}
    src = np.fromiter((index[u] for u, _ in keys), dtype=np.int64, count=len(keys))
    dst = np.fromiter((index[v] for _, v in keys), dtype=np.int64, count=len(keys))
    sentiment = np.fromiter(
        (g.edges[k].mean_sentiment for k in keys), dtype=float, count=len(keys)
    )
    return nodes, src, dst, sentiment


def resample_edge_sentiment(g: InteractionGraph, rng: np.random.Generator) -> InteractionGraph:
    if not g.edges:
        raise InputError("Cannot resample edge sentiment of an edgeless graph.")
    keys = sorted(g.edges)
    observed = np.array([g.edges[k].mean_sentiment for k in keys], dtype=float)
    drawn = rng.choice(observed, size=observed.size, replace=True)
    edges = {k: g.edges[k].with_sentiment(float(v)) for k, v in zip(keys, drawn, strict=True)}
    return InteractionGraph(nodes=g.nodes, edges=edges)


def _in_out_correlation(
    src: np.ndarray,
    dst: np.ndarray,
    sentiment: np.ndarray,
    in_degree: np.ndarray,
    out_degree: np.ndarray,
    both: np.ndarray,
) -> float:
    n = in_degree.size
    s_in = np.bincount(dst, weights=sentiment, minlength=n)[both] / in_degree[both]
    s_out = np.bincount(src, weights=sentiment, minlength=n)[both] / out_degree[both]
    if np.ptp(s_in) == 0 or np.ptp(s_out) == 0:
        return float("nan")
    return float(np.clip(stats.pearsonr(s_in, s_out).statistic, -1.0, 1.0))


def correlation_null_test(
    g: InteractionGraph,
    iterations: int = 1000,
    band: tuple[float, float] = DEFAULT_BAND,
    seed: int = 0,
    *,
    threads: int = 1,
) -> RandTestResult:
    if iterations < 1:
        raise InputError("iterations must be positive.")
    band = _check_band(band)
    if not g.edges:
        raise InputError("Cannot run the correlation test on an edgeless graph.")
    nodes, src, dst, sentiment = _edge_arrays(g)
    in_degree = np.bincount(dst, minlength=len(nodes)).astype(float)
    out_degree = np.bincount(src, minlength=len(nodes)).astype(float)
    both = (in_degree > 0) & (out_degree > 0)
    if int(both.sum()) < MIN_CORRELATION_USERS:
        raise InputError(
            f"Only {int(both.sum())} users have both in- and out-sentiment; "
            f"at least {MIN_CORRELATION_USERS} are required."
        )
    observed = _in_out_correlation(src, dst, sentiment, in_degree, out_degree, both)
    if np.isnan(observed):
        raise InputError("Observed in/out sentiment correlation is undefined (zero variance).")

    def one(iteration: int) -> float:
        rng = derive_rng(seed, iteration)
        drawn = rng.choice(sentiment, size=sentiment.size, replace=True)
        return _in_out_correlation(src, dst, drawn, in_degree, out_degree, both)

    samples = np.array(ordered_map(one, range(iterations), threads=threads), dtype=float)
    undefined = int(np.isnan(samples).sum())
    if undefined:
        logger.warning("nulltest.zero_variance", undefined=undefined, iterations=iterations)
    result = _summarise(observed, samples, band, seed)
    logger.info(
        "nulltest.correlation.done",
        observed=result.observed,
        quantile_lo=result.quantile_lo,
        quantile_hi=result.quantile_hi,
        verdict=result.verdict,
    )
    return result


def _label_codes(
    g: Graph, labels: Mapping[UserId, str], categories: Sequence[str] | None
) -> tuple[list[str], np.ndarray, np.ndarray, np.ndarray]:
    edges = sorted(g.edge_set())
    if not edges:
        raise InputError("Link fractions are undefined for a graph without edges.")
    nodes = sorted(g.nodes | {n for e in edges for n in e})
    unlabeled = [n for n in nodes if n not in labels]
    if unlabeled:
        raise ConsistencyError(f"Node {unlabeled[0]!r} has no label.")
    cats = sorted(set(categories) if categories is not None else {labels[n] for n in nodes})
    extra = {labels[n] for n in nodes} - set(cats)
    if extra:
        raise ConsistencyError(f"Label {min(extra)!r} is not one of the categories {cats}.")
    cat_index = {c: i for i, c in enumerate(cats)}
    node_index = {n: i for i, n in enumerate(nodes)}
    codes = np.array([cat_index[labels[n]] for n in nodes], dtype=np.int64)
    src = np.array([node_index[u] for u, _ in edges], dtype=np.int64)
    dst = np.array([node_index[v] for _, v in edges], dtype=np.int64)
    return cats, codes, src, dst


def _fractions(codes: np.ndarray, src: np.ndarray, dst: np.ndarray, k: int) -> np.ndarray:
    a = codes[src]
    b = codes[dst]
    slot = np.minimum(a, b) * k + np.maximum(a, b)
    return np.bincount(slot, minlength=k * k) / src.size


def _pair_slots(cats: Sequence[str]) -> list[tuple[PairType, int]]:
    k = len(cats)
    return [((cats[i], cats[j]), i * k + j) for i in range(k) for j in range(i, k)]


def link_fractions(
    g: Graph, labels: Mapping[UserId, str], *, categories: Sequence[str] | None = None
) -> LinkFractions:
    """Share of edges per unordered endpoint-label pair; each directed edge counts once."""
    cats, codes, src, dst = _label_codes(g, labels, categories)
    fractions = _fractions(codes, src, dst, len(cats))
    return {pair: float(fractions[slot]) for pair, slot in _pair_slots(cats)}


def expected_link_fractions(
    g: Graph,
    labels: Mapping[UserId, str],
    *,
    categories: Sequence[str] | None = None,
    mode: LabelMode = "resample",
) -> LinkFractions:
    """Exact null mean of every link fraction under the given label randomisation."""
    cats, codes, _, _ = _label_codes(g, labels, categories)
    n = codes.size
    counts = np.bincount(codes, minlength=len(cats)).astype(float)
    expected: LinkFractions = {}
    for a, b in (pair for pair, _ in _pair_slots(cats)):
        i, j = cats.index(a), cats.index(b)
        if mode == "resample":
            p_i, p_j = counts[i] / n, counts[j] / n
            value = p_i * p_i if i == j else 2.0 * p_i * p_j
        else:
            if n < 2:
                value = 0.0
            elif i == j:
                value = counts[i] * (counts[i] - 1.0) / (n * (n - 1.0))
            else:
                value = 2.0 * counts[i] * counts[j] / (n * (n - 1.0))
        expected[(a, b)] = float(value)
    return expected


def label_permutation_test(
    g: Graph,
    labels: Mapping[UserId, str],
    iterations: int = 1000,
    band: tuple[float, float] = DEFAULT_BAND,
    seed: int = 0,
    *,
    categories: Sequence[str] | None = None,
    mode: LabelMode = "resample",
    threads: int = 1,
) -> dict[PairType, RandTestResult]:
    if iterations < 1:
        raise InputError("iterations must be positive.")
    if mode not in ("resample", "permute"):
        raise InputError(f"Unknown label mode {mode!r}.")
    band = _check_band(band)
    cats, codes, src, dst = _label_codes(g, labels, categories)
    k = len(cats)
    observed = _fractions(codes, src, dst, k)

    def one(iteration: int) -> np.ndarray:
        rng = derive_rng(seed, iteration)
        if mode == "resample":
            drawn = rng.choice(codes, size=codes.size, replace=True)
        else:
            drawn = rng.permutation(codes)
        return _fractions(drawn, src, dst, k)

    samples = np.vstack(ordered_map(one, range(iterations), threads=threads))
    expected = expected_link_fractions(g, labels, categories=cats, mode=mode)
    results: dict[PairType, RandTestResult] = {}
    for pair, slot in _pair_slots(cats):
        result = _summarise(float(observed[slot]), samples[:, slot], band, seed)
        results[pair] = RandTestResult(
            observed=result.observed,
            null_samples=result.null_samples,
            quantile_lo=result.quantile_lo,
            quantile_hi=result.quantile_hi,
            verdict=result.verdict,
            band=band,
            seed=seed,
            expected=expected[pair],
        )
    label_counts = Counter(labels[n] for n in g.nodes if n in labels)
    logger.info(
        "nulltest.labels.done",
        mode=mode,
        pair_types=len(results),
        outside=sum(1 for r in results.values() if r.verdict == "outside_band"),
        labels=dict(sorted(label_counts.items())),
    )
    return results
