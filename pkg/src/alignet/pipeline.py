"""Stage orchestration over file artifacts.

Each stage reads its upstream artifacts from the output directory, writes its
own outputs under ``<out>/<stage>/`` and a manifest under
``<out>/manifest/<stage>.json`` recording input and output hashes, the seed
and the package version.
"""

from __future__ import annotations

from collections import Counter
from collections.abc import Callable, Iterable, Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal

import numpy as np
import pandas as pd

from . import __version__
from .aggregate import (
    GroupScheme,
    aggregate_summary,
    compute_user_sentiment,
    group_users,
    polarity_labels,
    read_user_aggregates,
    write_user_aggregates,
)
from .clustering import (
    assemble_clusters,
    elbow_select,
    kmeans,
    prepare_points,
    read_clusters,
    write_clusters,
    write_wss_curve,
)
from .communities import (
    intersect_partitions,
    prune_small,
    read_partition,
    stability_scan,
    subcommunity_profiles,
    write_partition,
    write_profiles,
)
from .config import ConfigError
from .errors import ConsistencyError, InputError, MissingArtifactError
from .graphs import (
    FollowerGraph,
    InteractionGraph,
    align_networks,
    build_follower_graph,
    build_mention_graph,
    read_follower_edges,
    read_mention_edges,
    read_nodes,
    reciprocal_subgraph,
    summary_stats,
    write_follower_edges,
    write_mention_edges,
    write_nodes,
)
from .ingest import filter_hashtags, filter_window, load_corpus, parse_corpus, parse_followers
from .ingest import write_corpus, write_followers
from .lexicon import (
    bundled_lexicon_path,
    distribution_to_dict,
    load_lexicon,
    read_scores,
    score_corpus,
    score_distribution,
    write_scores,
)
from .logging import bind_run_context, clear_context, get_logger, log_pipeline
from .model import MESSAGE_KINDS, Corpus, SentimentScore, UserId
from .nulltests import (
    RandTestResult,
    correlation_null_test,
    label_permutation_test,
    pair_name,
)
from .report import (
    Direction,
    activity_bins,
    activity_timeseries,
    cluster_link_fractions,
    cluster_sentiment_stats,
    combine_interactions,
    day_boundaries,
    evaluate_alignment,
    follower_coverage,
    kind_breakdown,
    mention_type_table,
    read_annotations,
    tweets_per_user_ccdf,
)
from .settings import AlignetSettings, ResolvedPaths
from .synth import generate, load_synth_config, template_sweep, verify_roundtrip, write_synth
from .utils.files import atomic_write_json, sha256_file
from .utils.rng import derive_seed

logger = get_logger(__name__)

type Stage = Literal[
    "ingest",
    "score",
    "graph",
    "aggregate",
    "nulltest",
    "communities",
    "intersect",
    "cluster",
    "report",
    "synth",
]

PIPELINE_STAGES: tuple[Stage, ...] = (
    "ingest",
    "score",
    "graph",
    "aggregate",
    "nulltest",
    "communities",
    "intersect",
    "cluster",
    "report",
)
ALL_STAGES: tuple[Stage, ...] = (*PIPELINE_STAGES, "synth")

MESSAGES = "ingest/messages.jsonl"
FOLLOWERS = "ingest/followers.csv"
SCORES = "score/scores.csv"
MENTION_EDGES = "graph/mention_edges.csv"
FOLLOWER_EDGES = "graph/follower_edges.csv"
ALIGNED_NODES = "graph/aligned_nodes.txt"
ALIGNED_MENTION_EDGES = "graph/aligned_mention_edges.csv"
ALIGNED_FOLLOWER_EDGES = "graph/aligned_follower_edges.csv"
USER_AGGREGATES = "aggregate/users.csv"
MENTION_COMMUNITIES = "communities/mention.csv"
FOLLOWER_COMMUNITIES = "communities/follower.csv"
SUBCOMMUNITIES = "intersect/subcommunities.csv"
CLUSTERS = "cluster/clusters.csv"

# outputs a downstream stage reads, per producing stage
REQUIRED_OUTPUTS: dict[Stage, tuple[str, ...]] = {
    "ingest": (MESSAGES, FOLLOWERS),
    "score": (SCORES,),
    "graph": (
        MENTION_EDGES,
        FOLLOWER_EDGES,
        ALIGNED_NODES,
        ALIGNED_MENTION_EDGES,
        ALIGNED_FOLLOWER_EDGES,
    ),
    "aggregate": (USER_AGGREGATES,),
    "nulltest": (),
    "communities": (MENTION_COMMUNITIES, FOLLOWER_COMMUNITIES),
    "intersect": (SUBCOMMUNITIES,),
    "cluster": (CLUSTERS,),
    "report": (),
    "synth": (),
}

UPSTREAM: dict[Stage, tuple[Stage, ...]] = {
    "ingest": (),
    "score": ("ingest",),
    "graph": ("ingest", "score"),
    "aggregate": ("graph",),
    "nulltest": ("graph", "aggregate"),
    "communities": ("graph",),
    "intersect": ("communities", "aggregate"),
    "cluster": ("intersect", "aggregate"),
    "report": ("ingest", "score", "graph", "cluster"),
    "synth": (),
}


@dataclass(frozen=True, slots=True)
class StageContext:
    settings: AlignetSettings
    paths: ResolvedPaths
    seed: int
    threads: int = 1

    @property
    def out(self) -> Path:
        return self.paths.output_dir

    def path(self, relative: str) -> Path:
        return self.out / relative


@dataclass(slots=True)
class StageResult:
    stage: Stage
    outputs: list[Path] = field(default_factory=list)
    inputs: dict[str, Path] = field(default_factory=dict)
    summary: dict[str, Any] = field(default_factory=dict)
    manifest: Path | None = None

    def add(self, path: Path) -> Path:
        self.outputs.append(path)
        return path


def upstream_stages(stage: Stage) -> list[Stage]:
    """Every stage `stage` depends on, directly or not, in pipeline order."""
    found: set[Stage] = set()
    pending = list(UPSTREAM[stage])
    while pending:
        current = pending.pop()
        if current not in found:
            found.add(current)
            pending.extend(UPSTREAM[current])
    return [s for s in PIPELINE_STAGES if s in found]


def required_artifacts(stage: Stage) -> list[str]:
    return [path for up in upstream_stages(stage) for path in REQUIRED_OUTPUTS[up]]


def check_upstream(stage: Stage, ctx: StageContext) -> None:
    for relative in required_artifacts(stage):
        path = ctx.path(relative)
        if not path.is_file():
            raise MissingArtifactError(path, stage=stage)


def _require_input(path: Path | None, *, stage: Stage, name: str) -> Path:
    if path is None:
        raise ConfigError(f"Stage `{stage}` needs `{name}` to be set in the config.")
    if not path.is_file():
        raise MissingArtifactError(path, stage=stage)
    return path


def _relative(path: Path, out: Path) -> str:
    try:
        return path.relative_to(out).as_posix()
    except ValueError:
        return path.name


def write_manifest(result: StageResult, ctx: StageContext) -> Path:
    payload = {
        "stage": result.stage,
        "version": __version__,
        "seed": ctx.seed,
        "settings": ctx.settings.model_dump(mode="json", exclude={"threads", "output_dir"}),
        "inputs": {
            name: sha256_file(path) for name, path in sorted(result.inputs.items())
        },
        "outputs": {
            _relative(path, ctx.out): sha256_file(path)
            for path in sorted(result.outputs, key=lambda p: _relative(p, ctx.out))
        },
    }
    path = ctx.path(f"manifest/{result.stage}.json")
    atomic_write_json(path, payload)
    return path


def _read_corpus(ctx: StageContext) -> Corpus:
    return parse_corpus(ctx.path(MESSAGES), threads=ctx.threads)


def _read_aligned(ctx: StageContext) -> tuple[InteractionGraph, FollowerGraph]:
    nodes = read_nodes(ctx.path(ALIGNED_NODES))
    return (
        read_mention_edges(ctx.path(ALIGNED_MENTION_EDGES), nodes=nodes),
        read_follower_edges(ctx.path(ALIGNED_FOLLOWER_EDGES), nodes=nodes),
    )


def _upstream_inputs(ctx: StageContext, *relative: str) -> dict[str, Path]:
    return {name: ctx.path(name) for name in relative}


def run_ingest(ctx: StageContext, result: StageResult) -> None:
    corpus_path = _require_input(ctx.paths.corpus, stage="ingest", name="inputs.corpus")
    followers_path = _require_input(ctx.paths.followers, stage="ingest", name="inputs.followers")
    result.inputs = {"inputs.corpus": corpus_path, "inputs.followers": followers_path}

    loaded = load_corpus(
        corpus_path, prefer_entities=ctx.settings.inputs.prefer_entities, threads=ctx.threads
    )
    corpus = loaded.corpus
    window = ctx.settings.window
    if window.start is not None or window.end is not None:
        first = corpus.messages[0].timestamp if corpus.messages else 0
        last = corpus.messages[-1].timestamp + 1 if corpus.messages else 0
        corpus = filter_window(
            corpus,
            window.start if window.start is not None else first,
            window.end if window.end is not None else last,
        )
    if window.hashtags:
        corpus = filter_hashtags(corpus, window.hashtags)
    followers = parse_followers(followers_path)

    write_corpus(corpus, result.add(ctx.path(MESSAGES)))
    write_followers(followers, result.add(ctx.path(FOLLOWERS)))
    atomic_write_json(result.add(ctx.path("ingest/rejects.json")), loaded.rejects.to_dict())
    result.summary = {
        "messages": len(corpus),
        "users": len(corpus.users),
        "mention_messages": len(corpus.mention_messages()),
        "rejected": len(loaded.rejects.rejected),
        "follower_edges": len(followers.edges),
        "kinds": kind_breakdown(corpus),
    }
    atomic_write_json(result.add(ctx.path("ingest/summary.json")), result.summary)


def run_score(ctx: StageContext, result: StageResult) -> None:
    lexicon_path = ctx.paths.lexicon
    if lexicon_path is not None:
        _require_input(lexicon_path, stage="score", name="inputs.lexicon")
    else:
        lexicon_path = bundled_lexicon_path()
    result.inputs = {"inputs.lexicon": lexicon_path, **_upstream_inputs(ctx, MESSAGES)}

    lexicon = load_lexicon(lexicon_path)
    scores = score_corpus(lexicon, _read_corpus(ctx), threads=ctx.threads)
    write_scores(scores, result.add(ctx.path(SCORES)))
    distribution = score_distribution(scores)
    atomic_write_json(
        result.add(ctx.path("score/distribution.json")), distribution_to_dict(distribution)
    )
    result.summary = {
        "messages": distribution.total,
        "zero_fraction": distribution.zero_fraction,
        "neutral_share_of_zero": distribution.neutral_share_of_zero,
    }


def run_graph(ctx: StageContext, result: StageResult) -> None:
    result.inputs = _upstream_inputs(ctx, MESSAGES, FOLLOWERS, SCORES)
    mention = build_mention_graph(_read_corpus(ctx), read_scores(ctx.path(SCORES)))
    follower = build_follower_graph(parse_followers(ctx.path(FOLLOWERS)))
    mention_recip = reciprocal_subgraph(mention)
    follower_recip = reciprocal_subgraph(follower)
    aligned_mention, aligned_follower = align_networks(mention_recip, follower_recip)

    write_mention_edges(mention, result.add(ctx.path(MENTION_EDGES)))
    write_follower_edges(follower, result.add(ctx.path(FOLLOWER_EDGES)))
    write_nodes(aligned_mention.nodes, result.add(ctx.path(ALIGNED_NODES)))
    write_mention_edges(aligned_mention, result.add(ctx.path(ALIGNED_MENTION_EDGES)))
    write_follower_edges(aligned_follower, result.add(ctx.path(ALIGNED_FOLLOWER_EDGES)))
    stats = {
        "mention": summary_stats(mention).to_dict(),
        "mention_reciprocal": summary_stats(mention_recip).to_dict(),
        "mention_aligned": summary_stats(aligned_mention).to_dict(),
        "follower": summary_stats(follower).to_dict(),
        "follower_reciprocal": summary_stats(follower_recip).to_dict(),
        "follower_aligned": summary_stats(aligned_follower).to_dict(),
    }
    atomic_write_json(result.add(ctx.path("graph/stats.json")), stats)
    result.summary = {
        "mention_nodes": stats["mention"]["nodes"],
        "follower_nodes": stats["follower"]["nodes"],
        "aligned_nodes": len(aligned_mention.nodes),
    }


def _aggregate_sources(ctx: StageContext) -> tuple[str, ...]:
    if ctx.settings.aggregate.graph == "aligned":
        return (ALIGNED_MENTION_EDGES, ALIGNED_NODES)
    return (MENTION_EDGES,)


def _aggregate_graph(ctx: StageContext) -> InteractionGraph:
    if ctx.settings.aggregate.graph == "aligned":
        return _read_aligned(ctx)[0]
    return read_mention_edges(ctx.path(MENTION_EDGES))


def run_aggregate(ctx: StageContext, result: StageResult) -> None:
    result.inputs = _upstream_inputs(ctx, *_aggregate_sources(ctx))
    aggregates = compute_user_sentiment(
        _aggregate_graph(ctx), neighbours=ctx.settings.aggregate.neighbours, threads=ctx.threads
    )
    labels = polarity_labels(aggregates, field=ctx.settings.aggregate.polarity)
    write_user_aggregates(aggregates, labels, result.add(ctx.path(USER_AGGREGATES)))
    summary = {
        "fields": aggregate_summary(aggregates),
        "labels": dict(sorted(Counter(labels.values()).items())),
    }
    atomic_write_json(result.add(ctx.path("aggregate/summary.json")), summary)
    result.summary = {"users": len(aggregates), **summary["labels"]}


def _scheme_labels(
    scheme: GroupScheme, labels: Mapping[UserId, str], scores: Mapping[UserId, float | None]
) -> dict[UserId, str]:
    if scheme == "sign":
        return dict(labels)
    return group_users(scores, scheme)


def _label_tests(
    ctx: StageContext,
    graphs: Mapping[str, InteractionGraph | FollowerGraph],
    labels: Mapping[UserId, str],
    scores: Mapping[UserId, float | None],
) -> tuple[dict[str, Any], dict[str, dict[str, RandTestResult]]]:
    config = ctx.settings.nulltest
    report: dict[str, Any] = {}
    raw: dict[str, dict[str, RandTestResult]] = {}
    for scheme_index, scheme in enumerate(config.schemes):
        try:
            scheme_labels = _scheme_labels(scheme, labels, scores)
        except InputError as exc:
            logger.warning("nulltest.labels.skipped", scheme=scheme, reason=str(exc))
            report[scheme] = {"skipped": str(exc)}
            continue
        per_network: dict[str, Any] = {}
        for network_index, (network, graph) in enumerate(sorted(graphs.items())):
            seed = derive_seed(ctx.seed, 1 + scheme_index, network_index)
            try:
                results = label_permutation_test(
                    graph.restrict(scheme_labels),
                    scheme_labels,
                    config.iterations,
                    config.band,
                    seed,
                    mode=config.label_mode,
                    threads=ctx.threads,
                )
            except InputError as exc:
                logger.warning(
                    "nulltest.labels.skipped", scheme=scheme, network=network, reason=str(exc)
                )
                per_network[network] = {"skipped": str(exc)}
                continue
            per_network[network] = {pair_name(p): r.to_dict() for p, r in sorted(results.items())}
            raw[f"{scheme}_{network}"] = {pair_name(p): r for p, r in sorted(results.items())}
        report[scheme] = per_network
    return report, raw


def _write_samples(path: Path, columns: Mapping[str, RandTestResult]) -> None:
    frame = pd.DataFrame({name: list(r.null_samples) for name, r in columns.items()})
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator="\n", na_rep="")


def run_nulltest(ctx: StageContext, result: StageResult) -> None:
    config = ctx.settings.nulltest
    result.inputs = _upstream_inputs(
        ctx, *_aggregate_sources(ctx), ALIGNED_FOLLOWER_EDGES, ALIGNED_NODES, USER_AGGREGATES
    )
    mention = _aggregate_graph(ctx)
    _, aligned_follower = _read_aligned(ctx)
    aggregates, labels = read_user_aggregates(ctx.path(USER_AGGREGATES))
    polarity = ctx.settings.aggregate.polarity
    scores = {u: getattr(s, polarity) for u, s in aggregates.items()}

    correlation: RandTestResult | None = None
    try:
        correlation = correlation_null_test(
            mention, config.iterations, config.band, derive_seed(ctx.seed, 0), threads=ctx.threads
        )
        correlation_report: dict[str, Any] = correlation.to_dict()
    except InputError as exc:
        logger.warning("nulltest.correlation.skipped", reason=str(exc))
        correlation_report = {"skipped": str(exc)}
    atomic_write_json(result.add(ctx.path("nulltest/correlation.json")), correlation_report)

    graphs = {"mention": mention, "follower": aligned_follower}
    label_report, raw = _label_tests(ctx, graphs, labels, scores)
    atomic_write_json(result.add(ctx.path("nulltest/labels.json")), label_report)

    if config.dump_samples:
        if correlation is not None:
            _write_samples(
                result.add(ctx.path("nulltest/samples/correlation.csv")),
                {"correlation": correlation},
            )
        for name, columns in sorted(raw.items()):
            _write_samples(result.add(ctx.path(f"nulltest/samples/{name}.csv")), columns)

    result.summary = {
        "correlation": correlation_report.get("verdict", "skipped"),
        "label_tests": len(raw),
        "outside_band": sum(
            1 for columns in raw.values() for r in columns.values() if r.verdict == "outside_band"
        ),
    }


def run_communities(ctx: StageContext, result: StageResult) -> None:
    config = ctx.settings.communities
    result.inputs = _upstream_inputs(
        ctx, ALIGNED_NODES, ALIGNED_MENTION_EDGES, ALIGNED_FOLLOWER_EDGES
    )
    mention, follower = _read_aligned(ctx)
    scans: dict[str, Any] = {}
    sizes: dict[str, int] = {}
    for name, graph, relative in (
        ("mention", mention, MENTION_COMMUNITIES),
        ("follower", follower, FOLLOWER_COMMUNITIES),
    ):
        log_pipeline(logger, "pipeline.communities.scan", network=name, nodes=len(graph.nodes))
        partition, diagnostics = stability_scan(
            graph, config.times, config.restarts, ctx.seed, threads=ctx.threads
        )
        write_partition(partition, result.add(ctx.path(relative)))
        scans[name] = [entry.to_dict() for entry in diagnostics]
        sizes[name] = partition.k
    atomic_write_json(result.add(ctx.path("communities/scan.json")), scans)
    result.summary = {
        "mention_communities": sizes["mention"],
        "follower_communities": sizes["follower"],
    }


def run_intersect(ctx: StageContext, result: StageResult) -> None:
    result.inputs = _upstream_inputs(
        ctx, MENTION_COMMUNITIES, FOLLOWER_COMMUNITIES, USER_AGGREGATES
    )
    cells = intersect_partitions(
        read_partition(ctx.path(MENTION_COMMUNITIES)),
        read_partition(ctx.path(FOLLOWER_COMMUNITIES)),
    )
    kept, removed = prune_small(cells, ctx.settings.communities.min_size)
    aggregates, _ = read_user_aggregates(ctx.path(USER_AGGREGATES))
    profiles = subcommunity_profiles(kept, aggregates)

    write_partition(cells, result.add(ctx.path("intersect/cells.csv")), column="cell")
    write_partition(kept, result.add(ctx.path(SUBCOMMUNITIES)), column="cell")
    write_profiles(profiles, result.add(ctx.path("intersect/profiles.csv")))
    write_nodes(removed, result.add(ctx.path("intersect/removed_users.txt")))
    result.summary = {
        "cells": cells.k,
        "kept": kept.k,
        "removed_users": len(removed),
    }


def _choose_k(
    ctx: StageContext, points: np.ndarray, weights: np.ndarray | None
) -> tuple[int, dict[int, float]]:
    config = ctx.settings.clustering
    n = len(points)
    lo, hi = min(config.k_min, n), min(config.k_max, n)
    curve_points = hi - lo + 1 + (1 if hi == n else 0)
    if curve_points >= 3:
        return elbow_select(
            points, (lo, hi), config.restarts, ctx.seed, weights=weights, threads=ctx.threads
        )
    curve = {
        k: kmeans(points, k, config.restarts, ctx.seed, weights=weights, threads=ctx.threads).wss
        for k in range(lo, hi + 1)
    }
    logger.warning("cluster.elbow.skipped", points=n, k=lo)
    return lo, curve


def run_cluster(ctx: StageContext, result: StageResult) -> None:
    config = ctx.settings.clustering
    result.inputs = _upstream_inputs(ctx, SUBCOMMUNITIES, USER_AGGREGATES)
    partition = read_partition(ctx.path(SUBCOMMUNITIES), column="cell")
    aggregates, _ = read_user_aggregates(ctx.path(USER_AGGREGATES))
    profiles = subcommunity_profiles(partition, aggregates)
    prepared = prepare_points(profiles, standardize=config.standardize, weighted=config.weighted)

    k, curve = _choose_k(ctx, prepared.points, prepared.weights)
    kres = kmeans(
        prepared.points,
        k,
        config.restarts,
        ctx.seed,
        weights=prepared.weights,
        threads=ctx.threads,
    )
    clusters = assemble_clusters(kres, profiles)

    write_clusters(clusters, result.add(ctx.path(CLUSTERS)))
    write_wss_curve(curve, result.add(ctx.path("cluster/wss.csv")))
    summary = {
        "k": k,
        "imputed_components": int(prepared.imputed.sum()),
        "clusters": [
            {
                "index": c.index,
                "size": c.size,
                "cells": list(c.cells),
                "mean_s_out": c.mean_s_out,
            }
            for c in clusters
        ],
    }
    atomic_write_json(result.add(ctx.path("cluster/summary.json")), summary)
    result.summary = {"k": k, "sizes": [c.size for c in clusters]}


def _interaction_rows(
    corpus: Corpus,
    scores: Mapping[str, SentimentScore],
    clusters: Mapping[UserId, int],
    mention: InteractionGraph,
    follower: FollowerGraph,
    direction: Direction,
) -> list[dict[str, Any]]:
    table = mention_type_table(corpus, scores, clusters)
    coverage = follower_coverage(corpus, clusters, follower, direction=direction)
    sentiment = cluster_sentiment_stats(mention.restrict(clusters), clusters)
    rows: list[dict[str, Any]] = []
    for row in combine_interactions(table, coverage, sentiment):
        record: dict[str, Any] = {"source": row.source, "target": row.target}
        for kind in MESSAGE_KINDS:
            record[f"n_{kind}"] = row.counts[kind]
            record[f"share_{kind}"] = row.proportions[kind]
            record[f"mean_difference_{kind}"] = row.mean_difference.get(kind)
            record[f"follower_coverage_{kind}"] = row.follower_coverage.get(kind)
        stats = row.sentiment_stats.to_dict() if row.sentiment_stats else {}
        for key in ("min", "q1", "median", "q3", "max", "mean", "count"):
            record[f"edge_sentiment_{key}"] = stats.get(key)
        rows.append(record)
    return rows


def _write_frame(rows: Iterable[Any], path: Path, columns: list[str] | None = None) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(list(rows), columns=columns).to_csv(
        path, index=False, na_rep="", lineterminator="\n"
    )


def _fraction_rows(fractions: Mapping[tuple[int, int], float]) -> list[tuple[int, int, float]]:
    return [(s, t, value) for (s, t), value in sorted(fractions.items())]


def run_report(ctx: StageContext, result: StageResult) -> None:
    config = ctx.settings.report
    result.inputs = _upstream_inputs(
        ctx,
        MESSAGES,
        SCORES,
        FOLLOWER_EDGES,
        ALIGNED_NODES,
        ALIGNED_MENTION_EDGES,
        ALIGNED_FOLLOWER_EDGES,
        CLUSTERS,
    )
    corpus = _read_corpus(ctx)
    scores = read_scores(ctx.path(SCORES))
    clusters = read_clusters(ctx.path(CLUSTERS))
    aligned_mention, aligned_follower = _read_aligned(ctx)
    follower = read_follower_edges(ctx.path(FOLLOWER_EDGES))

    link_columns = ["source", "target", "fraction"]
    _write_frame(
        _fraction_rows(cluster_link_fractions(aligned_mention.restrict(clusters), clusters)),
        result.add(ctx.path("report/mention_link_fractions.csv")),
        link_columns,
    )
    _write_frame(
        _fraction_rows(cluster_link_fractions(aligned_follower.restrict(clusters), clusters)),
        result.add(ctx.path("report/follower_link_fractions.csv")),
        link_columns,
    )
    _write_frame(
        _interaction_rows(
            corpus, scores, clusters, aligned_mention, follower, config.follower_direction
        ),
        result.add(ctx.path("report/interactions.csv")),
    )

    window = ctx.settings.window
    first = corpus.messages[0].timestamp if corpus.messages else 0
    last = corpus.messages[-1].timestamp + 1 if corpus.messages else 0
    boundaries = day_boundaries(
        window.start if window.start is not None else first,
        window.end if window.end is not None else max(last, first),
        config.day_seconds,
    )
    _write_frame(
        (
            (p.cluster, p.day, p.day_start, p.messages, p.tweets_per_user, p.mean_sentiment)
            for p in activity_timeseries(corpus, scores, clusters, boundaries)
        ),
        result.add(ctx.path("report/activity.csv")),
        ["cluster", "day", "day_start", "messages", "tweets_per_user", "mean_sentiment"],
    )
    _write_frame(
        activity_bins(corpus, config.bin_seconds),
        result.add(ctx.path("report/activity_bins.csv")),
        ["bin_start", "messages", "users"],
    )
    _write_frame(
        tweets_per_user_ccdf(corpus),
        result.add(ctx.path("report/tweets_per_user_ccdf.csv")),
        ["messages", "ccdf"],
    )

    sizes = Counter(clusters.values())
    summary: dict[str, Any] = {
        "clusters": {str(c): n for c, n in sorted(sizes.items())},
        "kinds": kind_breakdown(corpus),
    }
    if ctx.paths.annotations is not None:
        annotations_path = _require_input(
            ctx.paths.annotations, stage="report", name="inputs.annotations"
        )
        result.inputs["inputs.annotations"] = annotations_path
        annotations = read_annotations(annotations_path)
        outside = sorted(u for u in annotations if u not in clusters)
        if outside:
            logger.warning("report.annotations.unclustered", users=len(outside))
        evaluation = evaluate_alignment(
            {u: label for u, label in annotations.items() if u in clusters}, clusters
        )
        atomic_write_json(result.add(ctx.path("report/evaluation.json")), evaluation.to_dict())
        summary["overall_accuracy"] = evaluation.overall
        summary["balanced_accuracy"] = evaluation.balanced
    atomic_write_json(result.add(ctx.path("report/summary.json")), summary)
    result.summary = {
        "clusters": len(sizes),
        **{k: v for k, v in summary.items() if k.endswith("accuracy")},
    }


def run_synth(ctx: StageContext, result: StageResult) -> None:
    config_path = _require_input(ctx.paths.synth_config, stage="synth", name="synth.config")
    result.inputs = {"synth.config": config_path}
    lexicon = None
    if ctx.paths.synth_lexicon is not None:
        lexicon_path = _require_input(ctx.paths.synth_lexicon, stage="synth", name="synth.lexicon")
        result.inputs["synth.lexicon"] = lexicon_path
        lexicon = load_lexicon(lexicon_path)

    config = load_synth_config(config_path)
    generated = generate(config)
    for path in write_synth(generated, ctx.path("synth")).values():
        result.add(path)
    roundtrip = verify_roundtrip(config, lexicon=lexicon)
    sweep = template_sweep(lexicon=lexicon)
    report_path = result.add(ctx.path("synth/roundtrip.json"))
    atomic_write_json(report_path, {"corpus": roundtrip.to_dict(), "templates": sweep.to_dict()})
    result.summary = {
        "messages": len(generated.corpus),
        "users": len(generated.truth),
        "follower_edges": len(generated.followers.edges),
        "roundtrip": "ok" if roundtrip.ok and sweep.ok else "mismatch",
    }
    if not (roundtrip.ok and sweep.ok):
        raise ConsistencyError(
            f"Synthetic scores were not recovered for "
            f"{len(roundtrip.mismatches) + len(sweep.mismatches)} message(s); see {report_path}."
        )


STAGE_RUNNERS: dict[Stage, Callable[[StageContext, StageResult], None]] = {
    "ingest": run_ingest,
    "score": run_score,
    "graph": run_graph,
    "aggregate": run_aggregate,
    "nulltest": run_nulltest,
    "communities": run_communities,
    "intersect": run_intersect,
    "cluster": run_cluster,
    "report": run_report,
    "synth": run_synth,
}


def run_stage(stage: Stage, ctx: StageContext) -> StageResult:
    if stage not in STAGE_RUNNERS:
        raise InputError(f"Unknown stage {stage!r}; expected one of {', '.join(ALL_STAGES)}.")
    check_upstream(stage, ctx)
    result = StageResult(stage=stage)
    bind_run_context(stage=stage, seed=ctx.seed)
    try:
        log_pipeline(logger, "pipeline.stage.start", out=str(ctx.out))
        STAGE_RUNNERS[stage](ctx, result)
        result.manifest = write_manifest(result, ctx)
        logger.info("pipeline.stage.done", outputs=len(result.outputs), **result.summary)
    finally:
        clear_context()
    return result


def run_pipeline(ctx: StageContext) -> list[StageResult]:
    return [run_stage(stage, ctx) for stage in PIPELINE_STAGES]
