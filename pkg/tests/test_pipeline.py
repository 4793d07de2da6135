from __future__ import annotations

import json
from pathlib import Path

import pandas as pd
import pytest
from typer.testing import CliRunner

from alignet import __version__
from alignet.aggregate import read_user_aggregates
from alignet.cli import EXIT_MISSING_ARTIFACT, EXIT_VALIDATION, create_app
from alignet.cli.run import build_context
from alignet.clustering import read_clusters
from alignet.config import write_config
from alignet.errors import MissingArtifactError
from alignet.graphs import read_nodes
from alignet.pipeline import (
    ALIGNED_MENTION_EDGES,
    ALIGNED_NODES,
    ALL_STAGES,
    CLUSTERS,
    MENTION_EDGES,
    PIPELINE_STAGES,
    USER_AGGREGATES,
    required_artifacts,
    run_pipeline,
    run_stage,
    upstream_stages,
)
from alignet.report import evaluate_alignment
from alignet.synth import generate, parse_synth_config, write_synth

SYNTH = {
    "groups": [30, 30],
    "labels": ["yes", "no"],
    "mention_rate": [[0.5, 0.03], [0.03, 0.5]],
    "follow_prob": [[0.5, 0.02], [0.02, 0.5]],
    "sentiment_mean": [[3, -1], [-1, -3]],
    "sentiment_noise": 1.0,
    "days": 2,
    "seed": 5,
}


def _project_config(**sections) -> dict:
    config = {
        "seed": 1,
        "output_dir": "out",
        "inputs": {
            "corpus": "data/messages.jsonl",
            "followers": "data/followers.csv",
            "annotations": "data/annotations.csv",
        },
        "nulltest": {"iterations": 40, "schemes": ["sign", "median_split"]},
        "communities": {"times": [1.0, 2.0], "restarts": 3, "min_size": 5},
        "clustering": {"k_min": 1, "k_max": 4, "restarts": 3},
    }
    for name, values in sections.items():
        config[name] = {**config.get(name, {}), **values}
    return config


@pytest.fixture
def project(tmp_path) -> Path:
    """A config file next to a small two-group synthetic corpus and its annotations."""
    result = generate(parse_synth_config(SYNTH))
    write_synth(result, tmp_path / "data")
    pd.DataFrame(sorted(result.truth.items()), columns=["user", "label"]).to_csv(
        tmp_path / "data" / "annotations.csv", index=False, lineterminator="\n"
    )
    cfg_path = tmp_path / "alignet.toml"
    write_config(_project_config(), cfg_path)
    return cfg_path


def _tree(root: Path) -> dict[str, bytes]:
    return {
        path.relative_to(root).as_posix(): path.read_bytes()
        for path in sorted(root.rglob("*"))
        if path.is_file()
    }


def test_upstream_closure() -> None:
    assert upstream_stages("cluster") == [
        "ingest",
        "score",
        "graph",
        "aggregate",
        "communities",
        "intersect",
    ]
    assert upstream_stages("ingest") == []
    assert upstream_stages("synth") == []
    assert MENTION_EDGES in required_artifacts("cluster")
    assert set(PIPELINE_STAGES) < set(ALL_STAGES)


def test_pipeline_writes_every_stage(project) -> None:
    ctx = build_context(project, None, None, None)
    results = run_pipeline(ctx)
    assert [r.stage for r in results] == list(PIPELINE_STAGES)
    out = project.parent / "out"
    for stage in PIPELINE_STAGES:
        manifest = json.loads((out / "manifest" / f"{stage}.json").read_text())
        assert manifest["stage"] == stage
        assert manifest["version"] == __version__
        assert manifest["seed"] == 1
        assert all(len(digest) == 64 for digest in manifest["outputs"].values())

    clusters = read_clusters(out / CLUSTERS)
    assert set(clusters.values()) == set(range(len(set(clusters.values()))))
    evaluation = json.loads((out / "report" / "evaluation.json").read_text())
    assert evaluation["overall_accuracy"] >= 0.9
    labels = json.loads((out / "nulltest" / "labels.json").read_text())
    assert set(labels) == {"sign", "median_split"}
    assert "verdict" in json.loads((out / "nulltest" / "correlation.json").read_text())


def test_aggregates_can_use_the_aligned_networks(project) -> None:
    write_config(_project_config(aggregate={"graph": "aligned"}), project)
    ctx = build_context(project, None, None, None)
    for stage in (*upstream_stages("nulltest"), "nulltest"):
        run_stage(stage, ctx)

    aligned = read_nodes(ctx.path(ALIGNED_NODES))
    aggregates, _ = read_user_aggregates(ctx.path(USER_AGGREGATES))
    assert aggregates
    assert set(aggregates) <= aligned
    for stage in ("aggregate", "nulltest"):
        manifest = json.loads(ctx.path(f"manifest/{stage}.json").read_text())
        assert ALIGNED_MENTION_EDGES in manifest["inputs"]
        assert MENTION_EDGES not in manifest["inputs"]


def test_stage_refuses_to_run_without_upstream(project) -> None:
    ctx = build_context(project, None, None, None)
    with pytest.raises(MissingArtifactError) as excinfo:
        run_stage("graph", ctx)
    assert excinfo.value.path.name == "messages.jsonl"


@pytest.mark.slow
def test_outputs_do_not_depend_on_thread_count(project) -> None:
    single = build_context(project, None, 1, project.parent / "single")
    threaded = build_context(project, None, 3, project.parent / "threaded")
    run_pipeline(single)
    run_pipeline(threaded)
    assert _tree(project.parent / "single") == _tree(project.parent / "threaded")


def test_seed_override_changes_manifest(project) -> None:
    ctx = build_context(project, 42, None, project.parent / "seeded")
    run_stage("ingest", ctx)
    manifest = json.loads((project.parent / "seeded" / "manifest" / "ingest.json").read_text())
    assert manifest["seed"] == 42


def test_synth_stage(tmp_path) -> None:
    (tmp_path / "synth.json").write_text(json.dumps(SYNTH))
    cfg_path = tmp_path / "alignet.toml"
    write_config({"synth": {"config": "synth.json"}}, cfg_path)
    result = run_stage("synth", build_context(cfg_path, None, None, None))
    assert result.summary["roundtrip"] == "ok"
    report = json.loads((tmp_path / "out" / "synth" / "roundtrip.json").read_text())
    assert report["templates"]["checked"] == 75
    assert (tmp_path / "out" / "synth" / "messages.jsonl").is_file()


def test_cli_version() -> None:
    result = CliRunner().invoke(create_app(), ["--version"])
    assert result.exit_code == 0
    assert result.output.strip() == f"alignet {__version__}"


def test_cli_pipeline_then_missing_artifact(project) -> None:
    runner = CliRunner()
    app = create_app()
    result = runner.invoke(app, ["pipeline", "--config", str(project)])
    assert result.exit_code == 0, result.output

    (project.parent / "out" / MENTION_EDGES).unlink()
    result = runner.invoke(app, ["cluster", "--config", str(project)])
    assert result.exit_code == EXIT_MISSING_ARTIFACT
    assert "mention_edges.csv" in result.output

    result = runner.invoke(app, ["sample", "--config", str(project), "--fraction", "0.5"])
    assert result.exit_code == 0, result.output
    sample = pd.read_csv(project.parent / "out" / "report" / "annotation_sample.csv")
    assert list(sample.columns) == ["user", "cluster", "label"]
    assert len(sample) > 0


def test_cli_invalid_config_exits_with_validation_code(tmp_path) -> None:
    cfg_path = tmp_path / "alignet.toml"
    write_config({"clustering": {"k_min": 5, "k_max": 2}}, cfg_path)
    result = CliRunner().invoke(create_app(), ["ingest", "--config", str(cfg_path)])
    assert result.exit_code == EXIT_VALIDATION
    assert "error:" in result.output


def test_cli_negative_seed_exits_with_validation_code(project) -> None:
    args = ["nulltest", "--config", str(project), "--seed", "-1"]
    result = CliRunner().invoke(create_app(), args)
    assert result.exit_code == EXIT_VALIDATION
    assert "greater than or equal to 0" in result.output


def test_cli_missing_input_file(tmp_path) -> None:
    cfg_path = tmp_path / "alignet.toml"
    write_config({"inputs": {"corpus": "nowhere.jsonl"}}, cfg_path)
    result = CliRunner().invoke(create_app(), ["ingest", "--config", str(cfg_path)])
    assert result.exit_code == EXIT_MISSING_ARTIFACT
    assert "nowhere.jsonl" in result.output


def test_cli_init(tmp_path) -> None:
    runner = CliRunner()
    app = create_app()
    result = runner.invoke(app, ["init", str(tmp_path)])
    assert result.exit_code == 0
    assert (tmp_path / "alignet.toml").is_file()

    again = runner.invoke(app, ["init", str(tmp_path)])
    assert again.exit_code == 1
    assert "already exists" in again.output

    forced = runner.invoke(app, ["init", str(tmp_path), "--force"])
    assert forced.exit_code == 0
    build_context(tmp_path / "alignet.toml", None, None, None)


PLANTED = {
    "groups": [100, 60, 40],
    "labels": ["a", "b", "c"],
    "mention_rate": [[0.69, 0.05, 0.36], [0.05, 0.69, 0.05], [0.36, 0.05, 0.105]],
    "follow_prob": [[0.5, 0.05, 0.05], [0.05, 0.5, 0.05], [0.05, 0.05, 0.5]],
    "sentiment_mean": [[3, 0, 3], [0, -2, 0], [-3, 0, 0]],
    "sentiment_noise": 0.0,
    "days": 2,
}


def _planted_run(tmp_path: Path, seed: int) -> tuple[int, float]:
    result = generate(parse_synth_config({**PLANTED, "seed": seed}))
    write_synth(result, tmp_path / "data")
    cfg_path = tmp_path / "alignet.toml"
    config = _project_config(
        communities={"times": [1.0], "restarts": 5, "min_size": 21},
        clustering={"k_min": 1, "k_max": 8, "restarts": 10},
    )
    del config["inputs"]["annotations"]
    write_config(config, cfg_path)
    ctx = build_context(cfg_path, None, None, None)
    for stage in (*upstream_stages("cluster"), "cluster"):
        run_stage(stage, ctx)

    clusters = read_clusters(ctx.path(CLUSTERS))
    evaluation = evaluate_alignment(
        {u: label for u, label in result.truth.items() if u in clusters},
        clusters,
        classes=("a", "b", "c"),
        ignore=(),
    )
    return len(set(clusters.values())), evaluation.balanced


@pytest.mark.slow
def test_planted_groups_are_recovered(tmp_path) -> None:
    runs = [_planted_run(tmp_path / f"seed{seed}", seed) for seed in range(10)]
    good = [k == 3 and balanced >= 0.9 for k, balanced in runs]
    assert sum(good) >= 9, runs
