from __future__ import annotations

from pathlib import Path

import pytest

from alignet.config import ConfigError, default_config, read_config, write_config
from alignet.settings import load_settings, resolve_paths, validate_settings_data


def _write(tmp_path: Path, body: str) -> Path:
    path = tmp_path / "alignet.toml"
    path.write_text(body, encoding="utf-8")
    return path


def test_defaults_fill_missing_sections(tmp_path) -> None:
    settings, cfg_path = load_settings(_write(tmp_path, "seed = 7\n"))
    assert cfg_path == tmp_path / "alignet.toml"
    assert settings.seed == 7
    assert settings.nulltest.iterations == 1000
    assert settings.nulltest.band == (0.025, 0.975)
    assert settings.communities.min_size == 21
    assert settings.aggregate.graph == "full"


def test_overrides_take_precedence(tmp_path, monkeypatch) -> None:
    path = _write(tmp_path, "seed = 7\nthreads = 2\n[nulltest]\niterations = 50\n")
    monkeypatch.setenv("ALIGNET__NULLTEST__ITERATIONS", "20")
    monkeypatch.setenv("ALIGNET__SEED", "8")
    settings, _ = load_settings(path, seed=9, threads=None)
    assert settings.seed == 9
    assert settings.threads == 2
    assert settings.nulltest.iterations == 20


@pytest.mark.parametrize(
    "body",
    [
        "[clustering]\nk_min = 5\nk_max = 2\n",
        "[nulltest]\nband = [0.9, 0.1]\n",
        "[communities]\ntimes = []\n",
        "[window]\nstart = 10\nend = 5\n",
        "surprise = 1\n",
        "[aggregate]\ngraph = 'sideways'\n",
        "threads = 0\n",
        "seed = -1\n",
        "seed = [unclosed\n",
    ],
)
def test_invalid_configs_raise_config_error(tmp_path, body) -> None:
    with pytest.raises(ConfigError):
        load_settings(_write(tmp_path, body))


def test_negative_seed_is_rejected_from_every_source(tmp_path, monkeypatch) -> None:
    path = _write(tmp_path, "seed = 3\n")
    with pytest.raises(ConfigError, match="greater than or equal to 0"):
        load_settings(path, seed=-1)
    monkeypatch.setenv("ALIGNET__SEED", "-2")
    with pytest.raises(ConfigError, match="greater than or equal to 0"):
        load_settings(path)


def test_missing_config_file(tmp_path) -> None:
    with pytest.raises(ConfigError, match="Missing config"):
        load_settings(tmp_path / "absent.toml")
    with pytest.raises(ConfigError, match="not a file"):
        load_settings(tmp_path)


def test_nulltest_schemes_are_deduplicated(tmp_path) -> None:
    body = "[nulltest]\nschemes = ['sign', 'quartiles', 'sign']\n"
    settings, _ = load_settings(_write(tmp_path, body))
    assert settings.nulltest.schemes == ["sign", "quartiles"]


def test_paths_resolve_against_config_dir(tmp_path) -> None:
    body = "output_dir = 'results'\n[inputs]\ncorpus = 'raw/m.jsonl'\nfollowers = '/abs/f.csv'\n"
    settings, cfg_path = load_settings(_write(tmp_path, body))
    paths = resolve_paths(settings, base_dir=cfg_path.parent)
    assert paths.corpus == tmp_path / "raw" / "m.jsonl"
    assert paths.followers == Path("/abs/f.csv")
    assert paths.output_dir == tmp_path / "results"
    assert paths.lexicon is None
    override = resolve_paths(settings, base_dir=cfg_path.parent, output_dir=tmp_path / "o")
    assert override.output_dir == tmp_path / "o"


def test_default_config_is_valid_and_reloads(tmp_path) -> None:
    config = default_config()
    validate_settings_data(config, config_path=tmp_path / "alignet.toml")
    path = tmp_path / "nested" / "alignet.toml"
    write_config(config, path)
    assert read_config(path) == config
    settings, _ = load_settings(path)
    assert settings.communities.times == [0.5, 1.0, 2.0]


def test_read_config_reports_malformed_toml(tmp_path) -> None:
    with pytest.raises(ConfigError, match="Malformed TOML"):
        read_config(_write(tmp_path, "= nope"))
