from __future__ import annotations

from pathlib import Path
from typing import Annotated, Any, Literal

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    StringConstraints,
    ValidationError,
    field_validator,
    model_validator,
)
from pydantic_settings import BaseSettings, SettingsConfigDict
from pydantic_settings.sources import TomlConfigSettingsSource

from .aggregate import GroupScheme
from .config import DEFAULT_CONFIG_NAME, ConfigError, read_config, resolve_path

NonEmptyStr = Annotated[str, StringConstraints(strip_whitespace=True, min_length=1)]
Quantile = Annotated[float, Field(ge=0.0, le=1.0)]


class InputsSettings(BaseModel):
    model_config = ConfigDict(extra="forbid", str_strip_whitespace=True)

    corpus: NonEmptyStr = "data/messages.jsonl"
    followers: NonEmptyStr = "data/followers.csv"
    lexicon: NonEmptyStr | None = None
    annotations: NonEmptyStr | None = None
    prefer_entities: bool = True


class WindowSettings(BaseModel):
    model_config = ConfigDict(extra="forbid", str_strip_whitespace=True)

    start: int | None = None
    end: int | None = None
    hashtags: list[NonEmptyStr] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_order(self) -> WindowSettings:
        if self.start is not None and self.end is not None and self.start > self.end:
            raise ValueError(f"window.start ({self.start}) is after window.end ({self.end})")
        return self


class AggregateSettings(BaseModel):
    model_config = ConfigDict(extra="forbid", str_strip_whitespace=True)

    graph: Literal["full", "aligned"] = "full"
    polarity: Literal["s_out", "s_in"] = "s_out"
    neighbours: Literal["union", "out"] = "union"


class NullTestSettings(BaseModel):
    model_config = ConfigDict(extra="forbid", str_strip_whitespace=True)

    iterations: int = Field(default=1000, ge=1)
    band: tuple[Quantile, Quantile] = (0.025, 0.975)
    label_mode: Literal["resample", "permute"] = "resample"
    schemes: list[GroupScheme] = Field(default_factory=lambda: ["sign"])
    dump_samples: bool = False

    @field_validator("band")
    @classmethod
    def _validate_band(cls, value: tuple[float, float]) -> tuple[float, float]:
        if value[0] >= value[1]:
            raise ValueError("nulltest.band must be increasing")
        return value

    @field_validator("schemes")
    @classmethod
    def _validate_schemes(cls, value: list[str]) -> list[str]:
        if not value:
            raise ValueError("nulltest.schemes must not be empty")
        return list(dict.fromkeys(value))


class CommunitySettings(BaseModel):
    model_config = ConfigDict(extra="forbid", str_strip_whitespace=True)

    times: list[Annotated[float, Field(gt=0.0)]] = Field(default_factory=lambda: [1.0])
    restarts: int = Field(default=10, ge=1)
    min_size: int = Field(default=21, ge=1)

    @field_validator("times")
    @classmethod
    def _validate_times(cls, value: list[float]) -> list[float]:
        if not value:
            raise ValueError("communities.times must not be empty")
        return value


class ClusteringSettings(BaseModel):
    model_config = ConfigDict(extra="forbid", str_strip_whitespace=True)

    k_min: int = Field(default=1, ge=1)
    k_max: int = Field(default=8, ge=1)
    restarts: int = Field(default=10, ge=1)
    standardize: bool = False
    weighted: bool = False

    @model_validator(mode="after")
    def _check_range(self) -> ClusteringSettings:
        if self.k_min > self.k_max:
            raise ValueError(f"clustering.k_min ({self.k_min}) exceeds k_max ({self.k_max})")
        return self


class ReportSettings(BaseModel):
    model_config = ConfigDict(extra="forbid", str_strip_whitespace=True)

    day_seconds: int = Field(default=86400, gt=0)
    bin_seconds: int = Field(default=900, gt=0)
    follower_direction: Literal["either", "directed"] = "either"
    annotation_fraction: float = Field(default=0.2, gt=0.0, le=1.0)


class SynthSettings(BaseModel):
    model_config = ConfigDict(extra="forbid", str_strip_whitespace=True)

    config: NonEmptyStr | None = None
    lexicon: NonEmptyStr | None = None


class AlignetSettings(BaseSettings):
    model_config = SettingsConfigDict(
        extra="forbid",
        env_prefix="ALIGNET__",
        env_nested_delimiter="__",
        str_strip_whitespace=True,
    )

    seed: int = Field(default=0, ge=0)
    threads: int = Field(default=1, ge=1)
    output_dir: NonEmptyStr = "out"

    inputs: InputsSettings = Field(default_factory=InputsSettings)
    window: WindowSettings = Field(default_factory=WindowSettings)
    aggregate: AggregateSettings = Field(default_factory=AggregateSettings)
    nulltest: NullTestSettings = Field(default_factory=NullTestSettings)
    communities: CommunitySettings = Field(default_factory=CommunitySettings)
    clustering: ClusteringSettings = Field(default_factory=ClusteringSettings)
    report: ReportSettings = Field(default_factory=ReportSettings)
    synth: SynthSettings = Field(default_factory=SynthSettings)

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls,
        init_settings,
        env_settings,
        dotenv_settings,
        file_secret_settings,
    ):
        return (
            init_settings,
            env_settings,
            TomlConfigSettingsSource(settings_cls),
        )


class ResolvedPaths(BaseModel):
    """Input and output paths with relative entries resolved against the config dir."""

    model_config = ConfigDict(frozen=True)

    corpus: Path
    followers: Path
    lexicon: Path | None
    annotations: Path | None
    output_dir: Path
    synth_config: Path | None
    synth_lexicon: Path | None


def resolve_paths(
    settings: AlignetSettings, *, base_dir: Path, output_dir: Path | None = None
) -> ResolvedPaths:
    def optional(value: str | None) -> Path | None:
        return None if value is None else resolve_path(value, base_dir=base_dir)

    return ResolvedPaths(
        corpus=resolve_path(settings.inputs.corpus, base_dir=base_dir),
        followers=resolve_path(settings.inputs.followers, base_dir=base_dir),
        lexicon=optional(settings.inputs.lexicon),
        annotations=optional(settings.inputs.annotations),
        output_dir=output_dir or resolve_path(settings.output_dir, base_dir=base_dir),
        synth_config=optional(settings.synth.config),
        synth_lexicon=optional(settings.synth.lexicon),
    )


def validate_settings_data(data: dict[str, Any], *, config_path: Path) -> AlignetSettings:
    try:
        return AlignetSettings.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"Invalid config in {config_path}: {exc}") from None


def load_settings(
    path: str | Path | None = None, **overrides: Any
) -> tuple[AlignetSettings, Path]:
    cfg_path = Path(path).expanduser() if path else Path.cwd() / DEFAULT_CONFIG_NAME
    # missing, unreadable and malformed files fail here with a file-level message
    read_config(cfg_path)
    return _load_settings_from_path(cfg_path, overrides), cfg_path


def _load_settings_from_path(cfg_path: Path, overrides: dict[str, Any]) -> AlignetSettings:
    cfg = dict(AlignetSettings.model_config)
    cfg["toml_file"] = cfg_path
    Bound = type(
        "AlignetSettingsBound",
        (AlignetSettings,),
        {"model_config": SettingsConfigDict(**cfg)},
    )
    try:
        return Bound(**{k: v for k, v in overrides.items() if v is not None})
    except ValidationError as exc:
        raise ConfigError(f"Invalid config in {cfg_path}: {exc}") from None
