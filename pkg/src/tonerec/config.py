"""Pipeline configuration: a TOML file with fixed sections and explicit defaults."""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

from .errors import ConfigError, InputError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

ALL_SETUPS = ["3G", "1TOV", "2TOV", "3G+1TOV", "3G+2TOV"]


def _fixture_path(name: str) -> str:
    return str(resources.files("tonerec.data.fixture").joinpath(name))


@dataclass
class PathsConfig:
    movies: str = field(default_factory=lambda: _fixture_path("movies.csv"))
    ratings: str = field(default_factory=lambda: _fixture_path("ratings.csv"))
    cache: str = ""  # empty: <output_dir>/tag_cache.json
    output_dir: str = "tonerec-out"


@dataclass
class TaggingConfig:
    mode: str = "fixture"  # fixture | live
    endpoint: str = "https://api.openai.com/v1/chat/completions"
    model: str = "gpt-4o-mini"
    k: list[int] = field(default_factory=lambda: [1, 2])
    vocabulary_mode: str = "closed"
    vocabulary: str = ""  # empty: bundled 126-label vocabulary
    seed: int = 0


@dataclass
class MatricesConfig:
    aggregation: str = "sum"
    favorite_threshold: float = 3.0


@dataclass
class SimilarityConfig:
    source: str = "user_features"
    means_scope: str = "all-rated"
    min_overlap: int = 2
    n_neighbors: int = 20
    allow_negative: bool = False


@dataclass
class EvaluationConfig:
    test_fraction: float = 0.2
    split_seed: int = 0
    configs: list[str] = field(default_factory=lambda: list(ALL_SETUPS))


@dataclass
class PipelineConfig:
    paths: PathsConfig = field(default_factory=PathsConfig)
    tagging: TaggingConfig = field(default_factory=TaggingConfig)
    matrices: MatricesConfig = field(default_factory=MatricesConfig)
    similarity: SimilarityConfig = field(default_factory=SimilarityConfig)
    evaluation: EvaluationConfig = field(default_factory=EvaluationConfig)

    def validate(self) -> "PipelineConfig":
        t = self.tagging
        if t.mode not in ("fixture", "live"):
            raise ConfigError(f"tagging.mode must be 'fixture' or 'live', got {t.mode!r}")
        if not t.k or any(k not in (1, 2) for k in t.k):
            raise ConfigError(f"tagging.k entries must be 1 or 2, got {t.k}")
        if t.vocabulary_mode not in ("closed", "open"):
            raise ConfigError(f"tagging.vocabulary_mode must be 'closed' or 'open', got {t.vocabulary_mode!r}")
        if self.matrices.aggregation not in ("sum", "mean", "count"):
            raise ConfigError(f"matrices.aggregation must be sum, mean or count, got {self.matrices.aggregation!r}")
        s = self.similarity
        if s.source not in ("favorites", "user_features"):
            raise ConfigError(f"similarity.source must be 'favorites' or 'user_features', got {s.source!r}")
        if s.means_scope not in ("all-rated", "co-rated"):
            raise ConfigError(f"similarity.means_scope must be 'all-rated' or 'co-rated', got {s.means_scope!r}")
        if s.n_neighbors < 1 or s.min_overlap < 1:
            raise ConfigError("similarity.n_neighbors and similarity.min_overlap must be >= 1")
        e = self.evaluation
        if not 0 < e.test_fraction < 1:
            raise ConfigError(f"evaluation.test_fraction must lie in (0, 1), got {e.test_fraction}")
        for c in e.configs:
            if c not in ALL_SETUPS:
                raise ConfigError(f"evaluation.configs: unknown setup {c!r}; expected {ALL_SETUPS}")
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _section(cls, data: dict, name: str, base: Path | None, path_keys=()):
    if not isinstance(data, dict):
        raise ConfigError(f"[{name}] must be a table")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"[{name}]: unknown key(s) {', '.join(unknown)}")
    obj = cls()
    for key, value in data.items():
        default = getattr(obj, key)
        if isinstance(default, bool) != isinstance(value, bool) or (
            isinstance(default, (int, float)) and not isinstance(value, (int, float))
        ) or (isinstance(default, int) and not isinstance(default, bool) and isinstance(value, float)) or (
            isinstance(default, (str, list)) and not isinstance(value, type(default))
        ):
            raise ConfigError(f"[{name}].{key}: expected {type(default).__name__}, got {type(value).__name__}")
        if isinstance(default, float):
            value = float(value)
        if key in path_keys and value and base is not None and not Path(value).is_absolute():
            value = str(base / value)
        setattr(obj, key, value)
    return obj


_SECTIONS = {
    "paths": (PathsConfig, ("movies", "ratings", "cache", "output_dir")),
    "tagging": (TaggingConfig, ("vocabulary",)),
    "matrices": (MatricesConfig, ()),
    "similarity": (SimilarityConfig, ()),
    "evaluation": (EvaluationConfig, ()),
}


def config_from_dict(data: dict, base: Path | None = None) -> PipelineConfig:
    unknown = sorted(set(data) - set(_SECTIONS))
    if unknown:
        raise ConfigError(f"unknown config section(s): {', '.join(unknown)}")
    parts = {
        name: _section(cls, data.get(name, {}), name, base, path_keys)
        for name, (cls, path_keys) in _SECTIONS.items()
    }
    return PipelineConfig(**parts).validate()


def load_config(path: str | Path | None) -> PipelineConfig:
    """Read a TOML config; relative paths inside it resolve against its directory."""
    if path is None:
        return PipelineConfig().validate()
    path = Path(path)
    if not path.is_file():
        raise InputError(f"config file not found: {path}")
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return config_from_dict(data, base=path.parent.resolve())
