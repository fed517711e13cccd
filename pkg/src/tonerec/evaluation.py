"""Train/test splitting, MAE/RMSE, and the five-setup comparison experiment."""

from __future__ import annotations

import enum
import json
import math
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .corpus import Corpus, RatingEvent
from .errors import ConfigError
from .matrices import (
    FAVORITE_THRESHOLD,
    GENRE,
    TONE,
    build_basic_matrix,
    build_user_item,
    extend_matrix,
    filter_favorites,
    project_user_features,
)
from .recommender import predict_rating
from .similarity import DEFAULT_MEANS_SCOPE, DEFAULT_MIN_OVERLAP, MEANS_SCOPES, neighbors_for
from .vocab import TONES, vocabulary_hash

MIN_RATINGS_FOR_TEST = 5
SIMILARITY_SOURCES = ("favorites", "user_features")


class FeatureSetup(enum.Enum):
    """The five input-data setups; values are the short labels used in reports."""

    ThreeGenres = "3G"
    OneTone = "1TOV"
    TwoTones = "2TOV"
    GenresPlusOneTone = "3G+1TOV"
    GenresPlusTwoTones = "3G+2TOV"

    @classmethod
    def parse(cls, text: str) -> "FeatureSetup":
        for member in cls:
            if text in (member.name, member.value):
                return member
        raise ConfigError(f"unknown feature setup {text!r}; expected one of {[m.value for m in cls]}")

    @property
    def tone_k(self) -> int | None:
        return {"1TOV": 1, "2TOV": 2, "3G+1TOV": 1, "3G+2TOV": 2}.get(self.value)

    @property
    def columns(self) -> str:
        return {"3G": "genre", "1TOV": "tone", "2TOV": "tone"}.get(self.value, "both")


SETUP_ORDER = list(FeatureSetup)

# Published MAE / RMSE per setup, kept for side-by-side display only.
REFERENCE_ROWS = (
    (FeatureSetup.ThreeGenres, "3 Genres from IMDb (21 item)", 5.3011, 9.1198),
    (FeatureSetup.OneTone, "Tone of Voice (80 item)", 1.5476, 1.9896),
    (FeatureSetup.TwoTones, "Tone of Voice (126 item)", 1.9757, 2.9542),
    (FeatureSetup.GenresPlusOneTone, "3 Genres + 80 Tone of Voice", 3.1507, 6.1451),
    (FeatureSetup.GenresPlusTwoTones, "3 Genres + 126 Tone of Voice", 3.0513, 5.7193),
)
REFERENCE_LABEL = "reference — not reproduced"


@dataclass(frozen=True)
class ExperimentConfig:
    feature_setup: FeatureSetup
    similarity_source: str = "user_features"
    means_scope: str = DEFAULT_MEANS_SCOPE
    aggregation: str = "sum"
    n_neighbors: int = 20
    min_overlap: int = DEFAULT_MIN_OVERLAP
    test_fraction: float = 0.2
    split_seed: int = 0
    allow_negative: bool = False
    favorite_threshold: float = FAVORITE_THRESHOLD

    def __post_init__(self):
        if isinstance(self.feature_setup, str):
            object.__setattr__(self, "feature_setup", FeatureSetup.parse(self.feature_setup))
        if self.similarity_source not in SIMILARITY_SOURCES:
            raise ConfigError(f"similarity_source must be one of {SIMILARITY_SOURCES}")
        if self.means_scope not in MEANS_SCOPES:
            raise ConfigError(f"means_scope must be one of {MEANS_SCOPES}")
        if self.n_neighbors < 1 or self.min_overlap < 1:
            raise ConfigError("n_neighbors and min_overlap must be >= 1")
        if not 0.0 < self.test_fraction < 1.0:
            raise ConfigError(f"test_fraction must lie in (0, 1), got {self.test_fraction}")

    def echo(self) -> dict:
        d = asdict(self)
        d["feature_setup"] = self.feature_setup.value
        return d


@dataclass(frozen=True)
class ExperimentRow:
    setup: str
    label: str
    feature_count: int
    mae: float | None
    rmse: float | None
    coverage: float
    n_neighbors: int
    min_overlap: int
    seed: int
    n_test: int = 0
    n_predicted: int = 0

    JSON_FIELDS = ("setup", "label", "feature_count", "mae", "rmse", "coverage", "n_neighbors", "min_overlap", "seed")

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in self.JSON_FIELDS}


@dataclass
class ExperimentReport:
    rows: list[ExperimentRow]
    configs: list[ExperimentConfig]
    environment: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "rows": [r.to_json() for r in self.rows],
            "configs": [c.echo() for c in self.configs],
            "environment": dict(sorted(self.environment.items())),
            "reference": [
                {"label": s.value, "input_data": text, "mae": m, "rmse": r, "status": REFERENCE_LABEL}
                for s, text, m, r in REFERENCE_ROWS
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"

    def format_table(self) -> str:
        def num(x):
            return "undefined" if x is None else f"{x:.4f}"

        header = f"{'setup':<10} {'features':>8} {'MAE':>10} {'RMSE':>10} {'coverage':>9} {'test':>6}"
        lines = [header, "-" * len(header)]
        for r in self.rows:
            lines.append(
                f"{r.label:<10} {r.feature_count:>8} {num(r.mae):>10} {num(r.rmse):>10} "
                f"{r.coverage:>9.4f} {r.n_test:>6}"
            )
        if self.configs:
            c = self.configs[0]
            lines.append(
                f"source={c.similarity_source} means={c.means_scope} aggregation={c.aggregation} "
                f"N={c.n_neighbors} min_overlap={c.min_overlap} seed={c.split_seed} backend={self.environment.get('backend')}"
            )
        lines.append("")
        lines.append(f"Published values ({REFERENCE_LABEL}):")
        for s, text, m, r in REFERENCE_ROWS:
            lines.append(f"  {s.value:<10} {text:<30} MAE {m:.4f}  RMSE {r:.4f}  [{REFERENCE_LABEL}]")
        return "\n".join(lines) + "\n"


def split_ratings(
    ratings: Iterable[RatingEvent], test_fraction: float, seed: int
) -> tuple[list[RatingEvent], list[RatingEvent]]:
    """Per-user holdout: ceil(fraction * n) of each user's ratings go to test.

    Users with fewer than five ratings stay entirely in train. Each user's
    shuffle is seeded by ``(seed, user_id)``, so the split does not depend on
    input order.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    by_user: dict[int, list[RatingEvent]] = defaultdict(list)
    for r in ratings:
        by_user[r.user_id].append(r)
    train: list[RatingEvent] = []
    test: list[RatingEvent] = []
    for user in sorted(by_user):
        events = sorted(by_user[user], key=lambda r: r.movie_id)
        if len(events) < MIN_RATINGS_FOR_TEST:
            train.extend(events)
            continue
        n_test = math.ceil(test_fraction * len(events))
        order = np.random.default_rng([seed, user]).permutation(len(events))
        held = set(order[:n_test].tolist())
        for i, e in enumerate(events):
            (test if i in held else train).append(e)
    return train, test


def _errors(pairs) -> np.ndarray | None:
    arr = np.asarray(list(pairs), dtype=np.float64)
    if arr.size == 0:
        return None
    return arr[:, 0] - arr[:, 1]


def mae(pairs: Iterable[tuple[float, float]]) -> float | None:
    """Mean absolute error of ``(predicted, actual)`` pairs; ``None`` when empty."""
    err = _errors(pairs)
    return None if err is None else float(np.mean(np.abs(err)))


def rmse(pairs: Iterable[tuple[float, float]]) -> float | None:
    err = _errors(pairs)
    return None if err is None else float(np.sqrt(np.mean(err * err)))


def _predict_user(user, events, source, ui, cfg: ExperimentConfig):
    if user not in ui:
        return [None] * len(events)
    nbrs = neighbors_for(
        source, user, cfg.n_neighbors, cfg.min_overlap, cfg.means_scope, cfg.allow_negative
    )
    out = []
    for e in events:
        p = predict_rating(user, e.movie_id, nbrs, ui)
        out.append(None if p is None else p.value)
    return out


def run_experiment(
    corpus: Corpus,
    configs: Sequence[ExperimentConfig],
    threads: int = 1,
    environment: dict | None = None,
) -> ExperimentReport:
    """Evaluate each configuration on a seeded per-user holdout.

    Neighbors come from training data only. Rows are returned in the fixed
    setup order 3G, 1TOV, 2TOV, 3G+1TOV, 3G+2TOV regardless of input order.
    """
    for cfg in configs:
        k = cfg.feature_setup.tone_k
        if k is not None and k not in corpus.tone_runs:
            raise ConfigError(
                f"setup {cfg.feature_setup.value} needs tones with k={k}, but the corpus has not been tagged with k={k}"
            )
    ordered = sorted(configs, key=lambda c: SETUP_ORDER.index(c.feature_setup))
    basic = build_basic_matrix(corpus)
    extended = {k: extend_matrix(basic, run, TONES) for k, run in corpus.tone_runs.items()}
    splits: dict = {}
    rows = []
    for cfg in ordered:
        key = (cfg.test_fraction, cfg.split_seed, cfg.favorite_threshold)
        if key not in splits:
            train, test = split_ratings(corpus.ratings, cfg.test_fraction, cfg.split_seed)
            ui = build_user_item(train)
            splits[key] = (test, ui, filter_favorites(ui, cfg.favorite_threshold))
        test, ui, fav = splits[key]

        setup = cfg.feature_setup
        features = basic if setup.tone_k is None else extended[setup.tone_k]
        kinds = {"genre": (GENRE,), "tone": (TONE,), "both": (GENRE, TONE)}[setup.columns]
        feature_count = features.active_columns(features.feature_space.positions(kinds))
        if cfg.similarity_source == "favorites":
            source = fav
        else:
            source = project_user_features(fav, features, setup.columns, cfg.aggregation)

        by_user: dict[int, list[RatingEvent]] = defaultdict(list)
        for e in test:
            by_user[e.user_id].append(e)
        users = sorted(by_user)
        work = lambda u: _predict_user(u, by_user[u], source, ui, cfg)  # noqa: E731
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                predictions = list(pool.map(work, users))
        else:
            predictions = [work(u) for u in users]

        pairs = [
            (p, e.rating)
            for u, preds in zip(users, predictions)
            for p, e in zip(preds, by_user[u])
            if p is not None
        ]
        rows.append(
            ExperimentRow(
                setup=setup.name,
                label=setup.value,
                feature_count=feature_count,
                mae=mae(pairs),
                rmse=rmse(pairs),
                coverage=len(pairs) / len(test) if test else 0.0,
                n_neighbors=cfg.n_neighbors,
                min_overlap=cfg.min_overlap,
                seed=cfg.split_seed,
                n_test=len(test),
                n_predicted=len(pairs),
            )
        )
    env = {"backend": _kernels.BACKEND, "tone_vocabulary_hash": vocabulary_hash(TONES)}
    env.update(environment or {})
    return ExperimentReport(rows, list(ordered), env)
