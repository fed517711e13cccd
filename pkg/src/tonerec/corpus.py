"""Loading and joining the movie-metadata and ratings files."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

from .diagnostics import warn
from .errors import InputError
from .vocab import GENRES, label_key

MOVIE_COLUMNS = ("movie_id", "title", "genres", "description")
RATING_COLUMNS = ("user_id", "movie_id", "rating")
# MovieLens exports use camelCase headers
_MOVIELENS_ALIASES = {"userId": "user_id", "movieId": "movie_id"}

MIN_RATING = 1.0
MAX_RATING = 5.0
MAX_GENRES = 3
MAX_TONES = 2


class CorpusError(InputError):
    pass


@dataclass(frozen=True)
class MovieRecord:
    movie_id: int
    title: str
    description: str
    genres: tuple[str, ...]
    tones: tuple[str, ...] = ()

    def __post_init__(self):
        if self.movie_id <= 0:
            raise CorpusError(f"movie_id must be positive, got {self.movie_id}")
        if not self.title:
            raise CorpusError(f"movie {self.movie_id}: empty title")
        if not 1 <= len(self.genres) <= MAX_GENRES:
            raise CorpusError(
                f"movie {self.movie_id}: {len(self.genres)} genres, expected 1 to {MAX_GENRES}"
            )
        if len(self.tones) > MAX_TONES:
            raise CorpusError(f"movie {self.movie_id}: more than {MAX_TONES} tones")


@dataclass(frozen=True)
class RatingEvent:
    user_id: int
    movie_id: int
    rating: float
    timestamp: int | None = None

    def __post_init__(self):
        if not MIN_RATING <= self.rating <= MAX_RATING:
            raise CorpusError(
                f"rating {self.rating} for (user {self.user_id}, movie {self.movie_id}) "
                f"outside [{MIN_RATING}, {MAX_RATING}]"
            )


@dataclass(frozen=True)
class CorpusStats:
    movies: int
    users: int
    ratings: int
    genre_assignments: int


@dataclass(frozen=True)
class Corpus:
    """Joined, immutable movie catalog plus ratings.

    ``tone_runs`` maps a tagging depth k (1 or 2) to ``{movie_id: tones}``;
    each movie's ``tones`` field mirrors the most recent run.
    """

    movies: Mapping[int, MovieRecord]
    ratings: tuple[RatingEvent, ...]
    tone_runs: Mapping[int, Mapping[int, tuple[str, ...]]] = field(
        default_factory=lambda: MappingProxyType({})
    )

    @property
    def stats(self) -> CorpusStats:
        return corpus_stats(self)

    def with_tones(self, k: int, assignments: Mapping[int, Sequence[str]]) -> "Corpus":
        run = {mid: tuple(assignments.get(mid, ())) for mid in sorted(self.movies)}
        movies = {mid: replace(m, tones=run[mid]) for mid, m in self.movies.items()}
        runs = dict(self.tone_runs)
        runs[k] = MappingProxyType(run)
        return Corpus(
            movies=MappingProxyType(dict(sorted(movies.items()))),
            ratings=self.ratings,
            tone_runs=MappingProxyType(dict(sorted(runs.items()))),
        )


def _genre_lookup(genre_vocab: Iterable[str]) -> dict[str, str]:
    return {label_key(g): g for g in genre_vocab}


def _parse_int(value: str, what: str, where: str) -> int:
    try:
        return int(value)
    except (TypeError, ValueError):
        raise CorpusError(f"{where}: non-numeric {what} {value!r}") from None


def load_movies(path: str | Path, genre_vocab: Iterable[str] = GENRES) -> dict[int, MovieRecord]:
    """Read the movie-metadata CSV into a catalog keyed by movie id.

    Genres are ``|``-separated and matched against ``genre_vocab``
    case-insensitively, with spaces and hyphens interchangeable
    (so the MovieLens spelling ``Film-Noir`` resolves to ``Film Noir``).
    """
    path = Path(path)
    if not path.is_file():
        raise CorpusError(f"movies file not found: {path}")
    lookup = _genre_lookup(genre_vocab)
    catalog: dict[int, MovieRecord] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != MOVIE_COLUMNS:
            raise CorpusError(f"{path}: header must be {','.join(MOVIE_COLUMNS)}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            where = f"{path.name}:{lineno}"
            if len(row) != len(MOVIE_COLUMNS):
                raise CorpusError(f"{where}: expected {len(MOVIE_COLUMNS)} fields, got {len(row)}")
            raw_id, title, raw_genres, description = row
            movie_id = _parse_int(raw_id, "movie_id", where)
            if movie_id in catalog:
                raise CorpusError(f"{where}: duplicate movie_id {movie_id}")
            title = title.strip()
            if not title:
                raise CorpusError(f"{where}: missing title for movie {movie_id}")
            genres = []
            for raw in raw_genres.split("|"):
                if not raw.strip():
                    continue
                canonical = lookup.get(label_key(raw))
                if canonical is None:
                    raise CorpusError(f"{where}: unknown genre label {raw.strip()!r}")
                if canonical not in genres:
                    genres.append(canonical)
            if not 1 <= len(genres) <= MAX_GENRES:
                raise CorpusError(
                    f"{where}: movie {movie_id} has {len(genres)} genres; "
                    f"each movie must have 1 to {MAX_GENRES}"
                )
            catalog[movie_id] = MovieRecord(movie_id, title, description.strip(), tuple(genres))
    return catalog


def load_ratings(path: str | Path, *, return_duplicates: bool = False):
    """Parse a MovieLens-style ratings CSV.

    Repeated (user, movie) pairs keep the last occurrence; the number of
    overwritten rows is reported as a ``duplicate_ratings`` warning.
    """
    path = Path(path)
    if not path.is_file():
        raise CorpusError(f"ratings file not found: {path}")
    events: dict[tuple[int, int], RatingEvent] = {}
    duplicates = 0
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        cols = [_MOVIELENS_ALIASES.get(h.strip(), h.strip()) for h in header or ()]
        if tuple(cols[:3]) != RATING_COLUMNS or len(cols) > 4 or (len(cols) == 4 and cols[3] != "timestamp"):
            raise CorpusError(f"{path}: header must be user_id,movie_id,rating[,timestamp], got {header}")
        has_ts = len(cols) == 4
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            where = f"{path.name}:{lineno}"
            if len(row) != len(cols):
                raise CorpusError(f"{where}: expected {len(cols)} fields, got {len(row)}")
            user_id = _parse_int(row[0], "user_id", where)
            movie_id = _parse_int(row[1], "movie_id", where)
            try:
                rating = float(row[2])
            except ValueError:
                raise CorpusError(f"{where}: non-numeric rating {row[2]!r}") from None
            if not MIN_RATING <= rating <= MAX_RATING:
                raise CorpusError(f"{where}: rating {rating} outside [{MIN_RATING}, {MAX_RATING}]")
            ts = _parse_int(row[3], "timestamp", where) if has_ts and row[3].strip() else None
            key = (user_id, movie_id)
            if key in events:
                duplicates += 1
                del events[key]  # last write wins, and takes the later position
            events[key] = RatingEvent(user_id, movie_id, rating, ts)
    if duplicates:
        warn("duplicate_ratings", f"file={path.name} count={duplicates}")
    ratings = list(events.values())
    return (ratings, duplicates) if return_duplicates else ratings


def join_corpus(catalog: Mapping[int, MovieRecord], ratings: Iterable[RatingEvent]) -> Corpus:
    """Keep movies present in the catalog with at least one rating, and their ratings."""
    kept = sorted((r for r in ratings if r.movie_id in catalog), key=lambda r: (r.user_id, r.movie_id))
    rated = {r.movie_id for r in kept}
    if not rated:
        raise CorpusError("catalog and ratings share no movie ids; nothing to recommend")
    movies = {mid: catalog[mid] for mid in sorted(rated)}
    return Corpus(MappingProxyType(movies), tuple(kept))


def corpus_stats(corpus: Corpus) -> CorpusStats:
    return CorpusStats(
        movies=len(corpus.movies),
        users=len({r.user_id for r in corpus.ratings}),
        ratings=len(corpus.ratings),
        genre_assignments=sum(len(m.genres) for m in corpus.movies.values()),
    )


def corpus_to_dict(corpus: Corpus) -> dict:
    return {
        "movies": [
            {
                "movie_id": m.movie_id,
                "title": m.title,
                "description": m.description,
                "genres": list(m.genres),
                "tones": list(m.tones),
            }
            for m in corpus.movies.values()
        ],
        "ratings": [[r.user_id, r.movie_id, r.rating, r.timestamp] for r in corpus.ratings],
        "tone_runs": {
            str(k): {str(mid): list(t) for mid, t in run.items()} for k, run in corpus.tone_runs.items()
        },
    }


def corpus_from_dict(data: dict) -> Corpus:
    movies = {
        m["movie_id"]: MovieRecord(
            m["movie_id"], m["title"], m["description"], tuple(m["genres"]), tuple(m["tones"])
        )
        for m in data["movies"]
    }
    ratings = tuple(RatingEvent(u, m, float(r), ts) for u, m, r, ts in data["ratings"])
    runs = {
        int(k): MappingProxyType({int(mid): tuple(t) for mid, t in run.items()})
        for k, run in data.get("tone_runs", {}).items()
    }
    return Corpus(MappingProxyType(movies), ratings, MappingProxyType(dict(sorted(runs.items()))))


def dump_corpus(corpus: Corpus) -> str:
    return json.dumps(corpus_to_dict(corpus), ensure_ascii=False, sort_keys=True, indent=1) + "\n"


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    Path(path).write_text(dump_corpus(corpus), encoding="utf-8")


def read_corpus(path: str | Path) -> Corpus:
    path = Path(path)
    if not path.is_file():
        raise InputError(f"corpus artifact not found: {path}")
    return corpus_from_dict(json.loads(path.read_text(encoding="utf-8")))
