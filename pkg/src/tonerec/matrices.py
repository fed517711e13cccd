"""Movie-feature and user-indexed matrices.

Movie x feature matrices are small and stored dense (uint8). Everything indexed
by user is stored as CSR arrays with sorted column indices, which is the layout
the similarity kernels consume.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .corpus import Corpus, RatingEvent
from .errors import ConfigError, InputError
from .vocab import GENRES, TONES

GENRE = "genre"
TONE = "tone"
AGGREGATIONS = ("sum", "mean", "count")
COLUMN_SETS = {"genre": (GENRE,), "tone": (TONE,), "both": (GENRE, TONE)}
FAVORITE_THRESHOLD = 3.0


@dataclass(frozen=True)
class FeatureSpace:
    labels: tuple[str, ...]
    kinds: tuple[str, ...]

    def __post_init__(self):
        if len(self.labels) != len(self.kinds):
            raise ValueError("labels and kinds must have equal length")
        if len(set(self.keys)) != len(self.labels):
            raise ValueError("feature (kind, label) pairs must be unique")

    @property
    def keys(self) -> tuple[str, ...]:
        """Kind-qualified labels, e.g. ``genre:Horror`` vs ``tone:Horror``."""
        return tuple(f"{k}:{l}" for k, l in zip(self.kinds, self.labels))

    def __len__(self) -> int:
        return len(self.labels)

    def positions(self, kinds: Iterable[str]) -> list[int]:
        wanted = set(kinds)
        return [i for i, k in enumerate(self.kinds) if k in wanted]

    def subset(self, positions: Sequence[int]) -> "FeatureSpace":
        return FeatureSpace(tuple(self.labels[i] for i in positions), tuple(self.kinds[i] for i in positions))


class MovieFeatureMatrix:
    """Binary movie x feature matrix (the Basic or Extended movie-data matrix)."""

    def __init__(self, feature_space: FeatureSpace, movie_ids: Sequence[int], cells: np.ndarray):
        cells = np.asarray(cells, dtype=np.uint8)
        if cells.shape != (len(movie_ids), len(feature_space)):
            raise ValueError(f"cell shape {cells.shape} does not match {len(movie_ids)} x {len(feature_space)}")
        if cells.size and cells.max() > 1:
            raise ValueError("movie-feature cells must be 0 or 1")
        self.feature_space = feature_space
        self.movie_ids = tuple(int(m) for m in movie_ids)
        self.cells = cells
        self.cells.setflags(write=False)
        self._pos = {m: i for i, m in enumerate(self.movie_ids)}

    def __contains__(self, movie_id: int) -> bool:
        return movie_id in self._pos

    def row(self, movie_id: int) -> np.ndarray:
        return self.cells[self._pos[movie_id]]

    def features_of(self, movie_id: int) -> list[str]:
        return [self.feature_space.labels[i] for i in np.flatnonzero(self.row(movie_id))]

    def row_index(self, movie_id: int) -> int:
        return self._pos[movie_id]

    @property
    def n_ones(self) -> int:
        return int(self.cells.sum())

    def active_columns(self, positions: Sequence[int] | None = None) -> int:
        cols = self.cells if positions is None else self.cells[:, list(positions)]
        return int((cols.sum(axis=0) > 0).sum())

    def triples(self):
        for i, j in zip(*np.nonzero(self.cells)):
            yield self.movie_ids[i], int(j), 1


def _row_sums(values, indptr) -> np.ndarray:
    n_rows = len(indptr) - 1
    rows = np.repeat(np.arange(n_rows), np.diff(indptr))
    return np.bincount(rows, weights=np.asarray(values, dtype=np.float64), minlength=n_rows)


class SparseUserMatrix:
    """User-indexed sparse matrix in CSR form with per-user means of stored cells."""

    def __init__(self, user_ids, column_ids, indptr, indices, data):
        self.user_ids = np.asarray(user_ids, dtype=np.int64)
        self.column_ids = tuple(column_ids)
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int64)
        self.data = np.asarray(data, dtype=np.float64)
        for arr in (self.user_ids, self.indptr, self.indices, self.data):
            arr.setflags(write=False)
        counts = np.diff(self.indptr)
        sums = _row_sums(self.data, self.indptr)
        self.means = np.divide(sums, counts, out=np.zeros(len(counts)), where=counts > 0)
        self.means.setflags(write=False)
        self._user_pos = {int(u): i for i, u in enumerate(self.user_ids)}
        self._col_pos = {c: j for j, c in enumerate(self.column_ids)}
        self._dense = None

    @classmethod
    def from_cells(cls, cells: Mapping[int, Mapping[int, float]], column_ids: Sequence):
        """Build from ``{user_id: {column_position: value}}``; empty users are dropped."""
        users = sorted(u for u, row in cells.items() if row)
        indptr = [0]
        indices: list[int] = []
        data: list[float] = []
        for u in users:
            row = cells[u]
            for j in sorted(row):
                indices.append(j)
                data.append(row[j])
            indptr.append(len(indices))
        return cls(users, column_ids, indptr, indices, data)

    def __contains__(self, user_id: int) -> bool:
        return int(user_id) in self._user_pos

    def __len__(self) -> int:
        return len(self.user_ids)

    @property
    def n_cells(self) -> int:
        return len(self.data)

    def user_index(self, user_id: int) -> int:
        try:
            return self._user_pos[int(user_id)]
        except KeyError:
            raise KeyError(f"user {user_id} not in matrix") from None

    def column_index(self, column_id) -> int:
        return self._col_pos[column_id]

    def mean(self, user_id: int) -> float:
        return float(self.means[self.user_index(user_id)])

    def row(self, user_id: int) -> dict:
        """``{column_id: value}`` for one user."""
        i = self.user_index(user_id)
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return {self.column_ids[j]: float(v) for j, v in zip(self.indices[lo:hi], self.data[lo:hi])}

    def get(self, user_id: int, column_id, default=None):
        i = self._user_pos.get(int(user_id))
        j = self._col_pos.get(column_id)
        if i is None or j is None:
            return default
        lo, hi = self.indptr[i], self.indptr[i + 1]
        k = lo + np.searchsorted(self.indices[lo:hi], j)
        if k < hi and self.indices[k] == j:
            return float(self.data[k])
        return default

    def to_scipy(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.data, self.indices, self.indptr), shape=(len(self.user_ids), len(self.column_ids)))

    def dense(self) -> tuple[np.ndarray, np.ndarray]:
        """Dense values (0 where empty) and the stored-cell mask; cached."""
        if self._dense is None:
            values = self.to_scipy().toarray()
            mask = np.zeros(values.shape, dtype=bool)
            rows = np.repeat(np.arange(len(self.user_ids)), np.diff(self.indptr))
            mask[rows, self.indices] = True
            self._dense = (values, mask)
        return self._dense

    def triples(self):
        for i, u in enumerate(self.user_ids):
            for p in range(self.indptr[i], self.indptr[i + 1]):
                yield int(u), int(self.indices[p]), float(self.data[p])


class UserItemMatrix(SparseUserMatrix):
    """Sparse user x movie ratings; columns are movie ids in ascending order."""

    def rating(self, user_id: int, movie_id: int):
        return self.get(user_id, movie_id)


class UserFeatureMatrix(SparseUserMatrix):
    def __init__(self, feature_space: FeatureSpace, aggregation: str, user_ids, indptr, indices, data):
        super().__init__(user_ids, feature_space.keys, indptr, indices, data)
        self.feature_space = feature_space
        self.aggregation = aggregation


def build_basic_matrix(corpus: Corpus, genre_vocab: Sequence[str] = GENRES) -> MovieFeatureMatrix:
    space = FeatureSpace(tuple(genre_vocab), (GENRE,) * len(genre_vocab))
    col = {g: j for j, g in enumerate(genre_vocab)}
    movie_ids = sorted(corpus.movies)
    cells = np.zeros((len(movie_ids), len(space)), dtype=np.uint8)
    for i, mid in enumerate(movie_ids):
        for g in corpus.movies[mid].genres:
            cells[i, col[g]] = 1
    return MovieFeatureMatrix(space, movie_ids, cells)


def extend_matrix(
    basic: MovieFeatureMatrix,
    assignments: Mapping[int, Sequence[str]] | Iterable,
    tone_vocab: Sequence[str] = TONES,
) -> MovieFeatureMatrix:
    """Append one column per tone label (vocabulary order) and set assigned tones.

    ``assignments`` is ``{movie_id: tones}`` or an iterable of objects with
    ``movie_id`` and ``tones`` attributes. Labels outside ``tone_vocab``
    (open-vocabulary runs) are appended after it in sorted order.
    """
    if not isinstance(assignments, Mapping):
        assignments = {a.movie_id: a.tones for a in assignments}
    labels = list(tone_vocab)
    known = set(labels)
    extra = sorted({t for tones in assignments.values() for t in tones if t not in known})
    labels.extend(extra)
    genre_pos = basic.feature_space.positions([GENRE])
    space = FeatureSpace(
        tuple(basic.feature_space.labels[i] for i in genre_pos) + tuple(labels),
        (GENRE,) * len(genre_pos) + (TONE,) * len(labels),
    )
    col = {t: len(genre_pos) + j for j, t in enumerate(labels)}
    cells = np.zeros((len(basic.movie_ids), len(space)), dtype=np.uint8)
    cells[:, : len(genre_pos)] = basic.cells[:, genre_pos]
    for mid, tones in assignments.items():
        if mid not in basic:
            raise InputError(f"tone assignment for movie {mid}, which is not in the movie matrix")
        for t in tones:
            cells[basic.row_index(mid), col[t]] = 1
    return MovieFeatureMatrix(space, basic.movie_ids, cells)


def build_user_item(source: Corpus | Iterable[RatingEvent]) -> UserItemMatrix:
    ratings = source.ratings if isinstance(source, Corpus) else list(source)
    movie_ids = sorted({r.movie_id for r in ratings})
    col = {m: j for j, m in enumerate(movie_ids)}
    cells: dict[int, dict[int, float]] = {}
    for r in ratings:
        cells.setdefault(r.user_id, {})[col[r.movie_id]] = r.rating
    built = SparseUserMatrix.from_cells(cells, movie_ids)
    return UserItemMatrix(built.user_ids, movie_ids, built.indptr, built.indices, built.data)


def filter_favorites(matrix: UserItemMatrix, threshold: float = FAVORITE_THRESHOLD) -> UserItemMatrix:
    """Keep only ratings strictly above ``threshold``; users left empty are dropped."""
    keep = matrix.data > threshold
    counts = _row_sums(keep, matrix.indptr).astype(np.int64)
    alive = counts > 0
    indptr = np.concatenate([[0], np.cumsum(counts[alive])])
    return UserItemMatrix(matrix.user_ids[alive], matrix.column_ids, indptr, matrix.indices[keep], matrix.data[keep])


def project_user_features(
    favorites: UserItemMatrix,
    features: MovieFeatureMatrix,
    columns: str = "tone",
    aggregation: str = "sum",
) -> UserFeatureMatrix:
    """Aggregate each user's favorite ratings onto the features of the rated movies.

    ``columns`` picks the genre block, the tone block, or both; ``aggregation``
    is ``sum``, ``mean`` or ``count`` over the contributing ratings.
    """
    if aggregation not in AGGREGATIONS:
        raise ConfigError(f"aggregation must be one of {AGGREGATIONS}, got {aggregation!r}")
    if columns not in COLUMN_SETS:
        raise ConfigError(f"columns must be one of {tuple(COLUMN_SETS)}, got {columns!r}")
    positions = features.feature_space.positions(COLUMN_SETS[columns])
    space = features.feature_space.subset(positions)
    rows = []
    for mid in favorites.column_ids:
        if mid not in features:
            raise InputError(f"movie {mid} has favorite ratings but no row in the feature matrix")
        rows.append(features.row_index(mid))
    incidence = sp.csr_matrix(features.cells[np.ix_(rows, positions)].astype(np.float64))
    ratings = favorites.to_scipy()
    hits = ratings.copy()
    hits.data = np.ones_like(hits.data)
    counts = (hits @ incidence).tocsr()
    if aggregation == "count":
        out = counts
    else:
        out = (ratings @ incidence).tocsr()
        if aggregation == "mean":
            out = out.multiply(counts.power(-1)).tocsr()
    out.eliminate_zeros()
    out.sort_indices()
    alive = np.diff(out.indptr) > 0
    out = out[alive]
    return UserFeatureMatrix(space, aggregation, favorites.user_ids[alive], out.indptr, out.indices, out.data)


def _fmt(value: float) -> str:
    value = float(value)
    return str(int(value)) if value.is_integer() else repr(value)


def dump_matrix(matrix: MovieFeatureMatrix | SparseUserMatrix) -> str:
    """Deterministic text dump: column labels, then sorted ``row_id,col_index,value`` lines."""
    labels = matrix.feature_space.keys if isinstance(matrix, MovieFeatureMatrix) else matrix.column_ids
    lines = [",".join(str(c) for c in labels)]
    lines.extend(f"{r},{c},{_fmt(v)}" for r, c, v in sorted(matrix.triples()))
    return "\n".join(lines) + "\n"
