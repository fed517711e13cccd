"""Pearson user-user similarity and top-N neighbor selection."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from . import _kernels
from .errors import ConfigError
from .matrices import SparseUserMatrix

MEANS_SCOPES = ("all-rated", "co-rated")
DEFAULT_MEANS_SCOPE = "all-rated"
DEFAULT_MIN_OVERLAP = 2


@dataclass(frozen=True)
class SimilarityScore:
    user_a: int
    user_b: int
    value: float
    overlap: int


@dataclass(frozen=True)
class NeighborList:
    target: int
    neighbors: tuple[tuple[int, float], ...]

    def __len__(self) -> int:
        return len(self.neighbors)

    def __iter__(self):
        return iter(self.neighbors)

    @property
    def user_ids(self) -> list[int]:
        return [u for u, _ in self.neighbors]


def _check_scope(means_scope: str) -> None:
    if means_scope not in MEANS_SCOPES:
        raise ConfigError(f"means_scope must be one of {MEANS_SCOPES}, got {means_scope!r}")


def pcc(ratings_a: Mapping, ratings_b: Mapping, means_scope: str = DEFAULT_MEANS_SCOPE) -> float | None:
    """Pearson correlation of two users' ratings over their co-rated columns.

    With ``means_scope="all-rated"`` each user's mean is taken over everything
    that user rated; with ``"co-rated"`` over the shared columns only. Returns
    ``None`` when the users share no column or either side has zero variance
    on the shared columns.
    """
    _check_scope(means_scope)
    if not ratings_a or not ratings_b:
        raise ValueError("pcc needs two non-empty rating vectors")
    common = sorted(ratings_a.keys() & ratings_b.keys())
    if not common:
        return None
    xs = [float(ratings_a[c]) for c in common]
    ys = [float(ratings_b[c]) for c in common]
    if means_scope == "co-rated":
        mean_a = sum(xs) / len(xs)
        mean_b = sum(ys) / len(ys)
    else:
        mean_a = sum(float(v) for v in ratings_a.values()) / len(ratings_a)
        mean_b = sum(float(v) for v in ratings_b.values()) / len(ratings_b)
    num = var_a = var_b = raw_a = raw_b = 0.0
    for x, y in zip(xs, ys):
        da = x - mean_a
        db = y - mean_b
        num += da * db
        var_a += da * da
        var_b += db * db
        raw_a += x * x
        raw_b += y * y
    rtol = _kernels.ZERO_VARIANCE_RTOL
    if var_a <= rtol * raw_a or var_b <= rtol * raw_b:
        return None
    r = num / (math.sqrt(var_a) * math.sqrt(var_b))
    return min(1.0, max(-1.0, r))


def similarity_arrays(
    source: SparseUserMatrix,
    target_index: int,
    means_scope: str = DEFAULT_MEANS_SCOPE,
    backend: str | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Raw similarity row by matrix position: ``(values with NaN = undefined, overlaps)``."""
    _check_scope(means_scope)
    co_rated = means_scope == "co-rated"
    backend = backend or _kernels.BACKEND
    if backend == "numba":
        return _kernels.pcc_row_numba(
            source.indptr, source.indices, source.data, source.means, target_index, co_rated
        )
    if backend == "numpy":
        dense, mask = source.dense()
        return _kernels.pcc_row_numpy(dense, mask, source.means, target_index, co_rated)
    raise ConfigError(f"unknown backend {backend!r}")


def similarity_row(
    source: SparseUserMatrix,
    target: int,
    min_overlap: int = DEFAULT_MIN_OVERLAP,
    means_scope: str = DEFAULT_MEANS_SCOPE,
    backend: str | None = None,
) -> list[SimilarityScore]:
    """Scores of ``target`` against every other user with a defined PCC and enough overlap."""
    if target not in source:
        raise KeyError(f"user {target} not in similarity source")
    values, overlap = similarity_arrays(source, source.user_index(target), means_scope, backend)
    keep = np.flatnonzero(~np.isnan(values) & (overlap >= min_overlap))
    return [
        SimilarityScore(int(target), int(source.user_ids[i]), float(values[i]), int(overlap[i]))
        for i in keep
    ]


def top_n_neighbors(scores: Iterable[SimilarityScore], n: int, allow_negative: bool = False) -> NeighborList:
    """The n most similar users, ties broken by ascending user id."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    scores = list(scores)
    target = scores[0].user_a if scores else -1
    pool = [s for s in scores if s.user_b != s.user_a and (allow_negative or s.value >= 0)]
    pool.sort(key=lambda s: (-s.value, s.user_b))
    return NeighborList(target, tuple((s.user_b, s.value) for s in pool[:n]))


def neighbors_for(
    source: SparseUserMatrix,
    target: int,
    n: int,
    min_overlap: int = DEFAULT_MIN_OVERLAP,
    means_scope: str = DEFAULT_MEANS_SCOPE,
    allow_negative: bool = False,
    backend: str | None = None,
) -> NeighborList:
    """``top_n_neighbors(similarity_row(...))`` without materializing score objects."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if target not in source:
        return NeighborList(int(target), ())
    values, overlap = similarity_arrays(source, source.user_index(target), means_scope, backend)
    ok = ~np.isnan(values) & (overlap >= min_overlap)
    if not allow_negative:
        ok &= np.nan_to_num(values, nan=-1.0) >= 0
    idx = np.flatnonzero(ok)
    users = source.user_ids[idx]
    order = np.lexsort((users, -values[idx]))[:n]
    return NeighborList(int(target), tuple((int(users[o]), float(values[idx][o])) for o in order))
