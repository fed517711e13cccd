"""User-based collaborative filtering: rating prediction and top-K ranking."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .corpus import MAX_RATING, MIN_RATING
from .diagnostics import warn
from .matrices import UserItemMatrix
from .similarity import NeighborList


@dataclass(frozen=True)
class PredictedRating:
    user_id: int
    movie_id: int
    value: float
    support: int


@dataclass(frozen=True)
class Recommendation:
    movie_id: int
    value: float
    rank: int


def predict_rating(
    user: int, movie: int, neighbors: NeighborList, ratings: UserItemMatrix
) -> PredictedRating | None:
    """Mean-centered, similarity-weighted neighbor deviation added to the user's mean.

    Returns ``None`` (no prediction) when no neighbor rated ``movie`` or all
    contributing similarities are zero. The value is clamped to [1, 5].
    """
    base = ratings.mean(user)
    num = 0.0
    den = 0.0
    support = 0
    for v, sim in neighbors:
        r = ratings.get(v, movie)
        if r is None:
            continue
        num += sim * (r - ratings.mean(v))
        den += abs(sim)
        support += 1
    if support == 0 or den == 0.0:
        return None
    value = min(MAX_RATING, max(MIN_RATING, base + num / den))
    return PredictedRating(int(user), int(movie), value, support)


def recommend_top_k(
    user: int,
    k: int,
    candidates: Iterable[int],
    neighbors: NeighborList,
    ratings: UserItemMatrix,
) -> list[Recommendation]:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if len(neighbors) == 0:
        warn("coverage", f"user={user} has no neighbors; no recommendations")
        return []
    seen = ratings.row(user).keys()
    scored = []
    for movie in candidates:
        if movie in seen:
            continue
        p = predict_rating(user, movie, neighbors, ratings)
        if p is not None:
            scored.append((p.value, movie))
    scored.sort(key=lambda t: (-t[0], t[1]))
    return [Recommendation(int(m), v, rank) for rank, (v, m) in enumerate(scored[:k], start=1)]
