"""Seeded synthetic catalogs and rating logs for tests, demos and benchmarks."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .vocab import GENRES

_SUBJECTS = [
    "a retired detective", "two estranged sisters", "a young pilot", "an ambitious lawyer",
    "a small-town teacher", "a band of outlaws", "a lonely robot", "a war photographer",
    "a struggling boxer", "an exiled prince", "a grieving father", "a curious child",
]
_EVENTS = [
    "uncovers a conspiracy", "must survive a brutal winter", "falls for a stranger",
    "plans one last heist", "returns home after twenty years", "is hunted across the desert",
    "fights to save a failing farm", "discovers a hidden world", "stands trial for a crime",
    "joins a doomed expedition", "races against time", "confronts an old rival",
]
_SETTINGS = [
    "in 1940s Berlin", "on a remote island", "in a crumbling city", "aboard a starship",
    "in the American West", "during the Great Depression", "in modern Tokyo", "at sea",
]

# Rough genre popularity for a top-rated catalog (Drama dominant).
_GENRE_WEIGHTS = {
    "Drama": 30, "Adventure": 10, "Action": 9, "Crime": 8, "Comedy": 7, "Biography": 5,
    "Mystery": 5, "Thriller": 5, "Sci-Fi": 4, "Animation": 4, "Romance": 4, "War": 4,
    "History": 3, "Fantasy": 3, "Family": 3, "Western": 2, "Horror": 2, "Sport": 2,
    "Film Noir": 1, "Music": 1, "Musical": 1,
}


def make_movies(n_movies: int, seed: int = 0, movie_ids=None) -> list[tuple[int, str, str, str]]:
    """Rows of ``(movie_id, title, genres, description)`` with 1-3 genres each."""
    rng = np.random.default_rng(seed)
    ids = list(range(1, n_movies + 1)) if movie_ids is None else [int(m) for m in movie_ids]
    weights = np.array([_GENRE_WEIGHTS[g] for g in GENRES], dtype=float)
    weights /= weights.sum()
    rows = []
    for i, mid in enumerate(ids):
        n_genres = int(rng.choice([1, 2, 3], p=[0.2, 0.35, 0.45]))
        picks = rng.choice(len(GENRES), size=n_genres, replace=False, p=weights)
        genres = "|".join(GENRES[j] for j in sorted(picks))
        desc = (
            f"{_SUBJECTS[rng.integers(len(_SUBJECTS))].capitalize()} "
            f"{_EVENTS[rng.integers(len(_EVENTS))]} {_SETTINGS[rng.integers(len(_SETTINGS))]}."
        )
        rows.append((mid, f"Synthetic Film {i + 1:03d}", genres, desc))
    return rows


def _half_star(x: np.ndarray) -> np.ndarray:
    return np.clip(np.round(x * 2) / 2, 1.0, 5.0)


def make_ratings(movies, n_users: int, per_user: tuple[int, int] = (10, 20), seed: int = 0):
    """Ratings from a genre-affinity model: ``(user_id, movie_id, rating, timestamp)``."""
    rng = np.random.default_rng(seed)
    g_index = {g: j for j, g in enumerate(GENRES)}
    onehot = np.zeros((len(movies), len(GENRES)))
    for i, (_, _, genres, _) in enumerate(movies):
        for g in genres.split("|"):
            onehot[i, g_index[g]] = 1
    onehot /= onehot.sum(axis=1, keepdims=True)
    quality = rng.normal(0, 0.4, len(movies))
    rows = []
    for u in range(1, n_users + 1):
        taste = rng.normal(0, 1.0, len(GENRES))
        bias = rng.normal(0, 0.4)
        count = int(rng.integers(per_user[0], per_user[1] + 1))
        picked = np.sort(rng.choice(len(movies), size=min(count, len(movies)), replace=False))
        raw = 3.4 + bias + quality[picked] + 0.9 * onehot[picked] @ taste + rng.normal(0, 0.5, len(picked))
        for i, r in zip(picked, _half_star(raw)):
            rows.append((u, movies[i][0], float(r), 964982703 + len(rows)))
    return rows


def make_movielens_like(
    n_users: int = 610, n_items: int = 9742, n_ratings: int = 100_836, n_catalog: int = 241, seed: int = 0
):
    """A MovieLens-small-shaped log plus a catalog drawn from its popular items.

    Returns ``(catalog_rows, rating_rows)``. Every user has at least 20
    ratings; item popularity is Zipf-like.
    """
    rng = np.random.default_rng(seed)
    popularity = 1.0 / np.arange(1, n_items + 1) ** 0.9
    popularity /= popularity.sum()
    counts = np.maximum(20, rng.lognormal(4.2, 1.0, n_users)).astype(int)
    counts = np.minimum(counts, n_items // 4)
    counts = np.maximum(20, np.round(counts * n_ratings / counts.sum()).astype(int))
    quality = rng.normal(0, 0.5, n_items)
    rows = []
    for u in range(1, n_users + 1):
        items = np.sort(rng.choice(n_items, size=int(counts[u - 1]), replace=False, p=popularity))
        raw = 3.5 + rng.normal(0, 0.4) + quality[items] + rng.normal(0, 0.8, len(items))
        rows.extend((u, int(i) + 1, float(r), 964982703 + len(rows)) for i, r in zip(items, _half_star(raw)))
    catalog_ids = sorted(rng.choice(np.arange(1, 301), size=n_catalog, replace=False).tolist())
    return make_movies(n_catalog, seed, movie_ids=catalog_ids), rows


def write_movies_csv(rows, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
        w.writerow(["movie_id", "title", "genres", "description"])
        w.writerows(rows)


def write_ratings_csv(rows, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["user_id", "movie_id", "rating", "timestamp"])
        for u, m, r, ts in rows:
            w.writerow([u, m, f"{r:.1f}", ts])


def write_fixture(out_dir: str | Path, n_users: int = 50, n_movies: int = 30, seed: int = 7) -> tuple[Path, Path]:
    """The bundled 50-user x 30-movie fixture (regenerated byte-identically)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    movies = make_movies(n_movies, seed)
    write_movies_csv(movies, out_dir / "movies.csv")
    write_ratings_csv(make_ratings(movies, n_users, (10, 20), seed), out_dir / "ratings.csv")
    return out_dir / "movies.csv", out_dir / "ratings.csv"
