"""Bundled label vocabularies and the shared label-matching key."""

from __future__ import annotations

import hashlib
from importlib import resources
from pathlib import Path


def label_key(label: str) -> str:
    """Comparison key: case-folded, hyphens treated as spaces, whitespace collapsed."""
    return " ".join(label.casefold().replace("-", " ").split())


def read_label_file(path: str | Path) -> list[str]:
    text = Path(path).read_text(encoding="utf-8")
    return [line.strip() for line in text.splitlines() if line.strip()]


def _bundled(name: str) -> list[str]:
    text = resources.files("tonerec.data").joinpath(name).read_text(encoding="utf-8")
    return [line.strip() for line in text.splitlines() if line.strip()]


GENRES: tuple[str, ...] = tuple(_bundled("genres.txt"))
TONES: tuple[str, ...] = tuple(_bundled("tones.txt"))


def vocabulary_hash(labels) -> str:
    digest = hashlib.sha256("\n".join(labels).encode("utf-8")).hexdigest()
    return digest[:16]
