"""Tone-of-voice tagging: LLM extraction, vocabulary normalization, cache."""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Protocol

from .corpus import Corpus, MovieRecord
from .diagnostics import warn
from .errors import ConfigError, TonerecError
from .vocab import TONES, label_key, read_label_file

API_KEY_ENV = "TONEREC_API_KEY"

PROMPT_TEMPLATE = (
    "Read the movie description below and describe its tone of voice.\n"
    "Reply with exactly {k} single-term tone-of-voice labels, comma-separated, "
    "with no other text.\n\n"
    "Title: {title}\n"
    "Description: {description}\n"
)
PROMPT_HASH = hashlib.sha256(PROMPT_TEMPLATE.encode("utf-8")).hexdigest()[:16]

MAX_ATTEMPTS = 3


class TaggingError(TonerecError):
    pass


class TaggingSkipped(TaggingError):
    """The movie has no description; it stays untagged."""


class UnknownTone(TaggingError):
    def __init__(self, term: str):
        super().__init__(f"unknown tone {term!r} (closed vocabulary)")
        self.term = term


class TransportError(TaggingError):
    """A client call failed before producing a response; retryable."""

    def __init__(self, message: str, attempts: int = 1):
        super().__init__(message)
        self.attempts = attempts


class UnparseableResponse(TaggingError):
    def __init__(self, raw_response: str, attempts: int = 1):
        super().__init__(f"no usable tone terms in response {raw_response!r} after {attempts} attempt(s)")
        self.raw_response = raw_response
        self.attempts = attempts


def _title_case(text: str) -> str:
    return " ".join(w[:1].upper() + w[1:].lower() for w in text.split())


class ToneVocabulary:
    """Ordered set of canonical tone labels.

    In ``closed`` mode unknown terms are rejected; in ``open`` mode they are
    title-cased and appended. Labels that differ only by case or by a
    space/hyphen swap are the same label; the hyphenated spelling wins.
    """

    def __init__(self, labels: Iterable[str] = TONES, mode: str = "closed"):
        if mode not in ("closed", "open"):
            raise ConfigError(f"vocabulary mode must be 'closed' or 'open', got {mode!r}")
        self.mode = mode
        self._labels: list[str] = []
        self._index: dict[str, int] = {}
        self._lock = threading.Lock()
        for label in labels:
            self._insert(label.strip())

    @classmethod
    def from_file(cls, path: str | Path, mode: str = "closed") -> "ToneVocabulary":
        return cls(read_label_file(path), mode)

    def _insert(self, label: str) -> str:
        key = label_key(label)
        pos = self._index.get(key)
        if pos is None:
            self._index[key] = len(self._labels)
            self._labels.append(label)
            return label
        if "-" in label and "-" not in self._labels[pos]:
            self._labels[pos] = label
        return self._labels[pos]

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(self._labels)

    def __len__(self) -> int:
        return len(self._labels)

    def __contains__(self, label: str) -> bool:
        return label_key(label) in self._index

    def lookup(self, term: str) -> str | None:
        pos = self._index.get(label_key(term))
        return None if pos is None else self._labels[pos]

    def add(self, term: str) -> str:
        with self._lock:
            return self._insert(term)


_EDGE_JUNK = re.compile(r"^[\W_]+|[\W_]+$")
_LIST_MARKER = re.compile(r"^\s*(?:\d+[.)]\s*|[-*•]\s+)")


def normalize_term(raw: str, vocab: ToneVocabulary) -> str:
    text = _LIST_MARKER.sub("", raw.strip())
    text = _EDGE_JUNK.sub("", text.strip())
    text = " ".join(text.split())
    if not text:
        raise TaggingError(f"empty tone term {raw!r}")
    found = vocab.lookup(text)
    if found is not None:
        return found
    if vocab.mode == "open":
        return vocab.add(_title_case(text))
    raise UnknownTone(text)


@dataclass(frozen=True)
class ToneAssignment:
    movie_id: int
    tones: tuple[str, ...]
    source: str
    raw_response: str = ""

    def __post_init__(self):
        if not 1 <= len(self.tones) <= 2 or len(set(self.tones)) != len(self.tones):
            raise TaggingError(f"movie {self.movie_id}: invalid tone list {self.tones}")


class LLMClient(Protocol):
    model: str

    def complete(self, prompt: str) -> str: ...


def parse_response(raw: str, k: int, vocab: ToneVocabulary) -> list[str]:
    tones: list[str] = []
    for token in re.split(r"[,;\n]", raw):
        if not token.strip():
            continue
        try:
            term = normalize_term(token, vocab)
        except UnknownTone as exc:
            warn("unknown_tone", f"term={exc.term!r}")
            continue
        except TaggingError:
            continue
        if term not in tones:
            tones.append(term)
        if len(tones) == k:
            break
    return tones


def build_prompt(movie: MovieRecord, k: int) -> str:
    return PROMPT_TEMPLATE.format(k=k, title=movie.title, description=movie.description)


def extract_tones(
    movie: MovieRecord,
    k: int,
    client: LLMClient,
    vocab: ToneVocabulary | None = None,
    *,
    attempts: int = MAX_ATTEMPTS,
    backoff: float = 0.5,
    sleep: Callable[[float], None] = time.sleep,
) -> ToneAssignment:
    """Ask ``client`` for ``k`` tone labels and normalize the answer.

    Transport failures and unusable answers are retried with exponential
    backoff, ``attempts`` times in total.
    """
    if k not in (1, 2):
        raise ValueError(f"k must be 1 or 2, got {k}")
    if not movie.description.strip():
        raise TaggingSkipped(f"movie {movie.movie_id} has no description")
    vocab = vocab or ToneVocabulary()
    prompt = build_prompt(movie, k)
    raw = ""
    transport_failed = False
    for attempt in range(1, attempts + 1):
        if attempt > 1:
            sleep(backoff * 2 ** (attempt - 2))
        try:
            raw = client.complete(prompt)
        except TransportError as exc:
            transport_failed = True
            last_exc = exc
            continue
        transport_failed = False
        tones = parse_response(raw or "", k, vocab)
        if tones:
            return ToneAssignment(movie.movie_id, tuple(tones), "llm", raw)
    if transport_failed:
        raise TransportError(f"movie {movie.movie_id}: {last_exc}", attempts=attempts)
    raise UnparseableResponse(raw, attempts=attempts)


def fixture_tag(movie: MovieRecord, k: int, seed: int, vocab: Iterable[str] = TONES) -> ToneAssignment:
    """Deterministic offline stand-in for the LLM: picks k distinct labels by hashing."""
    if k not in (1, 2):
        raise ValueError(f"k must be 1 or 2, got {k}")
    labels = tuple(vocab)
    digest = hashlib.sha256(f"{movie.movie_id}\x1f{movie.description}\x1f{seed}".encode("utf-8")).digest()
    first = int.from_bytes(digest[:8], "big") % len(labels)
    picked = [first]
    if k == 2:
        second = int.from_bytes(digest[8:16], "big") % (len(labels) - 1)
        picked.append(second + 1 if second >= first else second)
    tones = tuple(labels[i] for i in picked)
    return ToneAssignment(movie.movie_id, tones, "fixture", ", ".join(tones))


class FixtureTagger:
    """Client-like wrapper around :func:`fixture_tag`."""

    def __init__(self, seed: int = 0, vocab: ToneVocabulary | None = None):
        self.seed = seed
        self.vocab = vocab or ToneVocabulary()
        self.model = f"fixture-v1:seed={seed}"

    def assign(self, movie: MovieRecord, k: int) -> ToneAssignment:
        return fixture_tag(movie, k, self.seed, self.vocab.labels)


class OpenAIChatClient:
    """Minimal client for an OpenAI-compatible chat-completions endpoint."""

    def __init__(self, endpoint: str, model: str, *, timeout: float = 60.0, http_client=None):
        import httpx

        api_key = os.environ.get(API_KEY_ENV)
        if not api_key:
            raise ConfigError(f"live tagging needs the {API_KEY_ENV} environment variable")
        self.endpoint = endpoint
        self.model = model
        self._headers = {"Authorization": f"Bearer {api_key}"}
        self._http = http_client or httpx.Client(timeout=timeout)
        self._httpx = httpx

    def complete(self, prompt: str) -> str:
        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": 0,
        }
        try:
            resp = self._http.post(self.endpoint, json=payload, headers=self._headers)
        except self._httpx.TransportError as exc:
            raise TransportError(str(exc)) from exc
        if resp.status_code == 429 or resp.status_code >= 500:
            raise TransportError(f"HTTP {resp.status_code} from {self.endpoint}")
        if resp.status_code >= 400:
            raise TaggingError(f"HTTP {resp.status_code} from {self.endpoint}: {resp.text[:200]}")
        try:
            return resp.json()["choices"][0]["message"]["content"] or ""
        except (ValueError, KeyError, IndexError, TypeError):
            return ""


class TagCache:
    """JSON file of tone assignments keyed by (movie_id, k).

    Entries recorded under a different model or prompt hash are ignored.
    Writes are serialized and flushed to disk immediately.
    """

    def __init__(self, path: str | Path | None, model: str, prompt_hash: str = PROMPT_HASH):
        self.path = Path(path) if path is not None else None
        self.model = model
        self.prompt_hash = prompt_hash
        self.hits = 0
        self.writes = 0
        self._lock = threading.Lock()
        self._entries: dict[str, dict] = {}
        if self.path is not None and self.path.is_file():
            self._entries = json.loads(self.path.read_text(encoding="utf-8"))

    @staticmethod
    def _key(movie_id: int, k: int) -> str:
        return f"{movie_id}:{k}"

    def get(self, movie_id: int, k: int) -> ToneAssignment | None:
        with self._lock:
            entry = self._entries.get(self._key(movie_id, k))
            if entry is None or entry["model"] != self.model or entry["prompt_hash"] != self.prompt_hash:
                return None
            self.hits += 1
        return ToneAssignment(movie_id, tuple(entry["tones"]), entry["source"], entry["raw_response"])

    def put(self, assignment: ToneAssignment, k: int) -> None:
        entry = {
            "tones": list(assignment.tones),
            "source": assignment.source,
            "model": self.model,
            "prompt_hash": self.prompt_hash,
            "raw_response": assignment.raw_response,
        }
        with self._lock:
            self._entries[self._key(assignment.movie_id, k)] = entry
            self.writes += 1
            self._flush()

    def _flush(self) -> None:
        if self.path is None:
            return
        ordered = dict(sorted(self._entries.items(), key=lambda kv: tuple(map(int, kv[0].split(":")))))
        tmp = self.path.with_suffix(self.path.suffix + ".tmp")
        tmp.write_text(json.dumps(ordered, ensure_ascii=False, indent=1, sort_keys=False) + "\n", encoding="utf-8")
        os.replace(tmp, self.path)

    def __len__(self) -> int:
        return len(self._entries)


def _tag_one(movie: MovieRecord, k: int, client, vocab: ToneVocabulary, cache: TagCache | None):
    if cache is not None:
        hit = cache.get(movie.movie_id, k)
        if hit is not None:
            return hit
    if not movie.description.strip():
        warn("tagging_skipped", f"movie={movie.movie_id} reason=empty_description")
        return None
    try:
        if hasattr(client, "assign"):
            assignment = client.assign(movie, k)
        else:
            assignment = extract_tones(movie, k, client, vocab)
    except TaggingError as exc:
        raise TaggingError(f"movie {movie.movie_id}: {exc}") from exc
    if cache is not None:
        cache.put(assignment, k)
    return assignment


def tag_corpus(
    corpus: Corpus,
    k: int,
    client,
    cache: TagCache | None = None,
    vocab: ToneVocabulary | None = None,
    threads: int = 1,
) -> Corpus:
    """Attach k tones to every described movie, consulting ``cache`` first.

    The result does not depend on ``threads`` or completion order.
    """
    if k not in (1, 2):
        raise ValueError(f"k must be 1 or 2, got {k}")
    vocab = vocab or getattr(client, "vocab", None) or ToneVocabulary()
    movies = list(corpus.movies.values())
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda m: _tag_one(m, k, client, vocab, cache), movies))
    else:
        results = [_tag_one(m, k, client, vocab, cache) for m in movies]
    assignments = {a.movie_id: a.tones for a in results if a is not None}
    return corpus.with_tones(k, assignments)
