"""Text embedders and an exact flat inner-product index over chunk vectors.

Vectors are plain 1-D ``float64`` numpy arrays, L2-normalized so the inner
product equals cosine similarity.
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass
from typing import Protocol, Sequence

import httpx
import numpy as np

from . import _backend
from .corpus import Chunk
from ._http import post_json
from .errors import BackendError, IndexBuildError, ValidationError

DEFAULT_DIM = 64
DEFAULT_K = 3

_WORD = re.compile(r"\w+")


class Embedder(Protocol):
    dimension: int | None

    def embed(self, text: str) -> np.ndarray: ...

    def embed_many(self, texts: Sequence[str]) -> np.ndarray: ...


def normalize(vec: np.ndarray) -> np.ndarray:
    """Scale ``vec`` to unit L2 norm. Raises ``ValueError`` on zero or non-finite input."""
    vec = np.asarray(vec, dtype=np.float64)
    if not np.all(np.isfinite(vec)):
        raise ValueError("embedding has non-finite entries")
    norm = float(np.sqrt(np.dot(vec, vec)))
    if norm == 0.0:
        raise ValueError("cannot normalize a zero vector")
    return vec / norm


class HashingEmbedder:
    """Deterministic bag-of-words embedder using signed feature hashing.

    Text is lowercased and split into ``\\w+`` runs; each token lands in one
    of ``dimension`` buckets with a hash-derived sign. Needs no model weights
    and still scores lexical overlap sensibly. Thread-safe.
    """

    def __init__(self, dimension: int = DEFAULT_DIM):
        if dimension < 1:
            raise ValueError("dimension must be >= 1")
        self.dimension = dimension

    def tokens(self, text: str) -> list[bytes]:
        words = _WORD.findall(text.lower()) or text.lower().split()
        return [w.encode("utf-8") for w in words]

    def embed(self, text: str) -> np.ndarray:
        if not text or not text.strip():
            raise ValueError("cannot embed empty text")
        counts = _backend.hash_counts(self.tokens(text), self.dimension)
        if not counts.any():
            # every token cancelled out; fall back to one bucket for the whole text
            h = _backend.fnv1a64(" ".join(text.lower().split()).encode("utf-8"))
            counts[h % self.dimension] = 1.0
        return normalize(counts)

    def embed_many(self, texts: Sequence[str]) -> np.ndarray:
        if not texts:
            return np.empty((0, self.dimension))
        return np.stack([self.embed(t) for t in texts])


class HttpEmbedder:
    """Client for an embedding server.

    POSTs ``{"texts": [...]}`` and expects ``{"vectors": [[...], ...]}``.
    Returned vectors are normalized here. The dimension is pinned from the
    first response; later responses of another size raise ``BackendError``.
    """

    def __init__(self, url: str, timeout: float = 30.0, client: httpx.Client | None = None):
        self.url = url
        self.dimension: int | None = None
        self._client = client or httpx.Client(timeout=timeout)
        self._lock = threading.Lock()

    def embed(self, text: str) -> np.ndarray:
        return self.embed_many([text])[0]

    def embed_many(self, texts: Sequence[str]) -> np.ndarray:
        if any(not t or not t.strip() for t in texts):
            raise ValueError("cannot embed empty text")
        payload = post_json(self._client, self.url, {"texts": list(texts)})
        vectors = payload.get("vectors") if isinstance(payload, dict) else None
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise BackendError("embedding response missing 'vectors' of matching length", retryable=False)
        try:
            arr = np.asarray(vectors, dtype=np.float64)
        except (TypeError, ValueError):
            raise BackendError("embedding vectors are not numeric", retryable=False) from None
        if arr.ndim != 2:
            raise BackendError("embedding vectors are ragged", retryable=False)
        with self._lock:
            if self.dimension is None:
                self.dimension = arr.shape[1]
            elif arr.shape[1] != self.dimension:
                raise BackendError(
                    f"embedding dimension changed from {self.dimension} to {arr.shape[1]}",
                    retryable=False,
                )
        try:
            return np.stack([normalize(v) for v in arr])
        except ValueError as exc:
            raise BackendError(f"bad embedding vector: {exc}", retryable=False) from None


@dataclass(frozen=True)
class RetrievalResult:
    chunk: Chunk
    score: float
    rank: int


@dataclass(frozen=True, eq=False)
class VectorIndex:
    """Immutable exact-search index; row ``i`` of ``matrix`` embeds ``chunks[i]``."""

    dimension: int
    chunks: tuple[Chunk, ...]
    matrix: np.ndarray

    def __len__(self) -> int:
        return len(self.chunks)


def build_index(chunks: Sequence[Chunk], embedder: Embedder) -> VectorIndex:
    if not chunks:
        raise IndexBuildError("empty index")
    ids = [c.id for c in chunks]
    if len(set(ids)) != len(ids):
        raise IndexBuildError("duplicate chunk reference in index")
    vectors = [np.asarray(v, dtype=np.float64) for v in embedder.embed_many([c.text for c in chunks])]
    dims = {v.shape for v in vectors}
    if len(dims) != 1 or len(next(iter(dims))) != 1:
        raise IndexBuildError(f"embedding dimension mismatch: {sorted(dims)}")
    matrix = np.ascontiguousarray(np.stack(vectors))
    matrix.setflags(write=False)
    return VectorIndex(dimension=matrix.shape[1], chunks=tuple(chunks), matrix=matrix)


def search(index: VectorIndex, query_vec: np.ndarray, k: int = DEFAULT_K) -> list[RetrievalResult]:
    """Exact top-``k`` by cosine similarity; equal scores keep insertion order."""
    if k < 1:
        raise ValidationError("k must be >= 1")
    query_vec = np.ascontiguousarray(query_vec, dtype=np.float64)
    if query_vec.shape != (index.dimension,):
        raise ValidationError(
            f"query dimension {query_vec.shape} does not match index dimension {index.dimension}"
        )
    rows, scores = _backend.topk_inner_product(index.matrix, query_vec, k)
    return [
        RetrievalResult(chunk=index.chunks[int(r)], score=float(s), rank=rank)
        for rank, (r, s) in enumerate(zip(rows, scores), start=1)
    ]
