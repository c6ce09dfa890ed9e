"""Pure-Python implementations of the numeric kernels.

Every routine here accumulates strictly left to right so results are
bit-identical to the compiled versions in ``_kernels.pyx``.
"""

from __future__ import annotations

import heapq
import math
from typing import Sequence

import numpy as np

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def entropy(probs: Sequence[float]) -> float:
    """Shannon entropy in nats; zero entries contribute nothing."""
    if isinstance(probs, np.ndarray):
        probs = probs.tolist()
    h = 0.0
    for p in probs:
        if p > 0.0:
            h -= p * math.log(p)
    return h


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * FNV_PRIME) & _MASK64
    return h


def hash_counts(tokens: Sequence[bytes], dim: int) -> np.ndarray:
    """Signed feature-hashing counts of ``tokens`` into ``dim`` buckets."""
    out = [0.0] * dim
    for tok in tokens:
        h = fnv1a64(tok)
        if (h >> 32) & 1:
            out[h % dim] -= 1.0
        else:
            out[h % dim] += 1.0
    return np.asarray(out, dtype=np.float64)


def inner_products(matrix: np.ndarray, query: np.ndarray) -> list[float]:
    rows = matrix.tolist()
    q = query.tolist()
    scores = []
    for row in rows:
        s = 0.0
        for a, b in zip(row, q):
            s += a * b
        scores.append(s)
    return scores


def topk_inner_product(
    matrix: np.ndarray, query: np.ndarray, k: int
) -> tuple[np.ndarray, np.ndarray]:
    """Exact top-``k`` rows by inner product, ties to the lower row index."""
    scores = inner_products(matrix, query)
    order = heapq.nsmallest(k, range(len(scores)), key=lambda i: (-scores[i], i))
    return (
        np.asarray(order, dtype=np.int64),
        np.asarray([scores[i] for i in order], dtype=np.float64),
    )
