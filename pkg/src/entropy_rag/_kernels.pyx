# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled numeric kernels; see ``_pykernels`` for the reference versions."""

import numpy as np

from libc.math cimport log
from libc.stdint cimport uint64_t

cdef uint64_t FNV_OFFSET = 0xCBF29CE484222325ULL
cdef uint64_t FNV_PRIME = 0x100000001B3ULL


def entropy(probs):
    cdef double[::1] p = np.ascontiguousarray(probs, dtype=np.float64)
    cdef Py_ssize_t i
    cdef double h = 0.0
    for i in range(p.shape[0]):
        if p[i] > 0.0:
            h -= p[i] * log(p[i])
    return h


cdef inline uint64_t _fnv1a64(const unsigned char[:] data) nogil:
    cdef uint64_t h = FNV_OFFSET
    cdef Py_ssize_t i
    for i in range(data.shape[0]):
        h ^= data[i]
        h *= FNV_PRIME
    return h


def fnv1a64(bytes data):
    if len(data) == 0:
        return int(FNV_OFFSET)
    return int(_fnv1a64(data))


def hash_counts(tokens, Py_ssize_t dim):
    out_arr = np.zeros(dim, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef uint64_t h
    cdef bytes tok
    for tok in tokens:
        h = FNV_OFFSET if len(tok) == 0 else _fnv1a64(tok)
        if (h >> 32) & 1:
            out[h % <uint64_t>dim] -= 1.0
        else:
            out[h % <uint64_t>dim] += 1.0
    return out_arr


def inner_products(matrix, query):
    cdef const double[:, ::1] m = np.ascontiguousarray(matrix, dtype=np.float64)
    cdef const double[::1] q = np.ascontiguousarray(query, dtype=np.float64)
    cdef Py_ssize_t n = m.shape[0], d = m.shape[1], i, j
    scores_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] scores = scores_arr
    cdef double s
    with nogil:
        for i in range(n):
            s = 0.0
            for j in range(d):
                s += m[i, j] * q[j]
            scores[i] = s
    return scores_arr


def topk_inner_product(matrix, query, Py_ssize_t k):
    cdef double[::1] scores = inner_products(matrix, query)
    cdef Py_ssize_t n = scores.shape[0]
    if k > n:
        k = n
    if k <= 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64)
    idx_arr = np.empty(k, dtype=np.int64)
    val_arr = np.empty(k, dtype=np.float64)
    cdef long long[::1] idx = idx_arr
    cdef double[::1] val = val_arr
    cdef Py_ssize_t filled = 0, i, pos
    cdef double s
    with nogil:
        for i in range(n):
            s = scores[i]
            # rows arrive in ascending index order, so an equal score never displaces
            if filled == k and not (s > val[k - 1]):
                continue
            pos = filled if filled < k else k - 1
            while pos > 0 and s > val[pos - 1]:
                val[pos] = val[pos - 1]
                idx[pos] = idx[pos - 1]
                pos -= 1
            val[pos] = s
            idx[pos] = i
            if filled < k:
                filled += 1
    return idx_arr, val_arr
