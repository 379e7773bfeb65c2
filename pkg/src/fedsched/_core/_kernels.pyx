# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled matching kernels. Mirror of kernels_py.py; keep in sync."""

import numpy as np

cimport cython
from libc.stdint cimport int64_t


cdef bint _try_channel(double[:, ::1] w, double threshold, Py_ssize_t j,
                       int64_t[::1] owner, unsigned char[::1] seen) noexcept:
    cdef Py_ssize_t i
    for i in range(w.shape[0]):
        if seen[i] == 0 and w[i, j] >= threshold:
            seen[i] = 1
            if owner[i] < 0 or _try_channel(w, threshold, owner[i], owner, seen):
                owner[i] = j
                return True
    return False


cdef Py_ssize_t _match(double[:, ::1] w, double threshold, int64_t[::1] owner,
                       unsigned char[::1] seen) noexcept:
    cdef Py_ssize_t i, j, size = 0
    for i in range(w.shape[0]):
        owner[i] = -1
    for j in range(w.shape[1]):
        for i in range(w.shape[0]):
            seen[i] = 0
        if _try_channel(w, threshold, j, owner, seen):
            size += 1
    return size


def matching_at_threshold(weights, threshold):
    """Maximum matching using only edges with weight >= threshold.

    Returns (size, cols) where cols[j] is the client matched to channel
    j, or -1 if channel j is unmatched.
    """
    cdef double[:, ::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t U = w.shape[0], N = w.shape[1], i
    owner_arr = np.empty(U, dtype=np.int64)
    seen_arr = np.zeros(U, dtype=np.uint8)
    cdef int64_t[::1] owner = owner_arr
    cdef unsigned char[::1] seen = seen_arr
    cdef Py_ssize_t size = _match(w, threshold, owner, seen)
    cols = np.full(N, -1, dtype=np.int64)
    cdef int64_t[::1] cv = cols
    for i in range(U):
        if owner[i] >= 0:
            cv[owner[i]] = i
    return size, cols


def bottleneck_assignment(weights):
    """Max-min perfect matching via threshold binary search.

    Finds the largest threshold at which a perfect matching survives and
    returns (cols, value) where value is the minimum matched weight.
    """
    cdef double[:, ::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t U = w.shape[0], N = w.shape[1], i, j
    vals_arr = np.unique(np.asarray(weights, dtype=np.float64).ravel())
    cdef double[::1] vals = vals_arr
    owner_arr = np.empty(U, dtype=np.int64)
    seen_arr = np.zeros(U, dtype=np.uint8)
    cdef int64_t[::1] owner = owner_arr
    cdef unsigned char[::1] seen = seen_arr
    cdef Py_ssize_t lo = 0, hi = vals.shape[0] - 1, mid
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if _match(w, vals[mid], owner, seen) == N:
            lo = mid
        else:
            hi = mid - 1
    _match(w, vals[lo], owner, seen)
    cols = np.full(N, -1, dtype=np.int64)
    cdef int64_t[::1] cv = cols
    for i in range(U):
        if owner[i] >= 0:
            cv[owner[i]] = i
    cdef double value = w[cv[0], 0]
    for j in range(1, N):
        if w[cv[j], j] < value:
            value = w[cv[j], j]
    return cols, value


def greedy_assignment(weights, order, tie):
    """Clients in `order` grab their best remaining channel until none left.

    Ties on weight are broken toward the larger entry of `tie`; pass iid
    uniforms for a random tie-break, zeros for lowest-index.
    """
    cdef double[:, ::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef double[:, ::1] tb = np.ascontiguousarray(tie, dtype=np.float64)
    cdef int64_t[::1] o = np.ascontiguousarray(order, dtype=np.int64)
    cdef Py_ssize_t U = w.shape[0], N = w.shape[1], idx, j, best
    cdef int64_t i
    cdef Py_ssize_t remaining = N
    cols = np.full(N, -1, dtype=np.int64)
    cdef int64_t[::1] cv = cols
    for idx in range(U):
        if remaining == 0:
            break
        i = o[idx]
        best = -1
        for j in range(N):
            if cv[j] >= 0:
                continue
            if best < 0 or w[i, j] > w[i, best] or (
                w[i, j] == w[i, best] and tb[i, j] > tb[i, best]
            ):
                best = j
        cv[best] = i
        remaining -= 1
    return cols
