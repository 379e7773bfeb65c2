"""Pure-Python matching kernels (fallback for the compiled extension).

Semantics are identical to _kernels.pyx; keep both in sync. Weight
matrices are clients x channels with at least as many clients as
channels, so a perfect matching saturates every channel.
"""

import numpy as np


def _try_channel(w, threshold, j, owner, seen):
    # Augmenting-path step: channel j claims some client, evicting the
    # previous owner recursively. Clients scanned in index order.
    U = len(w)
    for i in range(U):
        if not seen[i] and w[i][j] >= threshold:
            seen[i] = True
            if owner[i] < 0 or _try_channel(w, threshold, owner[i], owner, seen):
                owner[i] = j
                return True
    return False


def matching_at_threshold(weights, threshold):
    """Maximum matching using only edges with weight >= threshold.

    Returns (size, cols) where cols[j] is the client matched to channel
    j, or -1 if channel j is unmatched.
    """
    w = weights.tolist()
    U, N = weights.shape
    owner = [-1] * U
    size = 0
    for j in range(N):
        seen = [False] * U
        if _try_channel(w, threshold, j, owner, seen):
            size += 1
    cols = np.full(N, -1, dtype=np.int64)
    for i in range(U):
        if owner[i] >= 0:
            cols[owner[i]] = i
    return size, cols


def bottleneck_assignment(weights):
    """Max-min perfect matching via threshold binary search.

    Finds the largest threshold at which a perfect matching survives and
    returns (cols, value) where value is the minimum matched weight.
    """
    U, N = weights.shape
    vals = np.unique(weights.ravel())
    lo, hi = 0, len(vals) - 1
    # The smallest threshold keeps the complete graph, always feasible.
    while lo < hi:
        mid = (lo + hi + 1) // 2
        size, _ = matching_at_threshold(weights, vals[mid])
        if size == N:
            lo = mid
        else:
            hi = mid - 1
    _, cols = matching_at_threshold(weights, vals[lo])
    value = min(weights[cols[j], j] for j in range(N))
    return cols, float(value)


def greedy_assignment(weights, order, tie):
    """Clients in `order` grab their best remaining channel until none left.

    Ties on weight are broken toward the larger entry of `tie`; pass iid
    uniforms for a random tie-break, zeros for lowest-index.
    """
    w = weights.tolist()
    tb = tie.tolist()
    U, N = weights.shape
    cols = np.full(N, -1, dtype=np.int64)
    remaining = N
    for idx in range(U):
        if remaining == 0:
            break
        i = int(order[idx])
        best = -1
        for j in range(N):
            if cols[j] >= 0:
                continue
            if best < 0 or w[i][j] > w[i][best] or (
                w[i][j] == w[i][best] and tb[i][j] > tb[i][best]
            ):
                best = j
        cols[best] = i
        remaining -= 1
    return cols
