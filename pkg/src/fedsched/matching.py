"""Client-channel assignments and max-min (bottleneck) matching.

Reward matrices are clients x channels, entries nonnegative, with
UNEXPLORED (float inf) marking pairs that have never been observed so
they outrank every finite weight. An assignment binds every channel to
exactly one client and a client to at most one channel; its value is the
minimum weight over matched pairs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import _core

UNEXPLORED = np.inf

BRUTE_FORCE_LIMIT = 10_000_000


def validate_rewards(matrix) -> np.ndarray:
    """Check matrix shape and entry range, returning a float64 view."""
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError("reward matrix must be 2-D (clients x channels)")
    num_clients, num_channels = m.shape
    if num_channels < 1:
        raise ValueError("need at least one channel")
    if num_clients < num_channels:
        raise ValueError(
            f"need at least as many clients as channels, got {m.shape}"
        )
    if np.isnan(m).any():
        raise ValueError("reward matrix contains NaN")
    if (m < 0).any():
        raise ValueError("reward weights must be >= 0")
    return m


@dataclass(frozen=True, eq=False)
class Assignment:
    """Channel assignment: channel j is served by client_for_channel[j]."""

    client_for_channel: np.ndarray

    def __post_init__(self):
        arr = np.array(self.client_for_channel, dtype=np.int64, copy=True)
        arr.flags.writeable = False
        object.__setattr__(self, "client_for_channel", arr)

    @property
    def num_channels(self) -> int:
        return self.client_for_channel.shape[0]

    def validate(self, num_clients: int) -> None:
        a = self.client_for_channel
        if a.ndim != 1 or a.shape[0] < 1:
            raise ValueError("assignment must map a nonempty channel list")
        if ((a < 0) | (a >= num_clients)).any():
            raise ValueError("client index out of range")
        if np.unique(a).shape[0] != a.shape[0]:
            raise ValueError("a client may occupy at most one channel")

    def pairs(self):
        """(client, channel) tuples, one per channel."""
        return [(int(i), j) for j, i in enumerate(self.client_for_channel)]

    def matched_mask(self, num_clients: int) -> np.ndarray:
        mask = np.zeros(num_clients, dtype=bool)
        mask[self.client_for_channel] = True
        return mask

    def channel_of(self, client: int) -> int:
        """Channel held by `client`, or -1 when unmatched."""
        hits = np.nonzero(self.client_for_channel == client)[0]
        return int(hits[0]) if hits.size else -1

    def __eq__(self, other):
        if not isinstance(other, Assignment):
            return NotImplemented
        return np.array_equal(self.client_for_channel, other.client_for_channel)

    def __hash__(self):
        return hash(tuple(self.client_for_channel.tolist()))


def min_matched_edge(matrix, assignment: Assignment) -> float:
    """Minimum weight over the assignment's matched pairs."""
    m = np.asarray(matrix, dtype=np.float64)
    cols = assignment.client_for_channel
    return float(np.min(m[cols, np.arange(cols.shape[0])]))


def random_assignment(num_clients: int, num_channels: int, rng) -> Assignment:
    """Uniform draw over valid assignments (random injective map)."""
    if num_clients < num_channels:
        raise ValueError("need at least as many clients as channels")
    return Assignment(rng.permutation(num_clients)[:num_channels])


def optimal_matching(matrix) -> Assignment:
    """Max-min optimal assignment (threshold search + augmenting paths)."""
    m = validate_rewards(matrix)
    cols, _ = _core.bottleneck_assignment(m)
    return Assignment(cols)


def optimal_matching_by_pruning(matrix) -> Assignment:
    """Reference form of optimal_matching: prune the globally weakest edge
    until no perfect matching survives, then return the last survivor.

    Slower than optimal_matching but value-identical; kept for
    cross-checking.
    """
    m = validate_rewards(matrix).copy()
    num_channels = m.shape[1]
    size, cols = _core.matching_at_threshold(m, 0.0)
    if size != num_channels:
        raise AssertionError("complete matrix must admit a perfect matching")
    best = cols
    while True:
        alive = np.where(np.isneginf(m), np.inf, m)
        i, j = np.unravel_index(int(np.argmin(alive)), m.shape)
        m[i, j] = -np.inf
        size, cols = _core.matching_at_threshold(m, 0.0)
        if size != num_channels:
            return Assignment(best)
        best = cols


def brute_force_optimal(matrix) -> tuple[Assignment, float]:
    """Exhaustive max-min optimum; ties go to the lexicographically first
    channel->client tuple. Refuses instances with more than
    BRUTE_FORCE_LIMIT candidate assignments.
    """
    m = validate_rewards(matrix)
    num_clients, num_channels = m.shape
    count = 1
    for k in range(num_channels):
        count *= num_clients - k
        if count > BRUTE_FORCE_LIMIT:
            raise ValueError("instance too large for brute force")
    rows = m.tolist()
    best_val = -np.inf
    best = None
    for perm in itertools.permutations(range(num_clients), num_channels):
        v = min(rows[perm[j]][j] for j in range(num_channels))
        if v > best_val:
            best_val = v
            best = perm
    return Assignment(np.array(best, dtype=np.int64)), float(best_val)


def greedy_with_order(matrix, order, rng=None) -> Assignment:
    """Each client in `order` takes its best remaining channel until all
    channels are taken. Weight ties break uniformly at random when an rng
    is given, toward the lowest channel index otherwise.
    """
    m = validate_rewards(matrix)
    num_clients, num_channels = m.shape
    o = np.asarray(order, dtype=np.int64)
    if o.shape != (num_clients,) or not np.array_equal(
        np.sort(o), np.arange(num_clients)
    ):
        raise ValueError("order must be a permutation of all client indices")
    if rng is None:
        tie = np.zeros((num_clients, num_channels))
    else:
        tie = rng.random((num_clients, num_channels))
    return Assignment(_core.greedy_assignment(m, o, tie))


def gmba_step(matrix, previous: Assignment | None, rng) -> Assignment:
    """One greedy improvement pass: greedy under a fresh random client
    order, kept only if it strictly beats `previous` on this matrix.
    """
    m = validate_rewards(matrix)
    candidate = greedy_with_order(m, rng.permutation(m.shape[0]), rng)
    if previous is None:
        return candidate
    if min_matched_edge(m, candidate) > min_matched_edge(m, previous):
        return candidate
    return previous
