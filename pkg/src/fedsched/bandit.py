"""Queue-aware combinatorial UCB scheduling and the baselines it is
compared against.

The scheduler keeps one virtual queue per client tracking how far the
client lags its required selection fraction, and one play-count/mean
pair per (client, channel). Each round it either explores (probability
exp(-t/T0)) with a uniform random assignment, or matches clients to
channels by max-min on queue + V * (mean reward + confidence bonus).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .matching import (
    UNEXPLORED,
    Assignment,
    gmba_step,
    optimal_matching,
    random_assignment,
)

POLICIES = ("mamab-om", "mamab-gmba", "random", "round-robin", "single-ucb")


def reward(delay_s: float, d_max_s: float) -> float:
    """Punctuality reward in [0, 1]; zero at or beyond the deadline."""
    if d_max_s <= 0:
        raise ValueError("d_max must be positive")
    if delay_s < 0:
        raise ValueError("delay must be >= 0")
    return max(1.0 - delay_s / d_max_s, 0.0)


@dataclass
class SchedulerConfig:
    policy: str = "mamab-om"
    tradeoff_v: float = 10.0  # weight of reward terms against queues
    explore_t0: float = 100.0  # exploration decay time constant
    ucb_c: float = 0.1  # single-agent UCB exploration coefficient

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise ValueError(f"unknown policy {self.policy!r}")
        if self.tradeoff_v < 0 or self.explore_t0 <= 0 or self.ucb_c < 0:
            raise ValueError("V >= 0, T0 > 0, ucb_c >= 0 required")


@dataclass
class BanditState:
    """Sufficient statistics after t observed rounds."""

    num_clients: int
    num_channels: int
    t: int = 0
    counts: np.ndarray = field(init=False)  # (U, N) plays per pair
    reward_sums: np.ndarray = field(init=False)  # (U, N)
    queues: np.ndarray = field(init=False)  # (U,) virtual queue lengths

    def __post_init__(self):
        if self.num_channels < 1 or self.num_clients < self.num_channels:
            raise ValueError("need 1 <= channels <= clients")
        self.counts = np.zeros((self.num_clients, self.num_channels), dtype=np.int64)
        self.reward_sums = np.zeros((self.num_clients, self.num_channels))
        self.queues = np.zeros(self.num_clients)

    def client_plays(self) -> np.ndarray:
        return self.counts.sum(axis=1)


def update_queues(state: BanditState, betas, indicators) -> BanditState:
    """Advance the virtual queues by one round's arrivals and service."""
    b = np.asarray(betas, dtype=np.float64)
    ind = np.asarray(indicators, dtype=np.float64)
    if b.shape != state.queues.shape or ind.shape != state.queues.shape:
        raise ValueError("betas and indicators must be per-client vectors")
    if (b < 0).any() or (b > 1).any():
        raise ValueError("selection fractions must lie in [0, 1]")
    np.maximum(state.queues + b - ind, 0.0, out=state.queues)
    return state


def observe(state: BanditState, assignment: Assignment, rewards) -> BanditState:
    """Record one round's matched rewards; rewards align with channels."""
    r = np.asarray(rewards, dtype=np.float64)
    assignment.validate(state.num_clients)
    if r.shape != (state.num_channels,):
        raise ValueError("need one reward per channel")
    if (r < 0).any() or (r > 1).any():
        raise ValueError("rewards must lie in [0, 1]")
    cols = assignment.client_for_channel
    chans = np.arange(state.num_channels)
    state.counts[cols, chans] += 1
    state.reward_sums[cols, chans] += r
    state.t += 1
    return state


def estimated_rewards(state: BanditState, tradeoff_v: float) -> np.ndarray:
    """Queue + V * (empirical mean + confidence bonus) per pair.

    Never-played pairs get the UNEXPLORED sentinel so any matcher must
    prefer them over known pairs.
    """
    if tradeoff_v < 0:
        raise ValueError("V must be >= 0")
    U = state.num_clients
    plays = state.client_plays()
    est = np.full((U, state.num_channels), UNEXPLORED)
    played = state.counts > 0
    if played.any():
        with np.errstate(invalid="ignore", divide="ignore"):
            means = np.where(played, state.reward_sums / state.counts, 0.0)
            bonus = np.sqrt(
                (U + 2.0) * np.log(np.maximum(plays, 1))[:, None] / state.counts
            )
        vals = state.queues[:, None] + tradeoff_v * (means + bonus)
        est[played] = vals[played]
    return est


def select_assignment(
    state: BanditState,
    config: SchedulerConfig,
    previous: Assignment | None,
    rng,
) -> Assignment:
    """Exploration draw, then max-min (om) or greedy-improve (gmba) match.

    Consumes rng in a fixed order: one uniform for the explore gate, then
    whatever the chosen branch needs.
    """
    threshold = 1.0 - np.exp(-state.t / config.explore_t0)
    if rng.random() >= threshold:
        return random_assignment(state.num_clients, state.num_channels, rng)
    est = estimated_rewards(state, config.tradeoff_v)
    if config.policy == "mamab-gmba":
        return gmba_step(est, previous, rng)
    return optimal_matching(est)


def baseline_random(num_clients: int, num_channels: int, rng) -> Assignment:
    return random_assignment(num_clients, num_channels, rng)


def baseline_round_robin(num_clients: int, num_channels: int, t: int) -> Assignment:
    """Fixed groups of consecutive clients served cyclically, wrapping
    past the last client when U is not a multiple of N."""
    if num_channels < 1 or num_clients < num_channels:
        raise ValueError("need 1 <= channels <= clients")
    groups = -(-num_clients // num_channels)
    g = t % groups
    cols = (g * num_channels + np.arange(num_channels)) % num_clients
    return Assignment(cols)


def baseline_single_ucb(state: BanditState, ucb_c: float, rng) -> Assignment:
    """Classic per-client UCB ignoring channels: top-N index clients get
    the channels in random order."""
    if ucb_c < 0:
        raise ValueError("ucb_c must be >= 0")
    plays = state.client_plays()
    index = np.full(state.num_clients, np.inf)
    seen = plays > 0
    if state.t > 0 and seen.any():
        sums = state.reward_sums.sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            means = np.where(seen, sums / np.maximum(plays, 1), 0.0)
            bonus = ucb_c * np.sqrt(2.0 * np.log(state.t) / np.maximum(plays, 1))
        index[seen] = (means + bonus)[seen]
    tie = rng.random(state.num_clients)
    ranked = np.lexsort((tie, index))[::-1]
    chosen = ranked[: state.num_channels]
    return Assignment(chosen[rng.permutation(state.num_channels)])
