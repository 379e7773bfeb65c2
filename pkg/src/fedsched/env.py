"""Wireless links and local-compute timing for one serving cell.

Links follow the urban-macro path-loss law 128.1 + 37.6 log10(d_km) with
unit-mean exponential fast fading redrawn every round. Interference on
each (client, channel, direction) is the square of a zero-mean Gaussian
draw whose variance is a fixed per-link parameter, so the variance is
also the mean interference power in watts. CPU speed is redrawn
uniformly per round within a per-client range.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matching import Assignment


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def path_loss_db(distance_m: float) -> float:
    """Distance-dependent loss in dB; distance must be positive."""
    if distance_m <= 0:
        raise ValueError("distance must be positive")
    return 128.1 + 37.6 * np.log10(distance_m / 1000.0)


def link_rate(
    bandwidth_hz: float,
    tx_power_w: float,
    gain: float,
    interference_w: float,
    noise_w: float,
) -> float:
    """Shannon rate in bit/s. Zero gain gives zero rate."""
    denom = interference_w + noise_w
    if denom <= 0:
        raise ValueError("interference + noise power must be positive")
    if bandwidth_hz <= 0 or tx_power_w < 0 or gain < 0 or interference_w < 0:
        raise ValueError("bandwidth must be positive, powers and gain >= 0")
    return bandwidth_hz * np.log2(1.0 + tx_power_w * gain / denom)


def transmission_delay(bits: float, rate_bps: float) -> float:
    """Seconds to push `bits` through a link; infinite when the rate is 0."""
    if bits < 0 or rate_bps < 0:
        raise ValueError("bits and rate must be >= 0")
    if rate_bps == 0.0:
        return np.inf
    return bits / rate_bps


def compute_delay(
    local_iters: int,
    num_samples: int,
    cycles_per_sample: float,
    cpu_hz: float,
) -> float:
    """Seconds of local training: iterations x samples x cycles / clock."""
    if cpu_hz <= 0:
        raise ValueError("cpu frequency must be positive")
    if local_iters < 0 or num_samples < 0 or cycles_per_sample < 0:
        raise ValueError("work terms must be >= 0")
    return local_iters * num_samples * cycles_per_sample / cpu_hz


@dataclass(frozen=True)
class Topology:
    """Base-station and client coordinates in meters."""

    bs_position: np.ndarray  # (2,)
    client_positions: np.ndarray  # (U, 2)

    def distances_m(self) -> np.ndarray:
        return np.linalg.norm(self.client_positions - self.bs_position, axis=1)


@dataclass(frozen=True)
class ChannelParams:
    """Static radio parameters for every (client, channel) link."""

    bandwidth_up_hz: float
    bandwidth_down_hz: float
    tx_power_client_dbm: float
    tx_power_bs_dbm: float
    noise_dbm: float
    interference_var_up_w: np.ndarray  # (U, N), mean interference power
    interference_var_down_w: np.ndarray  # (U, N)

    @property
    def num_clients(self) -> int:
        return self.interference_var_up_w.shape[0]

    @property
    def num_channels(self) -> int:
        return self.interference_var_up_w.shape[1]


@dataclass(frozen=True)
class ClientComputeProfile:
    cpu_hz_low: float
    cpu_hz_high: float
    cycles_per_sample: float
    num_samples: int


@dataclass(frozen=True)
class RoundEnvironment:
    """One round's random draws for every (client, channel) pair."""

    gains: np.ndarray  # (U, N), path-loss gain x exponential fading
    interference_up_w: np.ndarray  # (U, N)
    interference_down_w: np.ndarray  # (U, N)
    cpu_hz: np.ndarray  # (U,)


def sample_topology(num_clients: int, area_m: float, rng) -> Topology:
    """Clients uniform over an area_m x area_m square, base station centered."""
    if area_m <= 0:
        raise ValueError("area side must be positive")
    return Topology(
        bs_position=np.array([area_m / 2.0, area_m / 2.0]),
        client_positions=rng.uniform(0.0, area_m, size=(num_clients, 2)),
    )


def sample_interference(
    num_clients: int, num_channels: int, var_range_w: tuple, rng
) -> np.ndarray:
    """Log-uniform per-link interference variances in watts."""
    lo, hi = var_range_w
    if not (0 < lo <= hi):
        raise ValueError("variance range must satisfy 0 < lo <= hi")
    return np.exp(
        rng.uniform(np.log(lo), np.log(hi), size=(num_clients, num_channels))
    )


def sample_round(
    params: ChannelParams,
    topology: Topology,
    profiles: list[ClientComputeProfile],
    rng,
) -> RoundEnvironment:
    """Draw fading, interference, and CPU clocks for one round.

    Draw order is fixed (fading, uplink interference, downlink
    interference, clocks) so a given generator state always produces the
    same environment.
    """
    U, N = params.num_clients, params.num_channels
    pl_gain = 10.0 ** (-path_loss_db_vec(topology.distances_m()) / 10.0)
    gains = pl_gain[:, None] * rng.exponential(1.0, size=(U, N))
    i_up = rng.normal(0.0, np.sqrt(params.interference_var_up_w)) ** 2
    i_down = rng.normal(0.0, np.sqrt(params.interference_var_down_w)) ** 2
    lows = np.array([p.cpu_hz_low for p in profiles])
    highs = np.array([p.cpu_hz_high for p in profiles])
    cpu = rng.uniform(lows, highs)
    return RoundEnvironment(gains, i_up, i_down, cpu)


def path_loss_db_vec(distances_m: np.ndarray) -> np.ndarray:
    d = np.asarray(distances_m, dtype=np.float64)
    if (d <= 0).any():
        raise ValueError("distance must be positive")
    return 128.1 + 37.6 * np.log10(d / 1000.0)


@dataclass(frozen=True)
class RoundDelays:
    """Per-round delay outcome; unmatched clients hold NaN delays."""

    total_s: np.ndarray  # (U,)
    indicators: np.ndarray  # (U,) uint8, 1 = model arrived within d_max
    round_delay_s: float  # max over matched clients of min(delay, d_max)


def round_delays(
    env: RoundEnvironment,
    params: ChannelParams,
    profiles: list[ClientComputeProfile],
    assignment: Assignment,
    bits_down: float,
    bits_up: float,
    local_iters: int,
    d_max_s: float,
) -> RoundDelays:
    """Combine downlink, local-compute, and uplink delays for the matched
    clients, clipping each at d_max for the round delay."""
    if d_max_s <= 0:
        raise ValueError("d_max must be positive")
    U = params.num_clients
    noise_w = dbm_to_watts(params.noise_dbm)
    p_bs = dbm_to_watts(params.tx_power_bs_dbm)
    p_cl = dbm_to_watts(params.tx_power_client_dbm)
    total = np.full(U, np.nan)
    indicators = np.zeros(U, dtype=np.uint8)
    worst = 0.0
    for i, j in assignment.pairs():
        down = transmission_delay(
            bits_down,
            link_rate(
                params.bandwidth_down_hz,
                p_bs,
                env.gains[i, j],
                env.interference_down_w[i, j],
                noise_w,
            ),
        )
        up = transmission_delay(
            bits_up,
            link_rate(
                params.bandwidth_up_hz,
                p_cl,
                env.gains[i, j],
                env.interference_up_w[i, j],
                noise_w,
            ),
        )
        prof = profiles[i]
        local = compute_delay(
            local_iters, prof.num_samples, prof.cycles_per_sample, env.cpu_hz[i]
        )
        d = down + up + local
        total[i] = d
        indicators[i] = 1 if d <= d_max_s else 0
        worst = max(worst, min(d, d_max_s))
    return RoundDelays(total, indicators, worst)
