"""Experiment driver tying the pieces together.

One experiment = one scheduling policy run for T rounds over either the
physical wireless environment (with federated training of the softmax
model) or a stationary oracle reward matrix (scheduling only, used for
regret studies). Every random draw derives from the config seed, so a
(config, seed) pair reproduces output files byte for byte.
"""

from __future__ import annotations

import csv
import dataclasses
import itertools
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import bandit, env, fl, privacy
from ._core import BACKEND
from .matching import Assignment, brute_force_optimal, min_matched_edge

log = logging.getLogger(__name__)

ENV_MODES = ("physical", "oracle-stationary")
ORACLE_NOISES = ("bernoulli", "gaussian")
DP_PRESETS = ("uniform", "tiered")
DATA_PROFILES = ("mixed", "uniform")

# Spawn-key domains under the config seed; 9 is the base of the
# per-(round, client) training streams.
_SETUP, _ENV, _POLICY = 0, 1, 2
_FL_DOMAIN = 9


@dataclass
class ExperimentConfig:
    """Everything a run depends on; JSON-serializable field types only."""

    num_clients: int = 10
    num_channels: int = 4
    rounds: int = 2000
    seed: int = 0
    policy: str = "mamab-om"
    env_mode: str = "physical"
    # scheduler
    d_max_s: float = 5.0
    tradeoff_v: float = 10.0
    explore_t0: float = 100.0
    ucb_c: float = 0.1
    # privacy
    dp_preset: str = "uniform"
    epsilon: float = 25.0
    delta: float = 1e-3
    smoothness: float = 1.0
    # learning task
    train_model: bool = True
    local_iters: int = 5
    learning_rate: float = 0.1
    clip_bound: float = 1.0
    batch_size: int = 10
    num_classes: int = 4
    num_features: int = 8
    client_data_size: int = 100
    dominant_fraction: float = 0.8
    # "mixed" gives the heavy_clients slowest clients heavy_size_factor x
    # the data at heavy_dominant_fraction skew (the rest train on
    # client_data_size samples at light_dominant_fraction); their larger
    # divergence bound then grants them a smaller participation floor.
    # "uniform" applies client_data_size and dominant_fraction everywhere.
    data_profile: str = "mixed"
    heavy_clients: int = 3
    heavy_size_factor: float = 4.5
    heavy_dominant_fraction: float = 0.95
    light_dominant_fraction: float = 0.5
    blob_scale: float = 3.0
    test_size: int = 1000
    # physical radio
    area_m: float = 400.0
    bandwidth_hz: float = 15e3
    tx_power_dbm: float = 23.0
    noise_dbm: float = -107.0
    cycles_per_sample: float = 40.0
    interference_var_low_w: float = 1e-14
    interference_var_high_w: float = 1.6e-13
    # oracle mode
    oracle_mu: list | None = None
    oracle_noise: str = "bernoulli"
    oracle_noise_std: float = 0.1
    betas_override: list | None = None

    def __post_init__(self):
        if self.num_channels < 1 or self.num_clients < self.num_channels:
            raise ValueError("need 1 <= channels <= clients")
        if self.rounds < 1:
            raise ValueError("need at least one round")
        if self.policy not in bandit.POLICIES:
            raise ValueError(f"unknown policy {self.policy!r}")
        if self.env_mode not in ENV_MODES:
            raise ValueError(f"unknown env_mode {self.env_mode!r}")
        if self.oracle_noise not in ORACLE_NOISES:
            raise ValueError(f"unknown oracle_noise {self.oracle_noise!r}")
        if self.dp_preset not in DP_PRESETS:
            raise ValueError(f"unknown dp_preset {self.dp_preset!r}")
        if self.data_profile not in DATA_PROFILES:
            raise ValueError(f"unknown data_profile {self.data_profile!r}")
        if not 0 <= self.heavy_clients <= self.num_clients:
            raise ValueError("heavy_clients must lie in [0, num_clients]")
        if self.heavy_size_factor <= 0:
            raise ValueError("heavy_size_factor must be positive")
        for g in (
            self.dominant_fraction,
            self.heavy_dominant_fraction,
            self.light_dominant_fraction,
        ):
            if not 0 <= g <= 1:
                raise ValueError("class skew fractions must lie in [0, 1]")
        if self.d_max_s <= 0:
            raise ValueError("d_max must be positive")
        if self.oracle_mu is not None:
            m = np.asarray(self.oracle_mu, dtype=np.float64)
            if m.shape != (self.num_clients, self.num_channels):
                raise ValueError("oracle_mu shape must be clients x channels")
            if (m < 0).any() or (m > 1).any() or np.isnan(m).any():
                raise ValueError("oracle_mu entries must lie in [0, 1]")
        if self.betas_override is not None:
            b = np.asarray(self.betas_override, dtype=np.float64)
            if b.shape != (self.num_clients,) or (b < 0).any() or (b > 1).any():
                raise ValueError("betas_override must be U fractions in [0, 1]")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class RoundMetrics:
    """End-of-round snapshot; queue values are after the round's update."""

    t: int
    delay_s: float
    cum_delay_s: float
    min_reward: float
    accuracy: float
    loss: float
    indicators: np.ndarray
    queues: np.ndarray
    sel_frac: np.ndarray
    eps_bar: np.ndarray
    assignment: Assignment


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    metrics: list
    betas: np.ndarray
    oracle_mu: np.ndarray | None


@dataclass
class RegretReport:
    optimal_value: float
    delta_min: float
    delta_max: float
    queue_max: float
    matching_eps: float
    per_round: np.ndarray
    cumulative: np.ndarray
    bound: float | None


def planted_matrix(num_clients: int, num_channels: int, rng) -> np.ndarray:
    """Stationary reward means with one clearly optimal assignment:
    client j owns channel j, every alternative edge is far weaker."""
    m = rng.uniform(0.02, 0.10, size=(num_clients, num_channels))
    m[np.arange(num_channels), np.arange(num_channels)] = np.linspace(
        0.85, 0.95, num_channels
    )
    return m


def default_profiles(
    num_clients: int, cycles_per_sample: float, sizes
) -> list:
    """Heterogeneous CPU ranges: client i draws its clock uniformly from
    [10(i+1)+10, 100(i+1)+30] kHz, so later clients are roughly 10x
    faster than client 0."""
    out = []
    for i in range(num_clients):
        out.append(
            env.ClientComputeProfile(
                cpu_hz_low=(10.0 * (i + 1) + 10.0) * 1e3,
                cpu_hz_high=(100.0 * (i + 1) + 30.0) * 1e3,
                cycles_per_sample=cycles_per_sample,
                num_samples=int(sizes[i]),
            )
        )
    return out


def client_epsilons(config: ExperimentConfig) -> np.ndarray:
    if config.dp_preset == "tiered":
        return privacy.tiered_epsilons(config.num_clients)
    return np.full(config.num_clients, config.epsilon)


def client_sizes(config: ExperimentConfig) -> np.ndarray:
    """Per-client dataset sizes under config.data_profile."""
    sizes = np.full(config.num_clients, config.client_data_size, dtype=np.int64)
    if config.data_profile == "mixed":
        sizes[: config.heavy_clients] = int(
            round(config.client_data_size * config.heavy_size_factor)
        )
    return sizes


def client_skews(config: ExperimentConfig) -> np.ndarray:
    """Per-client dominant-class mass under config.data_profile."""
    if config.data_profile == "uniform":
        return np.full(config.num_clients, config.dominant_fraction)
    g = np.full(config.num_clients, config.light_dominant_fraction)
    g[: config.heavy_clients] = config.heavy_dominant_fraction
    return g


def _fl_rng(seed: int, t: int, i: int):
    return np.random.default_rng(
        np.random.SeedSequence(seed, spawn_key=(_FL_DOMAIN, t, i))
    )


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Simulate one policy for config.rounds rounds.

    Round order: select assignment, realize the environment (train and
    upload in physical mode), observe rewards, advance privacy ledger,
    queues, and bandit statistics.
    """
    U, N, T = config.num_clients, config.num_channels, config.rounds
    ss = np.random.SeedSequence(config.seed)
    kids = ss.spawn(3)
    rng_setup = np.random.default_rng(kids[_SETUP])
    rng_env = np.random.default_rng(kids[_ENV])
    rng_policy = np.random.default_rng(kids[_POLICY])

    sched = bandit.SchedulerConfig(
        policy=config.policy,
        tradeoff_v=config.tradeoff_v,
        explore_t0=config.explore_t0,
        ucb_c=config.ucb_c,
    )
    state = bandit.BanditState(U, N)

    physical = config.env_mode == "physical"
    oracle_mu = None
    epsilons = client_epsilons(config)
    deltas = np.full(U, config.delta)
    ledger = privacy.PrivacyLedger.fresh(epsilons, deltas)

    if physical:
        topology = env.sample_topology(U, config.area_m, rng_setup)
        var_range = (config.interference_var_low_w, config.interference_var_high_w)
        params = env.ChannelParams(
            bandwidth_up_hz=config.bandwidth_hz,
            bandwidth_down_hz=config.bandwidth_hz,
            tx_power_client_dbm=config.tx_power_dbm,
            tx_power_bs_dbm=config.tx_power_dbm,
            noise_dbm=config.noise_dbm,
            interference_var_up_w=env.sample_interference(U, N, var_range, rng_setup),
            interference_var_down_w=env.sample_interference(
                U, N, var_range, rng_setup
            ),
        )
        partition = fl.partition_synthetic(
            U,
            config.num_classes,
            config.num_features,
            client_sizes(config),
            client_skews(config),
            rng_setup,
            config.blob_scale,
        )
        test_x, test_y = fl.make_test_set(
            config.num_classes,
            config.num_features,
            config.test_size,
            rng_setup,
            config.blob_scale,
        )
        model = fl.init_model(config.num_classes, config.num_features, rng_setup)
        profiles = default_profiles(U, config.cycles_per_sample, partition.sizes)
        train_cfg = fl.TrainConfig(
            local_iters=config.local_iters,
            learning_rate=config.learning_rate,
            clip_bound=config.clip_bound,
            batch_size=config.batch_size,
        )
        sigmas = np.array(
            [
                privacy.noise_std(
                    float(epsilons[i]),
                    config.delta,
                    config.learning_rate,
                    config.clip_bound,
                    config.local_iters,
                    config.batch_size,
                )
                for i in range(U)
            ]
        )
        if config.betas_override is not None:
            betas = np.asarray(config.betas_override, dtype=np.float64)
        else:
            thetas = np.array(
                [
                    privacy.divergence_bound(
                        privacy.DivergenceInputs(
                            local_iters=config.local_iters,
                            learning_rate=config.learning_rate,
                            clip_bound=config.clip_bound,
                            smoothness=config.smoothness,
                            class_ratios=partition.class_ratios[i],
                            global_ratios=partition.global_ratios,
                            sample_ratio=config.batch_size / partition.sizes[i],
                            batch_size=config.batch_size,
                            epsilon=float(epsilons[i]),
                            delta=config.delta,
                        )
                    )
                    for i in range(U)
                ]
            )
            betas = privacy.participating_ratios(thetas, N)
        bits = float(fl.model_size_bits(model))
    else:
        if config.oracle_mu is not None:
            oracle_mu = np.asarray(config.oracle_mu, dtype=np.float64)
        else:
            oracle_mu = planted_matrix(U, N, rng_setup)
        betas = (
            np.asarray(config.betas_override, dtype=np.float64)
            if config.betas_override is not None
            else np.zeros(U)
        )

    if betas.sum() > N + 1e-9:
        log.warning(
            "required selection fractions sum to %.3f > %d channels; "
            "queues cannot all be stable",
            betas.sum(),
            N,
        )

    chans = np.arange(N)
    metrics = []
    prev: Assignment | None = None
    cum_delay = 0.0
    sel_counts = np.zeros(U)

    for t in range(T):
        if config.policy == "random":
            a = bandit.baseline_random(U, N, rng_policy)
        elif config.policy == "round-robin":
            a = bandit.baseline_round_robin(U, N, t)
        elif config.policy == "single-ucb":
            a = bandit.baseline_single_ucb(state, config.ucb_c, rng_policy)
        else:
            a = bandit.select_assignment(state, sched, prev, rng_policy)
        cols = a.client_for_channel

        if physical:
            envr = env.sample_round(params, topology, profiles, rng_env)
            uploads = {}
            if config.train_model:
                for i in cols:
                    crng = _fl_rng(config.seed, t, int(i))
                    local = fl.local_train(
                        model,
                        partition.features[i],
                        partition.labels[i],
                        train_cfg,
                        crng,
                    )
                    uploads[int(i)] = fl.perturb(local, float(sigmas[i]), crng)
            rd = env.round_delays(
                envr, params, profiles, a, bits, bits, config.local_iters,
                config.d_max_s,
            )
            indicators = rd.indicators
            rewards = np.array(
                [bandit.reward(float(rd.total_s[i]), config.d_max_s) for i in cols]
            )
            if config.train_model:
                arrived = [int(i) for i in cols if indicators[i]]
                if arrived:
                    model = fl.aggregate(
                        [uploads[i] for i in arrived],
                        partition.sizes[arrived],
                    )
                accuracy, loss = fl.evaluate(model, test_x, test_y)
            else:
                accuracy, loss = float("nan"), float("nan")
            delay = rd.round_delay_s
            cum_delay += delay
        else:
            mu = oracle_mu[cols, chans]
            if config.oracle_noise == "bernoulli":
                rewards = (rng_env.random(N) < mu).astype(np.float64)
            else:
                rewards = np.clip(
                    rng_env.normal(mu, config.oracle_noise_std), 0.0, 1.0
                )
            indicators = np.zeros(U, dtype=np.uint8)
            indicators[cols] = 1
            delay = float("nan")
            cum_delay = float("nan")
            accuracy, loss = float("nan"), float("nan")

        privacy.record_upload(ledger, indicators)
        bandit.update_queues(state, betas, indicators)
        bandit.observe(state, a, rewards)
        sel_counts += indicators
        metrics.append(
            RoundMetrics(
                t=t,
                delay_s=delay,
                cum_delay_s=cum_delay,
                min_reward=float(rewards.min()),
                accuracy=accuracy,
                loss=loss,
                indicators=indicators.copy(),
                queues=state.queues.copy(),
                sel_frac=sel_counts / (t + 1),
                eps_bar=ledger.leakage.copy(),
                assignment=a,
            )
        )
        prev = a

    return ExperimentResult(config, metrics, betas, oracle_mu)


def theorem_regret_bound(
    delta_min: float,
    delta_max: float,
    queue_max: float,
    matching_eps: float,
    tradeoff_v: float,
    num_clients: int,
    num_channels: int,
    horizon: int,
) -> float | None:
    """Logarithmic regret bound for the queue-aware matcher; None when
    the gap condition delta_min > queue_max + matching_eps fails."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    gap = delta_min - queue_max - matching_eps
    if gap <= 0:
        return None
    U, N, V = num_clients, num_channels, tradeoff_v
    return delta_max * (
        4.0 * V * V * N * (U + 2.0) * np.log(horizon) / (gap * gap)
        + (2.0 * U + 1.0) * N
    )


def compute_regret(
    result: ExperimentResult, matching_eps: float = 0.0
) -> RegretReport:
    """Per-round and cumulative max-min regret against the true means."""
    if result.oracle_mu is None:
        raise ValueError("regret needs an oracle-stationary run")
    mu = result.oracle_mu
    _, mu_star = brute_force_optimal(mu)
    # Gap statistics over every alternative assignment.
    U, N = mu.shape
    rows = mu.tolist()
    best_other = -np.inf
    worst = np.inf
    hits = 0
    for perm in itertools.permutations(range(U), N):
        v = min(rows[perm[j]][j] for j in range(N))
        worst = min(worst, v)
        if v == mu_star:
            hits += 1
        elif v > best_other:
            best_other = v
    delta_min = 0.0 if hits > 1 else mu_star - best_other
    delta_max = mu_star - worst
    queue_max = max(float(m.queues.max()) for m in result.metrics)
    per_round = np.array(
        [mu_star - min_matched_edge(mu, m.assignment) for m in result.metrics]
    )
    bound = theorem_regret_bound(
        delta_min,
        delta_max,
        queue_max,
        matching_eps,
        result.config.tradeoff_v,
        U,
        N,
        len(result.metrics),
    )
    return RegretReport(
        optimal_value=float(mu_star),
        delta_min=float(delta_min),
        delta_max=float(delta_max),
        queue_max=queue_max,
        matching_eps=matching_eps,
        per_round=per_round,
        cumulative=np.cumsum(per_round),
        bound=bound,
    )


def _fmt(x) -> str:
    return repr(float(x))


def emit(
    result: ExperimentResult,
    out_dir: str,
    regret: RegretReport | None = None,
    fmt: str = "both",
) -> list:
    """Write metrics.csv and/or summary.json under out_dir.

    The CSV has 6 + 3U columns: t, delay_s, cum_delay_s, min_reward,
    accuracy, loss, then per-client queue lengths, cumulative selection
    fractions, and composed leakage.
    """
    if fmt not in ("csv", "json", "both"):
        raise ValueError("fmt must be csv, json, or both")
    os.makedirs(out_dir, exist_ok=True)
    U = result.config.num_clients
    written = []
    if fmt in ("csv", "both"):
        path = os.path.join(out_dir, "metrics.csv")
        header = (
            ["t", "delay_s", "cum_delay_s", "min_reward", "accuracy", "loss"]
            + [f"q_{i + 1}" for i in range(U)]
            + [f"sel_frac_{i + 1}" for i in range(U)]
            + [f"eps_bar_{i + 1}" for i in range(U)]
        )
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for m in result.metrics:
                w.writerow(
                    [m.t]
                    + [_fmt(v) for v in (m.delay_s, m.cum_delay_s, m.min_reward,
                                         m.accuracy, m.loss)]
                    + [_fmt(v) for v in m.queues]
                    + [_fmt(v) for v in m.sel_frac]
                    + [_fmt(v) for v in m.eps_bar]
                )
        written.append(path)
    if fmt in ("json", "both"):
        path = os.path.join(out_dir, "summary.json")
        last = result.metrics[-1]
        summary = {
            "config": result.config.to_dict(),
            "backend": BACKEND,
            "betas": [float(b) for b in result.betas],
            "final": {
                "rounds": len(result.metrics),
                "cum_delay_s": last.cum_delay_s,
                "accuracy": last.accuracy,
                "loss": last.loss,
                "queues": [float(q) for q in last.queues],
                "sel_frac": [float(s) for s in last.sel_frac],
                "eps_bar": [float(e) for e in last.eps_bar],
            },
            "regret": None,
        }
        if regret is not None:
            summary["regret"] = {
                "optimal_value": regret.optimal_value,
                "delta_min": regret.delta_min,
                "delta_max": regret.delta_max,
                "queue_max": regret.queue_max,
                "matching_eps": regret.matching_eps,
                "cumulative": float(regret.cumulative[-1]),
                "bound": regret.bound,
            }
        with open(path, "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
        written.append(path)
    return written


def run_many(configs: list, jobs: int | None = None) -> list:
    """Run independent experiments concurrently (one process each)."""
    if jobs is None:
        jobs = min(len(configs), os.cpu_count() or 1)
    if jobs <= 1 or len(configs) <= 1:
        return [run_experiment(c) for c in configs]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run_experiment, configs))
