"""Local differential privacy accounting for uploaded model updates.

Each upload is protected by one Gaussian-mechanism perturbation sized
for the clipped-SGD sensitivity 2*eta*C*tau/b; repeated uploads compose
under the advanced composition rule. The divergence bound measures how
far a client's noisy local update can drift from the ideal central
update, and turns into the minimum selection fraction each client needs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

THETA_FLOOR = 1e-12


def _check_eps_delta(epsilon: float, delta: float) -> None:
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")


def noise_std(
    epsilon: float,
    delta: float,
    learning_rate: float,
    clip_bound: float,
    local_iters: int,
    batch_size: int,
) -> float:
    """Gaussian noise scale for one upload of a clipped local update."""
    _check_eps_delta(epsilon, delta)
    if learning_rate <= 0 or clip_bound < 0:
        raise ValueError("learning rate must be positive, clip bound >= 0")
    if local_iters < 1 or batch_size < 1:
        raise ValueError("local iterations and batch size must be >= 1")
    sensitivity = 2.0 * learning_rate * clip_bound * local_iters / batch_size
    return sensitivity * np.sqrt(2.0 * np.log(1.25 / delta)) / epsilon


def compose_leakage(epsilon: float, delta: float, uploads: int) -> float:
    """Cumulative privacy loss after `uploads` perturbed uploads."""
    _check_eps_delta(epsilon, delta)
    if uploads < 0:
        raise ValueError("upload count must be >= 0")
    if uploads == 0:
        return 0.0
    return float(
        np.sqrt(uploads * np.log(1.0 / delta) / np.log(2.0 / delta)) * epsilon
    )


@dataclass(frozen=True)
class DivergenceInputs:
    """Everything the per-client divergence bound depends on."""

    local_iters: int
    learning_rate: float
    clip_bound: float
    smoothness: float  # largest loss-curvature eigenvalue
    class_ratios: np.ndarray  # client's own label distribution
    global_ratios: np.ndarray  # population label distribution
    sample_ratio: float  # batch / local dataset size
    batch_size: int
    epsilon: float
    delta: float


def divergence_bound(inputs: DivergenceInputs) -> float:
    """Worst-case drift of a client's noisy update from the central one.

    Grows with label skew and with the DP noise scale; the geometric
    factor compounds both over the local iterations.
    """
    _check_eps_delta(inputs.epsilon, inputs.delta)
    if inputs.local_iters < 1 or inputs.batch_size < 1:
        raise ValueError("local iterations and batch size must be >= 1")
    if inputs.learning_rate <= 0 or inputs.clip_bound < 0 or inputs.smoothness < 0:
        raise ValueError("learning rate positive; clip and smoothness >= 0")
    if inputs.learning_rate * inputs.smoothness >= 1.0:
        # The bound's derivation assumes the local loss is smooth enough
        # for the SGD recursion to contract.
        raise ValueError("learning rate x smoothness must be < 1")
    if not 0 < inputs.sample_ratio <= 1:
        raise ValueError("sample ratio must lie in (0, 1]")
    p = np.asarray(inputs.class_ratios, dtype=np.float64)
    q = np.asarray(inputs.global_ratios, dtype=np.float64)
    if p.shape != q.shape or (p < 0).any() or (q < 0).any():
        raise ValueError("class ratio vectors must match and be >= 0")
    if abs(p.sum() - 1.0) > 1e-9 or abs(q.sum() - 1.0) > 1e-9:
        raise ValueError("class ratios must each sum to 1")
    step = inputs.learning_rate * inputs.clip_bound
    growth = 1.0 + inputs.learning_rate * inputs.smoothness
    geom = float(np.sum(growth ** np.arange(inputs.local_iters)))
    data_term = step * float(np.abs(p - q).sum())
    noise_term = (
        4.0
        * step
        * inputs.sample_ratio
        * np.sqrt(2.0 * inputs.local_iters * np.log(1.0 / inputs.delta))
        / (np.sqrt(np.pi) * inputs.batch_size * inputs.epsilon)
    )
    return geom * (data_term + noise_term)


def participating_ratios(thetas, num_channels: int) -> np.ndarray:
    """Minimum per-client selection fractions, proportional to 1/theta.

    Clients whose updates drift less (small theta) need to participate
    more. Ratios are capped at 1; thetas are floored to avoid division
    blowup.
    """
    if num_channels < 1:
        raise ValueError("need at least one channel")
    th = np.maximum(np.asarray(thetas, dtype=np.float64), THETA_FLOOR)
    if th.ndim != 1 or th.shape[0] < 1:
        raise ValueError("thetas must be a nonempty vector")
    inv = 1.0 / th
    return np.minimum(num_channels * inv / inv.sum(), 1.0)


def tiered_epsilons(num_clients: int) -> np.ndarray:
    """Per-client budgets rising in steps of 5 every two clients."""
    i = np.arange(num_clients)
    return 5.0 * (i // 2 + 3)


@dataclass
class PrivacyLedger:
    """Running upload counts and composed leakage per client."""

    epsilons: np.ndarray
    deltas: np.ndarray
    uploads: np.ndarray  # int64 counts
    leakage: np.ndarray  # composed epsilon per client

    @classmethod
    def fresh(cls, epsilons, deltas) -> "PrivacyLedger":
        eps = np.asarray(epsilons, dtype=np.float64)
        del_ = np.asarray(deltas, dtype=np.float64)
        if eps.shape != del_.shape or eps.ndim != 1:
            raise ValueError("epsilons and deltas must be matching vectors")
        for e, d in zip(eps, del_):
            _check_eps_delta(e, d)
        n = eps.shape[0]
        return cls(eps, del_, np.zeros(n, dtype=np.int64), np.zeros(n))


def record_upload(ledger: PrivacyLedger, indicators) -> PrivacyLedger:
    """Count this round's successful uploads and refresh composed leakage."""
    ind = np.asarray(indicators)
    if ind.shape != ledger.uploads.shape:
        raise ValueError("indicator vector has the wrong length")
    ledger.uploads += ind.astype(np.int64)
    for i in np.nonzero(ind)[0]:
        ledger.leakage[i] = compose_leakage(
            float(ledger.epsilons[i]), float(ledger.deltas[i]), int(ledger.uploads[i])
        )
    return ledger
