"""Synthetic non-IID classification task and the softmax-regression
federated pipeline: clipped local SGD, per-upload Gaussian perturbation,
and size-weighted aggregation over the clients that arrived in time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Model:
    """Multinomial logistic regression parameters."""

    weights: np.ndarray  # (M, d)
    bias: np.ndarray  # (M,)

    @property
    def num_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def num_features(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True)
class TrainConfig:
    local_iters: int = 5
    learning_rate: float = 0.1
    clip_bound: float = 1.0
    batch_size: int = 10

    def __post_init__(self):
        if self.local_iters < 1 or self.batch_size < 1:
            raise ValueError("local iterations and batch size must be >= 1")
        # Zero learning rate and zero clip bound are allowed: both make
        # local_train a no-op, which the tests rely on as a fixed point.
        if self.learning_rate < 0 or self.clip_bound < 0:
            raise ValueError("learning rate and clip bound must be >= 0")


@dataclass(frozen=True)
class Partition:
    """Per-client datasets plus the label statistics the privacy and
    scheduling layers need."""

    features: list  # U arrays of shape (n_i, d)
    labels: list  # U arrays of shape (n_i,)
    class_ratios: np.ndarray  # (U, M) empirical per-client label ratios
    global_ratios: np.ndarray  # (M,) empirical union label ratios
    sizes: np.ndarray  # (U,) int64

    @property
    def num_clients(self) -> int:
        return len(self.features)


def class_means(num_classes: int, num_features: int, scale: float) -> np.ndarray:
    """Blob centers: scaled one-hot corners of the feature space."""
    if num_features < num_classes:
        raise ValueError("need at least as many features as classes")
    means = np.zeros((num_classes, num_features))
    means[np.arange(num_classes), np.arange(num_classes)] = scale
    return means


def partition_synthetic(
    num_clients: int,
    num_classes: int,
    num_features: int,
    sizes,
    dominant_fraction,
    rng,
    blob_scale: float = 3.0,
) -> Partition:
    """Draw each client's labels from a mixture: `dominant_fraction` mass
    on its own class (client i owns class i mod M), the rest uniform over
    all classes. Features follow the shared blob model.

    Both `sizes` and `dominant_fraction` broadcast to one value per client.
    """
    if num_classes < 2:
        raise ValueError("need at least two classes")
    sizes = np.broadcast_to(np.asarray(sizes, dtype=np.int64), (num_clients,)).copy()
    if (sizes < 1).any():
        raise ValueError("every client needs at least one sample")
    gamma = np.broadcast_to(
        np.asarray(dominant_fraction, dtype=np.float64), (num_clients,)
    )
    if (gamma < 0).any() or (gamma > 1).any():
        raise ValueError("dominant fraction must lie in [0, 1]")
    means = class_means(num_classes, num_features, blob_scale)
    feats, labs = [], []
    counts = np.zeros((num_clients, num_classes), dtype=np.int64)
    for i in range(num_clients):
        probs = np.full(num_classes, (1.0 - gamma[i]) / num_classes)
        probs[i % num_classes] += gamma[i]
        y = rng.choice(num_classes, size=sizes[i], p=probs)
        x = means[y] + rng.normal(size=(sizes[i], num_features))
        feats.append(x)
        labs.append(y)
        counts[i] = np.bincount(y, minlength=num_classes)
    ratios = counts / sizes[:, None]
    global_ratios = counts.sum(axis=0) / sizes.sum()
    return Partition(feats, labs, ratios, global_ratios, sizes)


def make_test_set(
    num_classes: int, num_features: int, size: int, rng, blob_scale: float = 3.0
):
    """Balanced-draw test set from the same blob model."""
    y = rng.choice(num_classes, size=size)
    means = class_means(num_classes, num_features, blob_scale)
    return means[y] + rng.normal(size=(size, num_features)), y


def init_model(num_classes: int, num_features: int, rng) -> Model:
    return Model(
        0.01 * rng.normal(size=(num_classes, num_features)),
        np.zeros(num_classes),
    )


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def local_train(model: Model, features, labels, config: TrainConfig, rng) -> Model:
    """Clipped mini-batch SGD from the broadcast model.

    Per-sample gradients are clipped to norm <= clip_bound jointly over
    weights and bias, then averaged; a zero clip bound therefore leaves
    the model unchanged.
    """
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    n = x.shape[0]
    if config.batch_size > n:
        raise ValueError("batch size exceeds local dataset")
    w = model.weights.copy()
    b = model.bias.copy()
    for _ in range(config.local_iters):
        take = rng.choice(n, size=config.batch_size, replace=False)
        xb, yb = x[take], y[take]
        probs = _softmax(xb @ w.T + b)
        g = probs
        g[np.arange(config.batch_size), yb] -= 1.0  # d loss / d logits
        # ||per-sample grad||^2 = ||g||^2 * (||x||^2 + 1), bias included
        norms = np.sqrt(
            (g**2).sum(axis=1) * ((xb**2).sum(axis=1) + 1.0)
        )
        factor = np.minimum(1.0, config.clip_bound / np.maximum(norms, 1e-300))
        gc = g * factor[:, None]
        w -= config.learning_rate * (gc.T @ xb) / config.batch_size
        b -= config.learning_rate * gc.mean(axis=0)
    return Model(w, b)


def perturb(model: Model, sigma: float, rng) -> Model:
    """One Gaussian-mechanism draw over every parameter."""
    if sigma < 0:
        raise ValueError("noise scale must be >= 0")
    if sigma == 0:
        return Model(model.weights.copy(), model.bias.copy())
    return Model(
        model.weights + rng.normal(0.0, sigma, size=model.weights.shape),
        model.bias + rng.normal(0.0, sigma, size=model.bias.shape),
    )


def aggregate(models: list, weights) -> Model:
    """Convex combination of models; weights are normalized internally."""
    if not models:
        raise ValueError("nothing to aggregate")
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (len(models),) or (w < 0).any() or w.sum() <= 0:
        raise ValueError("weights must be nonnegative with positive sum")
    w = w / w.sum()
    return Model(
        sum(wi * m.weights for wi, m in zip(w, models)),
        sum(wi * m.bias for wi, m in zip(w, models)),
    )


def evaluate(model: Model, features, labels) -> tuple[float, float]:
    """(accuracy, mean cross-entropy) on the given set."""
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    probs = _softmax(x @ model.weights.T + model.bias)
    acc = float(np.mean(probs.argmax(axis=1) == y))
    loss = float(-np.mean(np.log(np.maximum(probs[np.arange(len(y)), y], 1e-300))))
    return acc, loss


def model_size_bits(model: Model) -> int:
    """Upload payload: 32 bits per parameter."""
    return 32 * (model.weights.size + model.bias.size)
