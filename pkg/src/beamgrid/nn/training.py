"""Mini-batch training with a fresh seeded shuffle of the training split at
the start of every epoch.

The per-epoch reshuffle is the load-bearing behavior here: shuffling only once
before the first epoch (shuffle_each_epoch=False) reproduces the degenerate
fixed-batch regime and demonstrably changes the training history.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .network import Network, predict_logits

SPLIT_TRAIN, SPLIT_VAL, SPLIT_TEST = 0, 1, 2


class EmptyDataset(Exception):
    """No training samples."""


class DivergenceDetected(Exception):
    """Loss became non-finite; carries the epoch index."""

    def __init__(self, epoch: int, loss: float):
        super().__init__(f"non-finite loss {loss} at epoch {epoch}")
        self.epoch = epoch


@dataclass
class Dataset:
    """Feature/label arrays with split tags (0 train, 1 val, 2 test) and a
    per-sample line-of-sight flag."""

    features: np.ndarray
    labels: np.ndarray
    splits: np.ndarray
    los: np.ndarray
    n_classes: int
    coherence: np.ndarray | None = None

    def __post_init__(self):
        if len(self.features) != len(self.labels):
            raise ValueError("features and labels must have the same length")
        if np.any(self.labels < 0) or np.any(self.labels >= self.n_classes):
            raise ValueError("labels out of range")

    def indices(self, split: int) -> np.ndarray:
        return np.flatnonzero(self.splits == split)

    @property
    def n_samples(self) -> int:
        return len(self.labels)


@dataclass
class TrainConfig:
    epochs: int = 10
    batch_size: int = 32
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    momentum: float = 0.9
    seed: int = 0
    shuffle_each_epoch: bool = True


@dataclass
class TrainHistory:
    """Per-epoch train loss and validation Top-1 accuracy, plus the logged
    training-split permutation used in each epoch."""

    train_loss: list[float] = field(default_factory=list)
    val_accuracy: list[float] = field(default_factory=list)
    permutations: list[np.ndarray] = field(default_factory=list)

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(np.asarray(self.train_loss, dtype=np.float64).tobytes())
        h.update(np.asarray(self.val_accuracy, dtype=np.float64).tobytes())
        for perm in self.permutations:
            h.update(np.asarray(perm, dtype=np.int64).tobytes())
        return h.hexdigest()


class SGD:
    def __init__(self, learning_rate: float, momentum: float = 0.9):
        self.learning_rate = learning_rate
        self.momentum = momentum
        self._velocity: dict = {}

    def step(self, named_params):
        for key, param, grad in named_params:
            v = self._velocity.get(key)
            if v is None:
                v = np.zeros_like(param)
            v = self.momentum * v - self.learning_rate * grad
            self._velocity[key] = v
            param += v


class Adam:
    def __init__(self, learning_rate: float, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self._m: dict = {}
        self._v: dict = {}
        self._t = 0

    def step(self, named_params):
        self._t += 1
        b1t = 1.0 - self.beta1 ** self._t
        b2t = 1.0 - self.beta2 ** self._t
        for key, param, grad in named_params:
            m = self._m.get(key, 0.0)
            v = self._v.get(key, 0.0)
            m = self.beta1 * m + (1.0 - self.beta1) * grad
            v = self.beta2 * v + (1.0 - self.beta2) * grad * grad
            self._m[key] = m
            self._v[key] = v
            param -= self.learning_rate * (m / b1t) / (np.sqrt(v / b2t) + self.eps)


def make_optimizer(config: TrainConfig):
    if config.optimizer == "adam":
        return Adam(config.learning_rate)
    if config.optimizer == "sgd":
        return SGD(config.learning_rate, config.momentum)
    raise ValueError(f"unknown optimizer {config.optimizer!r}")


def top1_accuracy(net: Network, features: np.ndarray, labels: np.ndarray) -> float:
    if len(labels) == 0:
        return math.nan
    logits = predict_logits(net, features)
    return float(np.mean(np.argmax(logits, axis=1) == labels))


def train(net: Network, dataset: Dataset, config: TrainConfig) -> TrainHistory:
    """Run config.epochs of mini-batch training; deterministic per seed.

    Raises EmptyDataset when the train split is empty and DivergenceDetected
    (with the epoch index) when the loss stops being finite.
    """
    train_idx = dataset.indices(SPLIT_TRAIN)
    if train_idx.size == 0:
        raise EmptyDataset("training split is empty")
    val_idx = dataset.indices(SPLIT_VAL)

    rng = np.random.default_rng(int(config.seed) % (1 << 64))
    optimizer = make_optimizer(config)
    history = TrainHistory()

    first_perm: np.ndarray | None = None
    for epoch in range(config.epochs):
        if config.shuffle_each_epoch or first_perm is None:
            perm = rng.permutation(train_idx.size)
            if first_perm is None:
                first_perm = perm
        else:
            perm = first_perm
        history.permutations.append(perm.copy())

        order = train_idx[perm]
        loss_sum = 0.0
        for start in range(0, order.size, config.batch_size):
            batch = order[start:start + config.batch_size]
            logits = net.forward(dataset.features[batch])
            loss = net.loss(logits, dataset.labels[batch])
            if not math.isfinite(loss):
                raise DivergenceDetected(epoch, loss)
            loss_sum += loss * batch.size
            net.backward(net.loss_backward())
            optimizer.step(net.named_parameters())

        history.train_loss.append(loss_sum / order.size)
        history.val_accuracy.append(
            top1_accuracy(net, dataset.features[val_idx], dataset.labels[val_idx]))
    return history
