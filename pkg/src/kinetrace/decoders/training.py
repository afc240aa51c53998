"""Shared minibatch training loop: Adam on MSE with early stopping.

Training stops once the validation loss has gone ``patience`` epochs
without improving on its best value, and the best-epoch parameter
snapshot (weights and batchnorm running statistics) is restored.
Everything stochastic (shuffling, dropout) draws from one generator
seeded by the config, so identical inputs give bit-identical models.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ArgumentError, DivergenceError
from ..nn import AdamState, adam_step, mse_loss
from .networks import NeuralDecoder


@dataclass(frozen=True)
class TrainConfig:
    max_epochs: int = 100
    batch_size: int = 64
    patience: int = 5
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.patience < 1:
            raise ArgumentError("patience must be >= 1")
        if self.batch_size < 2:
            raise ArgumentError("batch_size must be >= 2 (batchnorm)")
        if self.max_epochs < 1:
            raise ArgumentError("max_epochs must be >= 1")


@dataclass(frozen=True)
class TrainReport:
    train_losses: tuple[float, ...]
    val_losses: tuple[float, ...]
    stopped_epoch: int   # 1-based epoch after which training stopped
    best_epoch: int      # 1-based epoch whose weights were restored

    @property
    def best_val_loss(self) -> float:
        return self.val_losses[self.best_epoch - 1]


class EarlyStopping:
    """Counts epochs since the validation loss last improved (strictly)."""

    def __init__(self, patience: int):
        self.patience = patience
        self.best_loss = math.inf
        self.best_epoch = 0
        self.epochs_since_best = 0

    def update(self, epoch: int, val_loss: float) -> bool:
        if val_loss < self.best_loss:
            self.best_loss = val_loss
            self.best_epoch = epoch
            self.epochs_since_best = 0
            return True
        self.epochs_since_best += 1
        return False

    @property
    def should_stop(self) -> bool:
        return self.epochs_since_best >= self.patience


def _batches(n_rows: int, batch_size: int, rng: np.random.Generator):
    perm = rng.permutation(n_rows)
    start = 0
    while start < n_rows:
        stop = start + batch_size
        # Fold a size-1 remainder into the final batch: batchnorm cannot
        # compute train-mode statistics on a single row.
        if n_rows - stop == 1:
            stop = n_rows
        yield perm[start:stop]
        start = stop


def _resolve_net(model):
    return model.net if isinstance(model, NeuralDecoder) else model


def train(model, train_data, val_data, config: TrainConfig):
    """Train in place; returns (model, TrainReport)."""
    x_train, y_train = train_data
    x_val, y_val = val_data
    if len(x_train) == 0 or len(x_val) == 0:
        raise ArgumentError("train and validation data must be non-empty")
    net = _resolve_net(model)
    rng = np.random.default_rng(config.seed)
    net.set_rng(rng)
    adam = AdamState(config.learning_rate, config.beta1, config.beta2, config.eps)
    stopper = EarlyStopping(config.patience)
    best_snapshot = {k: v.copy() for k, v in net.parameters().items()}
    train_losses: list[float] = []
    val_losses: list[float] = []
    stopped_epoch = 0

    for epoch in range(1, config.max_epochs + 1):
        seen = 0
        loss_sum = 0.0
        for batch in _batches(len(x_train), config.batch_size, rng):
            pred = net.forward(x_train[batch], train=True)
            loss, dpred = mse_loss(pred, y_train[batch])
            if not math.isfinite(loss):
                raise DivergenceError(f"train loss {loss} at epoch {epoch}", epoch)
            net.backward(dpred)
            adam_step(net.parameters(), net.gradients(), adam)
            loss_sum += loss * len(batch)
            seen += len(batch)
        train_losses.append(loss_sum / seen)

        val_pred = net.forward(x_val, train=False)
        val_loss, _ = mse_loss(val_pred, y_val)
        if not math.isfinite(val_loss):
            raise DivergenceError(f"validation loss {val_loss} at epoch {epoch}", epoch)
        val_losses.append(val_loss)

        if stopper.update(epoch, val_loss):
            best_snapshot = {k: v.copy() for k, v in net.parameters().items()}
        stopped_epoch = epoch
        if stopper.should_stop:
            break

    net.load_parameters(best_snapshot)
    report = TrainReport(
        train_losses=tuple(train_losses),
        val_losses=tuple(val_losses),
        stopped_epoch=stopped_epoch,
        best_epoch=stopper.best_epoch,
    )
    return model, report


def predict(model, features: np.ndarray) -> np.ndarray:
    """Eval-mode forward pass: dropout off, batchnorm running stats."""
    net = _resolve_net(model)
    return net.forward(np.asarray(features, dtype=np.float64), train=False)
