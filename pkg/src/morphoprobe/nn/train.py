"""Minibatch training loop with combined early stopping.

Stopping rule: track the best dev loss and best dev accuracy seen so far;
when an epoch improves neither for `patience` consecutive epochs, stop.
The parameters restored afterwards belong to the best dev-accuracy epoch,
ties broken by lower dev loss at that epoch.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DataError
from .adam import adam_step, init_adam_state
from .functional import accuracy, nll_loss


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    batch_size: int = 128
    max_epochs: int = 200
    patience: int = 10
    seed: int = 0

    def __post_init__(self):
        if min(self.lr, self.beta1, self.beta2, self.epsilon) <= 0:
            raise DataError("optimizer constants must be positive")
        if self.batch_size < 1 or self.max_epochs < 1:
            raise DataError("batch_size and max_epochs must be >= 1")
        if not (0 < self.patience < self.max_epochs):
            raise DataError("need 0 < patience < max_epochs")


@dataclass
class TrainResult:
    epochs_run: int
    best_epoch: int
    best_dev_loss: float
    best_dev_acc: float
    dev_curve: list[tuple[float, float]] = field(default_factory=list)
    diverged: bool = False


def _take(inputs, idx: np.ndarray):
    if isinstance(inputs, tuple):
        return tuple(arr[idx] for arr in inputs)
    return inputs[idx]


def _n_examples(inputs) -> int:
    return (inputs[0] if isinstance(inputs, tuple) else inputs).shape[0]


def evaluate(model, inputs, labels: np.ndarray,
             batch_size: int = 512) -> tuple[float, float]:
    n = _n_examples(inputs)
    losses, accs, weights = [], [], []
    for start in range(0, n, batch_size):
        idx = np.arange(start, min(start + batch_size, n))
        log_probs = model.forward(_take(inputs, idx), train_mode=False)
        losses.append(nll_loss(log_probs, labels[idx]))
        accs.append(accuracy(log_probs, labels[idx]))
        weights.append(len(idx))
    w = np.asarray(weights, dtype=np.float64)
    return (float(np.average(losses, weights=w)),
            float(np.average(accs, weights=w)))


def fit(model, train_inputs, train_labels: np.ndarray, dev_inputs,
        dev_labels: np.ndarray, config: TrainConfig) -> TrainResult:
    """Train in place; model.params end up at the best dev-accuracy epoch."""
    rng = np.random.default_rng(np.random.PCG64(config.seed))
    state = init_adam_state(model.params)
    n = _n_examples(train_inputs)

    best_params = {k: v.copy() for k, v in model.params.items()}
    best_acc = -1.0
    best_loss = np.inf
    best_epoch = 0
    # Separate high-water marks drive the patience counter.
    seen_best_loss = np.inf
    seen_best_acc = -1.0
    stall = 0
    curve: list[tuple[float, float]] = []
    diverged = False
    epochs_run = 0

    for epoch in range(1, config.max_epochs + 1):
        epochs_run = epoch
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            loss, grads = model.loss_and_grads(
                _take(train_inputs, idx), train_labels[idx], train_mode=True,
                rng=rng)
            if not np.isfinite(loss) or any(
                    not np.all(np.isfinite(g)) for g in grads.values()):
                diverged = True
                break
            adam_step(model.params, grads, state, lr=config.lr,
                      beta1=config.beta1, beta2=config.beta2,
                      epsilon=config.epsilon)
        if diverged:
            break
        dev_loss, dev_acc = evaluate(model, dev_inputs, dev_labels)
        curve.append((dev_loss, dev_acc))
        if dev_acc > best_acc or (dev_acc == best_acc and dev_loss < best_loss):
            best_acc, best_loss, best_epoch = dev_acc, dev_loss, epoch
            best_params = {k: v.copy() for k, v in model.params.items()}
        improved = False
        if dev_loss < seen_best_loss:
            seen_best_loss = dev_loss
            improved = True
        if dev_acc > seen_best_acc:
            seen_best_acc = dev_acc
            improved = True
        stall = 0 if improved else stall + 1
        if stall >= config.patience:
            break

    for key, value in best_params.items():
        model.params[key][...] = value
    return TrainResult(epochs_run=epochs_run, best_epoch=best_epoch,
                       best_dev_loss=best_loss, best_dev_acc=best_acc,
                       dev_curve=curve, diverged=diverged)
