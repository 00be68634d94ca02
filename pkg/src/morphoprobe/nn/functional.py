"""Stateless numerical primitives shared by the models."""

from __future__ import annotations

import numpy as np


def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=axis, keepdims=True)


def log_softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = x - np.max(x, axis=axis, keepdims=True)
    return shifted - np.log(np.sum(np.exp(shifted), axis=axis, keepdims=True))


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def xavier_uniform(shape: tuple[int, ...], rng: np.random.Generator,
                   dtype=np.float32) -> np.ndarray:
    """Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out))."""
    fan_in, fan_out = shape[0], shape[-1]
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


def uniform_init(shape: tuple[int, ...], scale: float,
                 rng: np.random.Generator, dtype=np.float32) -> np.ndarray:
    return rng.uniform(-scale, scale, size=shape).astype(dtype)


def dropout_mask(shape: tuple[int, ...], p: float, rng: np.random.Generator,
                 dtype=np.float32) -> np.ndarray:
    """Inverted-dropout mask: 0 with probability p, else 1/(1-p)."""
    keep = (rng.random(size=shape) >= p).astype(dtype)
    return keep / np.asarray(1.0 - p, dtype=dtype)


def nll_loss(log_probs: np.ndarray, labels: np.ndarray) -> float:
    """Mean negative log-likelihood of integer labels."""
    batch = np.arange(log_probs.shape[0])
    return float(-np.mean(log_probs[batch, labels]))


def accuracy(log_probs: np.ndarray, labels: np.ndarray) -> float:
    return float(np.mean(np.argmax(log_probs, axis=-1) == labels))
