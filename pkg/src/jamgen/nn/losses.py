"""Loss functions, each with a value-and-gradient variant."""

from __future__ import annotations

import numpy as np

from .layers import sigmoid


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def cross_entropy_and_grad(logits: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy over the batch from raw logits (log-sum-exp form)."""
    labels = np.asarray(labels)
    n, m = logits.shape
    if labels.min() < 0 or labels.max() >= m:
        raise ValueError(f"label out of range [0, {m})")
    ls = log_softmax(logits)
    loss = -ls[np.arange(n), labels].mean()
    grad = np.exp(ls)
    grad[np.arange(n), labels] -= 1.0
    return loss, grad / n


def cross_entropy(logits: np.ndarray, labels: np.ndarray) -> float:
    return cross_entropy_and_grad(logits, labels)[0]


def mse_and_grad(pred: np.ndarray, target: np.ndarray):
    if pred.shape != target.shape:
        raise ValueError(f"mse shape mismatch {pred.shape} vs {target.shape}")
    diff = pred - target
    return float(np.mean(diff * diff)), (2.0 / diff.size) * diff


def mse(pred: np.ndarray, target: np.ndarray) -> float:
    return mse_and_grad(pred, target)[0]


def bce_logits_and_grad(logits: np.ndarray, targets: np.ndarray):
    """Mean binary cross-entropy from logits: max(z,0) - z*t + log1p(exp(-|z|))."""
    z, t = logits, np.asarray(targets, dtype=logits.dtype)
    loss = np.maximum(z, 0) - z * t + np.log1p(np.exp(-np.abs(z)))
    grad = (sigmoid(z) - t) / z.size
    return float(loss.mean()), grad


def bce_logits(logits: np.ndarray, targets: np.ndarray) -> float:
    return bce_logits_and_grad(logits, targets)[0]
