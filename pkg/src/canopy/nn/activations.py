"""Elementwise activations and their derivatives."""

from __future__ import annotations

import numpy as np


def sigmoid(x):
    """Numerically stable logistic function, output in (0, 1)."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def relu(x):
    return np.maximum(np.asarray(x, dtype=np.float64), 0.0)


def softmax(z):
    """Row-wise softmax with max-subtraction; rows sum to 1."""
    z = np.asarray(z, dtype=np.float64)
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def apply_activation(name: str, x: np.ndarray) -> np.ndarray:
    if name == "identity":
        return np.asarray(x, dtype=np.float64)
    if name == "relu":
        return relu(x)
    if name == "sigmoid":
        return sigmoid(x)
    raise ValueError(f"unknown activation {name!r}")


def activation_grad(name: str, out: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """Backprop through an activation given its forward OUTPUT."""
    if name == "identity":
        return grad
    if name == "relu":
        return grad * (out > 0)
    if name == "sigmoid":
        return grad * out * (1.0 - out)
    raise ValueError(f"unknown activation {name!r}")
