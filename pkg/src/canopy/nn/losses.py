"""Losses on raw logits, paired with the matching output head.

Three kinds:

* ``bce`` - sigmoid head, mean binary cross-entropy over all label cells;
* ``softmax_ce`` - softmax head, mean categorical cross-entropy per sample;
* ``hybrid`` - softmax cross-entropy over the first ``weather_count``
  columns (mutually exclusive labels, truth one-hot there) plus mean BCE
  over the remaining columns; the two terms add.

Probabilities are clamped to [1e-12, 1 - 1e-12] inside the logs only, so
the returned gradients are those of the unclamped loss.
"""

from __future__ import annotations

import numpy as np

from .activations import sigmoid, softmax

CLAMP = 1e-12


def _clamped_log(p: np.ndarray) -> np.ndarray:
    return np.log(np.clip(p, CLAMP, 1.0 - CLAMP))


def _bce(logits: np.ndarray, truth: np.ndarray) -> tuple[float, np.ndarray]:
    p = sigmoid(logits)
    n_cells = truth.size
    loss = -(truth * _clamped_log(p) + (1.0 - truth) * _clamped_log(1.0 - p)).sum() / n_cells
    return float(loss), (p - truth) / n_cells


def _softmax_ce(logits: np.ndarray, truth: np.ndarray) -> tuple[float, np.ndarray]:
    rows = truth.sum(axis=1)
    if not np.allclose(rows, 1.0):
        raise ValueError("softmax cross-entropy requires one-hot truth rows")
    p = softmax(logits)
    n = truth.shape[0]
    loss = -(truth * _clamped_log(p)).sum() / n
    return float(loss), (p - truth) / n


def loss_and_grad(
    kind: str, logits: np.ndarray, truth: np.ndarray, weather_count: int = 0
) -> tuple[float, np.ndarray]:
    """Return (scalar loss, dloss/dlogits) for a batch."""
    logits = np.asarray(logits, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if logits.shape != truth.shape:
        raise ValueError(f"logits {logits.shape} and truth {truth.shape} differ")
    if kind == "bce":
        return _bce(logits, truth)
    if kind == "softmax_ce":
        return _softmax_ce(logits, truth)
    if kind == "hybrid":
        if weather_count <= 0:
            raise ValueError("hybrid loss requires weather_count >= 1")
        if weather_count >= logits.shape[1]:
            raise ValueError("hybrid loss needs at least one non-weather column")
        wl, wg = _softmax_ce(logits[:, :weather_count], truth[:, :weather_count])
        gl, gg = _bce(logits[:, weather_count:], truth[:, weather_count:])
        grad = np.concatenate([wg, gg], axis=1)
        return wl + gl, grad
    raise ValueError(f"unknown loss kind {kind!r}")


def predict_head(kind: str, logits: np.ndarray, weather_count: int = 0) -> np.ndarray:
    """Map logits to probabilities with the head matching the loss kind."""
    logits = np.asarray(logits, dtype=np.float64)
    if kind == "bce":
        return sigmoid(logits)
    if kind == "softmax_ce":
        return softmax(logits)
    if kind == "hybrid":
        if weather_count <= 0:
            raise ValueError("hybrid head requires weather_count >= 1")
        return np.concatenate(
            [softmax(logits[:, :weather_count]), sigmoid(logits[:, weather_count:])],
            axis=1,
        )
    raise ValueError(f"unknown loss kind {kind!r}")
