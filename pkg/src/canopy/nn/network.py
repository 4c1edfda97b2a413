"""Network assembly: a layer stack described by a NetworkSpec, with forward,
backward, and probability prediction through the head that matches the
configured loss.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data import make_rng
from .layers import Activation, BatchNorm, Dense, Dropout
from .losses import loss_and_grad, predict_head


@dataclass(frozen=True)
class NetworkSpec:
    """Architecture description; hidden blocks are
    dense -> [batch norm] -> activation -> [dropout], then a linear output
    layer whose head (sigmoid / softmax / softmax+sigmoid split) follows
    from the loss kind.
    """

    in_dim: int
    out_dim: int
    hidden: tuple[int, ...] = (64,)
    hidden_activation: str = "relu"
    batch_norm: bool = False
    dropout: float = 0.0
    loss: str = "bce"  # bce | softmax_ce | hybrid
    weather_count: int = 0

    def __post_init__(self):
        if self.in_dim < 1 or self.out_dim < 1:
            raise ValueError("in_dim and out_dim must be >= 1")
        if self.loss not in ("bce", "softmax_ce", "hybrid"):
            raise ValueError(f"unknown loss {self.loss!r}")
        if self.loss == "hybrid" and not 1 <= self.weather_count < self.out_dim:
            raise ValueError("hybrid loss requires 1 <= weather_count < out_dim")
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))


def _init_weight(rng, fan_in: int, fan_out: int, activation: str) -> np.ndarray:
    # uniform He-style scaling for relu, Glorot-style otherwise
    if activation == "relu":
        bound = np.sqrt(6.0 / fan_in)
    else:
        bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


class Network:
    """A trainable layer stack; single-writer on its own parameters."""

    def __init__(self, spec: NetworkSpec, layers: list):
        self.spec = spec
        self.layers = layers

    @classmethod
    def init(cls, spec: NetworkSpec, seed: int) -> "Network":
        rng = make_rng(seed)
        layers: list = []
        dim = spec.in_dim
        for h in spec.hidden:
            if spec.batch_norm:
                layers.append(
                    Dense(_init_weight(rng, dim, h, spec.hidden_activation), np.zeros(h))
                )
                layers.append(BatchNorm(h))
                layers.append(Activation(spec.hidden_activation))
            else:
                layers.append(
                    Dense(
                        _init_weight(rng, dim, h, spec.hidden_activation),
                        np.zeros(h),
                        activation=spec.hidden_activation,
                    )
                )
            if spec.dropout > 0.0:
                layers.append(Dropout(spec.dropout))
            dim = h
        layers.append(Dense(_init_weight(rng, dim, spec.out_dim, "identity"), np.zeros(spec.out_dim)))
        return cls(spec, layers)

    # -- parameter plumbing -------------------------------------------------

    @property
    def params(self) -> list[np.ndarray]:
        return [p for layer in self.layers for p in layer.params]

    @property
    def grads(self) -> list[np.ndarray]:
        return [g for layer in self.layers for g in layer.grads]

    def get_state(self) -> list[np.ndarray]:
        """Deep copy of all parameters plus BN running statistics."""
        state = [p.copy() for p in self.params]
        for layer in self.layers:
            if isinstance(layer, BatchNorm):
                state.append(layer.running_mean.copy())
                state.append(layer.running_var.copy())
        return state

    def set_state(self, state: list[np.ndarray]) -> None:
        n = len(self.params)
        for p, s in zip(self.params, state[:n]):
            p[...] = s
        rest = iter(state[n:])
        for layer in self.layers:
            if isinstance(layer, BatchNorm):
                layer.running_mean[...] = next(rest)
                layer.running_var[...] = next(rest)

    # -- computation ---------------------------------------------------------

    def forward(self, x: np.ndarray, train: bool, rng=None) -> np.ndarray:
        """Logits of the final linear layer."""
        out = np.asarray(x, dtype=np.float64)
        if out.ndim != 2 or out.shape[1] != self.spec.in_dim:
            raise ValueError(f"expected input of width {self.spec.in_dim}, got {out.shape}")
        for layer in self.layers:
            out = layer.forward(out, train=train, rng=rng)
        return out

    def backward(self, grad_logits: np.ndarray) -> np.ndarray:
        grad = grad_logits
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return grad

    def loss_and_gradients(
        self, x: np.ndarray, y: np.ndarray, train: bool = True, rng=None
    ) -> tuple[float, list[np.ndarray]]:
        """One forward/backward pass; returns (loss, flat gradient list)."""
        logits = self.forward(x, train=train, rng=rng)
        loss, dlogits = loss_and_grad(self.spec.loss, logits, y, self.spec.weather_count)
        self.backward(dlogits)
        return loss, self.grads

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        """Inference-mode forward through the head; rows of probabilities."""
        logits = self.forward(np.atleast_2d(x), train=False)
        return predict_head(self.spec.loss, logits, self.spec.weather_count)
