"""Versioned JSON checkpoints: layer shapes and parameters, batch-norm
running statistics, and the training metadata (seed, optimizer settings).
Floats round-trip exactly through JSON's repr encoding.
"""

from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .layers import Activation, BatchNorm, Dense, Dropout
from .network import Network, NetworkSpec

FORMAT = "canopy-nn-checkpoint"
VERSION = 1


def _layer_dict(layer) -> dict:
    if isinstance(layer, Dense):
        return {
            "kind": "dense",
            "activation": layer.activation,
            "shape": list(layer.W.shape),
            "W": layer.W.tolist(),
            "b": layer.b.tolist(),
        }
    if isinstance(layer, BatchNorm):
        return {
            "kind": "batch_norm",
            "epsilon": layer.epsilon,
            "momentum": layer.momentum,
            "gamma": layer.gamma.tolist(),
            "beta": layer.beta.tolist(),
            "running_mean": layer.running_mean.tolist(),
            "running_var": layer.running_var.tolist(),
        }
    if isinstance(layer, Activation):
        return {"kind": "activation", "name": layer.name}
    if isinstance(layer, Dropout):
        return {"kind": "dropout", "rate": layer.rate}
    raise TypeError(f"cannot serialize layer {type(layer).__name__}")


def _layer_from_dict(d: dict):
    kind = d["kind"]
    if kind == "dense":
        return Dense(np.array(d["W"]), np.array(d["b"]), activation=d["activation"])
    if kind == "batch_norm":
        layer = BatchNorm(len(d["gamma"]), epsilon=d["epsilon"], momentum=d["momentum"])
        layer.gamma[...] = d["gamma"]
        layer.beta[...] = d["beta"]
        layer.running_mean[...] = d["running_mean"]
        layer.running_var[...] = d["running_var"]
        return layer
    if kind == "activation":
        return Activation(d["name"])
    if kind == "dropout":
        return Dropout(d["rate"])
    raise ValueError(f"unknown layer kind {kind!r}")


def save_checkpoint(path: str | Path, network: Network, meta: dict | None = None) -> None:
    doc = {
        "format": FORMAT,
        "version": VERSION,
        "spec": asdict(network.spec),
        "layers": [_layer_dict(layer) for layer in network.layers],
        "meta": dict(meta or {}),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_checkpoint(path: str | Path) -> tuple[Network, dict]:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != FORMAT:
        raise ValueError(f"{path}: not a {FORMAT} file")
    if doc.get("version") != VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {doc.get('version')}")
    spec_d = dict(doc["spec"])
    spec_d["hidden"] = tuple(spec_d["hidden"])
    spec = NetworkSpec(**spec_d)
    layers = [_layer_from_dict(d) for d in doc["layers"]]
    return Network(spec, layers), doc.get("meta", {})
