"""Weighted majority-vote ensembling and integrated stacking: out-of-fold
feature assembly plus a dense meta-learner trained on the concatenated
base-model probability vectors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .data import LabelMatrix, LabelVocabulary, ProbMatrix
from .nn import Network, NetworkSpec, TrainConfig, TrainResult, train


def weighted_vote(preds: Sequence[LabelMatrix], weights: Sequence[int]) -> LabelMatrix:
    """Per-label vote v = sum_j w_j y_j; output 1 iff v > (sum_j w_j) / 2.

    The inequality is strict, so an even total weight can tie every model
    out and produce an all-negative row. Weights are positive integers.
    """
    if len(preds) == 0:
        raise ValueError("weighted_vote needs at least one model")
    if len(weights) != len(preds):
        raise ValueError(f"{len(preds)} models but {len(weights)} weights")
    w = [int(x) for x in weights]
    if any(x < 1 for x in w):
        raise ValueError("weights must be integers >= 1")
    first = preds[0]
    for m in preds[1:]:
        if m.values.shape != first.values.shape:
            raise ValueError("all prediction matrices must share one shape")
        if m.vocab != first.vocab:
            raise ValueError("all prediction matrices must share one vocabulary")
    votes = np.zeros(first.values.shape, dtype=np.int64)
    for weight, m in zip(w, preds):
        votes += weight * m.values.astype(np.int64)
    threshold = sum(w) / 2.0
    return LabelMatrix(values=(votes > threshold).astype(np.int8), vocab=first.vocab)


@dataclass(frozen=True)
class StackedFeatures:
    """n_samples x (n_models * n_labels) base-model probabilities in
    model-major column order (model 0's labels first)."""

    values: np.ndarray
    n_models: int
    vocab: LabelVocabulary

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[1] != self.n_models * len(self.vocab):
            raise ValueError(
                f"expected {self.n_models * len(self.vocab)} columns, got {v.shape}"
            )
        if v.size and (not np.isfinite(v).all() or v.min() < 0.0 or v.max() > 1.0):
            raise ValueError("stacked features must lie in [0, 1]")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]


def assemble_oof(
    n_samples: int,
    per_model_pieces: Sequence[Sequence[tuple[np.ndarray, ProbMatrix]]],
) -> StackedFeatures:
    """Stitch per-fold holdout predictions into one stacked feature matrix.

    ``per_model_pieces[j]`` lists (row indices, ProbMatrix) pairs for model
    j, one pair per fold; together they must cover every sample exactly
    once, so row i holds only out-of-fold predictions for sample i. The
    result is invariant to the order the pieces are given in.
    """
    if not per_model_pieces:
        raise ValueError("need at least one model")
    if any(len(pieces) == 0 for pieces in per_model_pieces):
        raise ValueError("every model needs at least one prediction piece")
    vocab = per_model_pieces[0][0][1].vocab
    blocks = []
    for j, pieces in enumerate(per_model_pieces):
        covered = np.zeros(n_samples, dtype=np.int64)
        block = np.zeros((n_samples, len(vocab)))
        for indices, probs in pieces:
            if probs.vocab != vocab:
                raise ValueError(f"model {j}: vocabulary mismatch across pieces")
            idx = np.asarray(indices, dtype=np.int64)
            if idx.size != probs.n_samples:
                raise ValueError(f"model {j}: {idx.size} indices for {probs.n_samples} rows")
            if idx.size and (idx.min() < 0 or idx.max() >= n_samples):
                raise ValueError(f"model {j}: sample index out of range")
            covered[idx] += 1
            block[idx] = probs.values
        if (covered > 1).any():
            dup = int(np.nonzero(covered > 1)[0][0])
            raise ValueError(f"model {j}: sample {dup} covered more than once")
        if (covered == 0).any():
            missing = int(np.nonzero(covered == 0)[0][0])
            raise ValueError(f"model {j}: sample {missing} has no out-of-fold prediction")
        blocks.append(block)
    return StackedFeatures(
        values=np.concatenate(blocks, axis=1), n_models=len(per_model_pieces), vocab=vocab
    )


@dataclass(frozen=True)
class MetaLearnerConfig:
    """Meta-learner architecture and training settings for stacking."""

    hidden_units: tuple[int, ...] = (64,)
    batch_norm: bool = True
    dropout: float = 0.25
    loss: str = "bce"
    weather_count: int = 0
    train: TrainConfig = field(default_factory=TrainConfig)


@dataclass
class StackModel:
    """Trained meta-learner bound to its vocabulary and model count."""

    network: Network
    n_models: int
    vocab: LabelVocabulary
    history: dict[str, list[float]]
    best_epoch: int

    def predict(self, features: StackedFeatures | np.ndarray) -> ProbMatrix:
        x = features.values if isinstance(features, StackedFeatures) else np.asarray(features)
        probs = self.network.predict_proba(x)
        return ProbMatrix(values=np.clip(probs, 0.0, 1.0), vocab=self.vocab)


def stack_train(
    features: StackedFeatures,
    truth: LabelMatrix,
    config: MetaLearnerConfig,
    seed: int,
    val_fraction: float = 0.2,
    val_indices=None,
) -> StackModel:
    """Train the integrated-stacking meta-learner on out-of-fold features.

    The validation split driving early stopping and best-F2 checkpointing
    is either the explicit ``val_indices`` (e.g. one CV fold) or, by
    default, the trailing ``val_fraction`` of a seeded shuffle.
    """
    if features.n_samples != truth.n_samples:
        raise ValueError("features and truth disagree on the number of samples")
    if features.vocab != truth.vocab:
        raise ValueError("features and truth use different vocabularies")
    if not 0.0 < val_fraction < 1.0:
        raise ValueError("val_fraction must lie in (0, 1)")

    from .data import make_rng

    n = features.n_samples
    if val_indices is not None:
        va = np.asarray(val_indices, dtype=np.int64)
        if va.size == 0 or va.size >= n:
            raise ValueError("val_indices must be a proper non-empty subset")
        mask = np.ones(n, dtype=bool)
        mask[va] = False
        tr = np.nonzero(mask)[0]
    else:
        n_val = max(1, int(round(n * val_fraction)))
        if n_val >= n:
            raise ValueError("not enough samples to carve out a validation split")
        order = make_rng(seed).permutation(n)
        tr, va = order[:-n_val], order[-n_val:]

    spec = NetworkSpec(
        in_dim=features.values.shape[1],
        out_dim=truth.n_labels,
        hidden=config.hidden_units,
        batch_norm=config.batch_norm,
        dropout=config.dropout,
        loss=config.loss,
        weather_count=config.weather_count,
    )
    network = Network.init(spec, seed=seed)
    y = truth.values.astype(np.float64)
    result: TrainResult = train(
        network,
        features.values[tr],
        y[tr],
        features.values[va],
        y[va],
        config.train,
    )
    return StackModel(
        network=result.network,
        n_models=features.n_models,
        vocab=truth.vocab,
        history=result.history,
        best_epoch=result.best_epoch,
    )
