"""Per-label binary decomposition: one independent binary classifier per
vocabulary label, probabilities stitched back into a ProbMatrix.

A label column with a single class gets a constant-probability model equal
to its prevalence (0 or 1) instead of a fitted learner.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..data import FeatureMatrix, LabelMatrix, LabelVocabulary, ProbMatrix, spawn_seeds
from .forest import forest_fit
from .gbm import gbm_fit
from .lda import lda_fit
from .tree import tree_fit

LEARNER_KINDS = ("lda", "tree", "rf", "extra", "gbm")


@dataclass(frozen=True)
class LearnerSpec:
    """Names a classical learner and its hyperparameters."""

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in LEARNER_KINDS:
            raise ValueError(f"kind must be one of {LEARNER_KINDS}")
        object.__setattr__(self, "params", dict(self.params))


@dataclass(frozen=True)
class ConstantModel:
    probability: float


def _fit_binary(spec: LearnerSpec, X: np.ndarray, y: np.ndarray, seed: int):
    p = dict(spec.params)
    if spec.kind == "lda":
        return lda_fit(X, y, **p)
    if spec.kind == "tree":
        return tree_fit(X, y, criterion="gini", seed=seed, **p)
    if spec.kind in ("rf", "extra"):
        return forest_fit(X, y, variant=spec.kind, seed=seed, **p)
    return gbm_fit(X, y, loss="logistic", seed=seed, **p)


def _proba_positive(model, X: np.ndarray) -> np.ndarray:
    if isinstance(model, ConstantModel):
        return np.full(len(X), model.probability)
    if hasattr(model, "classes") and getattr(model, "classes", None) is not None:
        probs = model.predict_proba(X)
        classes = list(np.asarray(model.classes))
        return probs[:, classes.index(1)]
    return model.predict_proba(X)  # logistic gbm: already P(y=1)


@dataclass
class MultiOutputModel:
    spec: LearnerSpec
    vocab: LabelVocabulary
    models: list[Any]
    n_features: int


def fit_multioutput(
    spec: LearnerSpec, features: FeatureMatrix, truth: LabelMatrix, seed: int = 0
) -> MultiOutputModel:
    """One independent binary model per label."""
    if features.n_samples != truth.n_samples:
        raise ValueError("features and truth disagree on the number of samples")
    X = features.values
    seeds = spawn_seeds(seed, truth.n_labels)
    models: list[Any] = []
    for j in range(truth.n_labels):
        y = truth.values[:, j].astype(np.int64)
        if y.min() == y.max():
            models.append(ConstantModel(probability=float(y[0])))
        else:
            models.append(_fit_binary(spec, X, y, seeds[j]))
    return MultiOutputModel(
        spec=spec, vocab=truth.vocab, models=models, n_features=features.n_features
    )


def predict_multioutput(model: MultiOutputModel, features: FeatureMatrix) -> ProbMatrix:
    if features.n_features != model.n_features:
        raise ValueError(
            f"model was fit on {model.n_features} features, got {features.n_features}"
        )
    X = features.values
    cols = [np.clip(_proba_positive(m, X), 0.0, 1.0) for m in model.models]
    return ProbMatrix(values=np.column_stack(cols), vocab=model.vocab)
