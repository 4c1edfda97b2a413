"""Stratified k-fold assignment for multi-label data, plus cross-validated
evaluation of classical learners.

The splitter is the iterative-stratification scheme: repeatedly take the
label with the fewest remaining positives and deal its samples to the fold
that most wants that label, so every fold ends up with approximately the
global positive proportion for every label.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import DataError, FeatureMatrix, LabelMatrix, make_rng, spawn_seeds
from .metrics import MetricsReport, report
from .thresholds import apply_thresholds


@dataclass(frozen=True)
class FoldAssignment:
    """Per-sample fold index in [0, k); folds partition the samples."""

    fold_of: np.ndarray
    k: int

    def __post_init__(self):
        f = np.asarray(self.fold_of, dtype=np.int64)
        if f.ndim != 1:
            raise ValueError("fold_of must be 1-D")
        if self.k < 2:
            raise ValueError("k must be >= 2")
        if f.size and (f.min() < 0 or f.max() >= self.k):
            raise ValueError("fold indices must lie in [0, k)")
        counts = np.bincount(f, minlength=self.k)
        if (counts == 0).any():
            raise ValueError("every fold must be non-empty")
        f.setflags(write=False)
        object.__setattr__(self, "fold_of", f)

    @property
    def n_samples(self) -> int:
        return self.fold_of.shape[0]

    def fold_indices(self, fold: int) -> np.ndarray:
        return np.nonzero(self.fold_of == fold)[0]

    def train_indices(self, fold: int) -> np.ndarray:
        return np.nonzero(self.fold_of != fold)[0]


def stratified_kfold(truth: LabelMatrix, k: int, seed: int) -> FoldAssignment:
    """Iterative stratification; deterministic for a fixed seed.

    Processing order: the label with the fewest remaining positives first;
    each of its unassigned samples goes to the fold with the greatest
    remaining demand for that label, ties broken by the greatest overall
    remaining capacity and then by a PRNG draw.
    """
    n = truth.n_samples
    if k < 2:
        raise ValueError("k must be >= 2")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of samples ({n})")
    rng = make_rng(seed)
    y = truth.as_bool()
    # a label above 50% prevalence is easier to balance through its rare
    # complement (rare labels are processed first and spread near-exactly),
    # so stratify those complements as extra virtual labels
    dense = np.nonzero(y.mean(axis=0) > 0.5)[0]
    if dense.size:
        y = np.concatenate([y, ~y[:, dense]], axis=1)
    n_labels = y.shape[1]

    fold_of = np.full(n, -1, dtype=np.int64)
    # demand[l][f]: how many positives of label l fold f still wants
    demand = np.tile(y.sum(axis=0, dtype=np.float64)[:, None] / k, (1, k))
    capacity = np.full(k, n / k)
    unassigned = np.ones(n, dtype=bool)

    def pick_fold(label: int | None) -> int:
        # folds at their size quota stop receiving until every fold is full,
        # keeping sizes within one sample so label proportions track counts
        cand = np.arange(k)
        open_folds = cand[capacity[cand] > 0]
        if open_folds.size:
            cand = open_folds
        if label is not None:
            d = demand[label]
            cand = cand[d[cand] == d[cand].max()]
        if len(cand) > 1:
            c = capacity[cand]
            cand = cand[c == c.max()]
        if len(cand) > 1:
            cand = cand[[rng.integers(len(cand))]]
        return int(cand[0])

    labels_per_sample = y.sum(axis=1)
    while True:
        remaining_pos = (y & unassigned[:, None]).sum(axis=0)
        active = np.nonzero(remaining_pos > 0)[0]
        if active.size == 0:
            break
        label = int(active[np.argmin(remaining_pos[active])])
        members = np.nonzero(y[:, label] & unassigned)[0]
        # most-constrained samples first: their many demand counters are
        # still informative early in the sweep
        members = members[np.argsort(-labels_per_sample[members], kind="stable")]
        for i in members:
            f = pick_fold(label)
            fold_of[i] = f
            unassigned[i] = False
            demand[y[i], f] -= 1.0
            capacity[f] -= 1.0

    for i in np.nonzero(unassigned)[0]:  # samples with no positive labels
        f = pick_fold(None)
        fold_of[i] = f
        capacity[f] -= 1.0

    return FoldAssignment(fold_of=fold_of, k=k)


def save_folds(path: str | Path, ids: Sequence[str], folds: FoldAssignment) -> None:
    """CSV `image_name,fold`."""
    if len(ids) != folds.n_samples:
        raise ValueError("ids length must match the number of samples")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("image_name,fold\n")
        for sample_id, f in zip(ids, folds.fold_of):
            fh.write(f"{sample_id},{int(f)}\n")


def load_folds(path: str | Path) -> tuple[list[str], FoldAssignment]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0][:2]] != ["image_name", "fold"]:
        raise DataError(f"{path}: expected header 'image_name,fold'")
    ids: list[str] = []
    fold_of: list[int] = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 2:
            raise DataError(f"{path}: row {lineno}: expected 2 columns")
        try:
            fold = int(row[1])
        except ValueError:
            raise DataError(f"{path}: row {lineno}: non-integer fold") from None
        ids.append(row[0].strip())
        fold_of.append(fold)
    if not ids:
        raise DataError(f"{path}: no fold rows")
    try:
        return ids, FoldAssignment(fold_of=np.array(fold_of), k=max(fold_of) + 1)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None


@dataclass(frozen=True)
class CvResult:
    """Per-fold scoreboards, their arithmetic-mean Total row, and the
    out-of-fold probabilities stitched back into dataset order."""

    folds: FoldAssignment
    fold_reports: tuple[MetricsReport, ...]
    average_total: tuple[float, float, float, float, float]
    oof_probs: np.ndarray


def cv_evaluate(
    learner,
    features: FeatureMatrix,
    truth: LabelMatrix,
    k: int,
    seed: int,
    decision_threshold: float = 0.5,
) -> CvResult:
    """Train on k-1 folds, score the holdout, average the fold Totals.

    ``learner`` is a classical LearnerSpec. Each fold trains an independent
    multi-output model on its own derived seed; a training failure is
    re-raised with the fold index attached. Holdout probabilities are
    binarized at ``decision_threshold`` for the fold scoreboards.
    """
    from .classical import LearnerSpec, fit_multioutput, predict_multioutput

    if not isinstance(learner, LearnerSpec):
        raise TypeError("learner must be a canopy.classical.LearnerSpec")
    if features.n_samples != truth.n_samples:
        raise ValueError("features and truth disagree on the number of samples")

    split_seed, *fold_seeds = spawn_seeds(seed, k + 1)
    folds = stratified_kfold(truth, k, split_seed)
    X = features.values
    reports: list[MetricsReport] = []
    oof = np.zeros((truth.n_samples, truth.n_labels))
    for f in range(k):
        tr, va = folds.train_indices(f), folds.fold_indices(f)
        try:
            model = fit_multioutput(
                learner,
                FeatureMatrix(values=X[tr]),
                LabelMatrix(values=truth.values[tr], vocab=truth.vocab),
                seed=fold_seeds[f],
            )
        except Exception as exc:
            raise RuntimeError(f"fold {f}: learner training failed: {exc}") from exc
        probs = predict_multioutput(model, FeatureMatrix(values=X[va]))
        oof[va] = probs.values
        pred = apply_thresholds(probs, np.full(truth.n_labels, decision_threshold))
        reports.append(
            report(pred, LabelMatrix(values=truth.values[va], vocab=truth.vocab))
        )

    totals = np.array([r.total for r in reports])
    average_total = tuple(float(x) for x in totals.mean(axis=0))
    return CvResult(
        folds=folds,
        fold_reports=tuple(reports),
        average_total=average_total,
        oof_probs=oof,
    )
