"""Confusion counting and precision/recall/F-beta/accuracy under four
averaging schemes (macro, weighted, micro, sample), plus scoreboard-style
report generation.

Conventions, applied uniformly:

* any precision/recall/F ratio with a zero denominator evaluates to 0;
* per-class accuracy is (TP + TN) / n_samples for that class;
* the report's Total row uses sample averaging for P/R/F1/F2 and
  exact-match (subset) accuracy. Mean-of-F over samples is NOT the same
  number as F applied to mean-P and mean-R, so the Total F cells are not
  recomputable from the Total P/R cells; per-class rows are.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .data import FLOAT_FMT, LabelMatrix

SCHEMES = ("macro", "weighted", "micro", "sample")


def _as_binary(x) -> np.ndarray:
    """Accept a LabelMatrix or a 2-D 0/1 array; return a bool array."""
    if isinstance(x, LabelMatrix):
        return x.as_bool()
    a = np.asarray(x)
    if a.ndim != 2:
        raise ValueError("expected a 2-D binary matrix")
    if a.dtype != bool and not np.isin(a, (0, 1)).all():
        raise ValueError("matrix entries must be 0 or 1")
    return a.astype(bool)


def _check_pair(pred, truth) -> tuple[np.ndarray, np.ndarray]:
    p, t = _as_binary(pred), _as_binary(truth)
    if p.shape != t.shape:
        raise ValueError(f"shape mismatch: pred {p.shape} vs truth {t.shape}")
    if (
        isinstance(pred, LabelMatrix)
        and isinstance(truth, LabelMatrix)
        and pred.vocab != truth.vocab
    ):
        raise ValueError("pred and truth use different vocabularies")
    return p, t


@dataclass(frozen=True)
class ConfusionTable:
    """TP/FP/TN/FN count vectors, per-class or per-sample orientation."""

    orientation: str  # "per_class" | "per_sample"
    tp: np.ndarray
    fp: np.ndarray
    tn: np.ndarray
    fn: np.ndarray


def confusion(pred, truth, orientation: str = "per_class") -> ConfusionTable:
    """Exact integer confusion counts along the requested orientation."""
    p, t = _check_pair(pred, truth)
    if orientation == "per_class":
        axis = 0
    elif orientation == "per_sample":
        axis = 1
    else:
        raise ValueError("orientation must be 'per_class' or 'per_sample'")
    tp = (p & t).sum(axis=axis)
    fp = (p & ~t).sum(axis=axis)
    fn = (~p & t).sum(axis=axis)
    tn = (~p & ~t).sum(axis=axis)
    return ConfusionTable(orientation=orientation, tp=tp, fp=fp, tn=tn, fn=fn)


def fbeta(precision: float, recall: float, beta: float) -> float:
    """F-beta = (1 + b^2) p r / (b^2 p + r); 0 whenever the denominator is 0."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    b2 = beta * beta
    den = b2 * precision + recall
    if den == 0.0:
        return 0.0
    return (1.0 + b2) * precision * recall / den


def _ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    """Elementwise num/den with the 0-denominator-evaluates-to-0 rule."""
    num = np.asarray(num, dtype=np.float64)
    den = np.asarray(den, dtype=np.float64)
    return np.divide(num, den, out=np.zeros_like(num), where=den > 0)


def _fbeta_vec(p: np.ndarray, r: np.ndarray, beta: float) -> np.ndarray:
    b2 = beta * beta
    return _ratio((1.0 + b2) * p * r, b2 * p + r)


def _prf_from_counts(tp, fp, fn, beta: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    p = _ratio(tp, tp + fp)
    r = _ratio(tp, tp + fn)
    return p, r, _fbeta_vec(p, r, beta)


def _seq_mean(values: np.ndarray) -> float:
    # left-to-right accumulation: bit-identical to a plain loop/sum oracle,
    # unlike numpy reductions whose SIMD order varies
    acc = 0.0
    for v in values.tolist():
        acc += v
    return acc / len(values)


def _seq_sum(values: np.ndarray) -> float:
    acc = 0.0
    for v in values.tolist():
        acc += v
    return acc


class AveragedScores(NamedTuple):
    precision: float
    recall: float
    fbeta: float


def averaged(
    pred,
    truth,
    scheme: str,
    beta: float = 2.0,
    class_weights: Sequence[float] | None = None,
) -> AveragedScores:
    """Precision/recall/F-beta aggregated under one of the four schemes.

    macro averages per-class scores equally; weighted uses caller-supplied
    class weights summing to 1; micro pools counts globally; sample computes
    the scores per instance from that instance's label-level counts and
    averages over instances.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    if scheme not in SCHEMES:
        raise ValueError(f"scheme must be one of {SCHEMES}")
    p, t = _check_pair(pred, truth)

    if scheme == "sample":
        c = confusion(p, t, "per_sample")
    else:
        c = confusion(p, t, "per_class")
    prec, rec, f = _prf_from_counts(c.tp, c.fp, c.fn, beta)

    if scheme in ("macro", "sample"):
        return AveragedScores(_seq_mean(prec), _seq_mean(rec), _seq_mean(f))
    if scheme == "weighted":
        if class_weights is None:
            raise ValueError("weighted scheme requires class_weights")
        w = np.asarray(class_weights, dtype=np.float64)
        if w.shape != (p.shape[1],):
            raise ValueError(f"class_weights must have length {p.shape[1]}")
        if abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("class_weights must sum to 1 (tolerance 1e-9)")
        return AveragedScores(
            _seq_sum(w * prec), _seq_sum(w * rec), _seq_sum(w * f)
        )
    # micro: pool counts, then one ratio each; micro-F is F of the pooled p, r
    tp, fp, fn = int(c.tp.sum()), int(c.fp.sum()), int(c.fn.sum())
    mp = tp / (tp + fp) if tp + fp else 0.0
    mr = tp / (tp + fn) if tp + fn else 0.0
    return AveragedScores(mp, mr, fbeta(mp, mr, beta))


def sample_fbeta(pred, truth, beta: float = 2.0) -> float:
    """Sample-averaged F-beta, the primary score used for model selection."""
    return averaged(pred, truth, "sample", beta=beta).fbeta


def subset_accuracy(pred, truth) -> float:
    """Fraction of samples whose full predicted label vector is exact."""
    p, t = _check_pair(pred, truth)
    return float((p == t).all(axis=1).mean())


@dataclass(frozen=True)
class MetricsReport:
    """Per-class precision/recall/accuracy/F1/F2 rows plus a Total row.

    Total carries sample-averaged P/R/F1/F2 and exact-match accuracy.
    """

    class_names: tuple[str, ...]
    precision: np.ndarray
    recall: np.ndarray
    accuracy: np.ndarray
    f1: np.ndarray
    f2: np.ndarray
    total: tuple[float, float, float, float, float]  # (P, R, acc, F1, F2)

    HEADER = ("Class", "Precision", "Recall", "Accuracy", "F1 Score", "F2 Score")

    def rows(self):
        """Yield (name, precision, recall, accuracy, f1, f2), Total last."""
        for i, name in enumerate(self.class_names):
            yield (
                name,
                float(self.precision[i]),
                float(self.recall[i]),
                float(self.accuracy[i]),
                float(self.f1[i]),
                float(self.f2[i]),
            )
        yield ("Total",) + self.total

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(h.lower().replace(" ", "_") for h in self.HEADER) + "\n")
        for name, *vals in self.rows():
            buf.write(name + "," + ",".join(FLOAT_FMT % v for v in vals) + "\n")
        return buf.getvalue()

    def to_table_text(self) -> str:
        name_w = max(len(self.HEADER[0]), max(len(r[0]) for r in self.rows()))
        col_w = max(len(h) for h in self.HEADER[1:])
        lines = [
            self.HEADER[0].ljust(name_w)
            + "".join("  " + h.rjust(col_w) for h in self.HEADER[1:])
        ]
        for name, *vals in self.rows():
            lines.append(
                name.ljust(name_w)
                + "".join("  " + (FLOAT_FMT % v).rjust(col_w) for v in vals)
            )
        return "\n".join(lines) + "\n"


def report(pred: LabelMatrix, truth: LabelMatrix) -> MetricsReport:
    """Build the per-class + Total scoreboard for a hard prediction."""
    p, t = _check_pair(pred, truth)
    c = confusion(p, t, "per_class")
    prec, rec, f1 = _prf_from_counts(c.tp, c.fp, c.fn, 1.0)
    f2 = _fbeta_vec(prec, rec, 2.0)
    acc = _ratio(c.tp + c.tn, c.tp + c.fp + c.tn + c.fn)

    sp = averaged(p, t, "sample", beta=1.0)
    s2 = averaged(p, t, "sample", beta=2.0)
    total = (sp.precision, sp.recall, subset_accuracy(p, t), sp.fbeta, s2.fbeta)

    if isinstance(truth, LabelMatrix):
        names = truth.vocab.names
    elif isinstance(pred, LabelMatrix):
        names = pred.vocab.names
    else:
        names = tuple(f"label_{j}" for j in range(p.shape[1]))
    return MetricsReport(
        class_names=tuple(names),
        precision=prec,
        recall=rec,
        accuracy=acc,
        f1=f1,
        f2=f2,
        total=total,
    )
