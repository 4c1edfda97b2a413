"""Shared data model: label vocabulary, matrices, tag/probability CSV I/O, seeded RNG.

All container types are immutable after construction (arrays are set
read-only) and safe to share across threads. Randomness everywhere in the
package flows through :func:`make_rng` / :func:`spawn_seeds`, which pin the
generator to numpy's PCG64 so a fixed seed reproduces bit-identical
sequences on the same build.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

FLOAT_FMT = "%.6f"  # all emitted floats carry 6 decimals


class DataError(Exception):
    """Malformed or inconsistent input data (bad CSV, unknown label, ...)."""


def make_rng(seed: int) -> np.random.Generator:
    """Seeded PCG64 generator; the single PRNG used across the package."""
    return np.random.default_rng(int(seed))


def spawn_seeds(seed: int, n: int) -> list[int]:
    """Derive n independent child seeds deterministically from one seed."""
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(int(seed)).spawn(n)]


@dataclass(frozen=True)
class LabelVocabulary:
    """Ordered label names; the first ``weather_count`` are mutually exclusive.

    weather_count = 0 disables the exclusivity convention entirely.
    """

    names: tuple[str, ...]
    weather_count: int = 0

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(str(n) for n in self.names))
        if not self.names:
            raise ValueError("vocabulary must contain at least one label")
        if any(not n for n in self.names):
            raise ValueError("label names must be non-empty")
        if len(set(self.names)) != len(self.names):
            raise ValueError("label names must be unique")
        if not 0 <= self.weather_count <= len(self.names):
            raise ValueError(f"weather_count must be in [0, {len(self.names)}]")

    def __len__(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown label {name!r}") from None


#: Canonical 17-label Amazon rainforest scene vocabulary: 4 mutually
#: exclusive atmospheric labels followed by 13 ground labels.
AMAZON_LABELS = LabelVocabulary(
    names=(
        "clear",
        "cloudy",
        "haze",
        "partly_cloudy",
        "agriculture",
        "artisinal_mine",
        "bare_ground",
        "blooming",
        "blow_down",
        "conventional_mine",
        "cultivation",
        "habitation",
        "primary",
        "road",
        "selective_logging",
        "slash_burn",
        "water",
    ),
    weather_count=4,
)


def _freeze(values: np.ndarray) -> np.ndarray:
    out = np.array(values, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class LabelMatrix:
    """Binary n_samples x n_labels assignment matrix tied to a vocabulary."""

    values: np.ndarray
    vocab: LabelVocabulary

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 2:
            raise ValueError("label matrix must be 2-D")
        if v.shape[1] != len(self.vocab):
            raise ValueError(
                f"label matrix has {v.shape[1]} columns, vocabulary has {len(self.vocab)}"
            )
        if v.dtype != np.int8:
            if not np.isin(np.asarray(v, dtype=float), (0.0, 1.0)).all():
                raise ValueError("label matrix entries must be exactly 0 or 1")
            v = v.astype(np.int8)
        elif not np.isin(v, (0, 1)).all():
            raise ValueError("label matrix entries must be exactly 0 or 1")
        object.__setattr__(self, "values", _freeze(v))

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_labels(self) -> int:
        return self.values.shape[1]

    def as_bool(self) -> np.ndarray:
        return self.values.astype(bool)


@dataclass(frozen=True)
class ProbMatrix:
    """Real n_samples x n_labels score matrix with entries in [0, 1]."""

    values: np.ndarray
    vocab: LabelVocabulary

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise ValueError("probability matrix must be 2-D")
        if v.shape[1] != len(self.vocab):
            raise ValueError(
                f"probability matrix has {v.shape[1]} columns, vocabulary has {len(self.vocab)}"
            )
        if not np.isfinite(v).all():
            raise ValueError("probability matrix entries must be finite")
        if v.size and (v.min() < 0.0 or v.max() > 1.0):
            raise ValueError("probability matrix entries must lie in [0, 1]")
        object.__setattr__(self, "values", _freeze(v))

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_labels(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class FeatureMatrix:
    """Rectangular real-valued feature matrix with optional column names."""

    values: np.ndarray
    feature_names: tuple[str, ...] | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise ValueError("feature matrix must be 2-D")
        if not np.isfinite(v).all():
            raise ValueError("feature matrix entries must be finite")
        if self.feature_names is not None:
            names = tuple(self.feature_names)
            if len(names) != v.shape[1]:
                raise ValueError("feature_names length must match column count")
            object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "values", _freeze(v))

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]


def validate_weather_block(labels: LabelMatrix) -> None:
    """Raise DataError unless every row has exactly one weather label set."""
    wc = labels.vocab.weather_count
    if wc == 0:
        return
    sums = labels.values[:, :wc].sum(axis=1)
    bad = np.nonzero(sums != 1)[0]
    if bad.size:
        raise DataError(
            f"row {bad[0]} has {int(sums[bad[0]])} weather labels set, expected exactly 1"
        )


# ---------------------------------------------------------------------------
# Tag files: CSV with header `image_name,tags`, where the tags
# cell is a space-separated list of label names.
# ---------------------------------------------------------------------------


def _read_csv_rows(path: str | Path) -> list[list[str]]:
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            return list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"{path}: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise DataError(f"{path}: not valid UTF-8 ({exc})") from exc


def load_tags(
    path: str | Path, vocab: LabelVocabulary | str = "infer"
) -> tuple[list[str], LabelMatrix]:
    """Load a tag file into (sample ids, LabelMatrix), rows in file order.

    With vocab="infer" the vocabulary is built from the sorted distinct tags
    (weather_count 0); an explicit vocabulary makes unknown labels an error.
    """
    rows = _read_csv_rows(path)
    if not rows or [c.strip() for c in rows[0][:2]] != ["image_name", "tags"]:
        raise DataError(f"{path}: expected header 'image_name,tags'")
    body = rows[1:]
    ids: list[str] = []
    tag_sets: list[list[str]] = []
    seen: set[str] = set()
    for lineno, row in enumerate(body, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 2:
            raise DataError(f"{path}: row {lineno}: expected 2 columns, got {len(row)}")
        sample_id, cell = row[0].strip(), row[1].strip()
        if not sample_id:
            raise DataError(f"{path}: row {lineno}: empty sample id")
        if sample_id in seen:
            raise DataError(f"{path}: row {lineno}: duplicate sample id {sample_id!r}")
        seen.add(sample_id)
        ids.append(sample_id)
        tag_sets.append(cell.split() if cell else [])

    if isinstance(vocab, str):
        if vocab != "infer":
            raise ValueError("vocab must be a LabelVocabulary or the string 'infer'")
        distinct = sorted({t for tags in tag_sets for t in tags})
        if not distinct:
            raise DataError(f"{path}: cannot infer a vocabulary from a file with no tags")
        vocab = LabelVocabulary(names=tuple(distinct))

    index = {name: j for j, name in enumerate(vocab.names)}
    values = np.zeros((len(ids), len(vocab)), dtype=np.int8)
    for i, tags in enumerate(tag_sets):
        for t in tags:
            j = index.get(t)
            if j is None:
                raise DataError(f"{path}: row {i + 2}: unknown label {t!r}")
            values[i, j] = 1
    return ids, LabelMatrix(values=values, vocab=vocab)


def save_tags(path: str | Path, ids: Sequence[str], labels: LabelMatrix) -> None:
    """Write a tag file; exact inverse of load_tags under the same vocab."""
    if len(ids) != labels.n_samples:
        raise ValueError("ids length must match the number of rows")
    names = labels.vocab.names
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("image_name,tags\n")
        for sample_id, row in zip(ids, labels.values):
            tags = " ".join(names[j] for j in np.nonzero(row)[0])
            fh.write(f"{sample_id},{tags}\n")


# ---------------------------------------------------------------------------
# Probability files: CSV with header `image_name,<label1>,...,<labelK>`.
# Any column permutation of the vocabulary is accepted and realigned.
# ---------------------------------------------------------------------------


def load_probs(path: str | Path, vocab: LabelVocabulary) -> tuple[list[str], ProbMatrix]:
    """Load a probability CSV, realigning columns to vocabulary order."""
    rows = _read_csv_rows(path)
    if not rows:
        raise DataError(f"{path}: empty file")
    header = [c.strip() for c in rows[0]]
    if not header or header[0] != "image_name":
        raise DataError(f"{path}: expected first header column 'image_name'")
    file_labels = header[1:]
    if sorted(file_labels) != sorted(vocab.names):
        missing = set(vocab.names) - set(file_labels)
        extra = set(file_labels) - set(vocab.names)
        detail = []
        if missing:
            detail.append(f"missing label column(s) {sorted(missing)}")
        if extra:
            detail.append(f"unexpected column(s) {sorted(extra)}")
        raise DataError(f"{path}: header does not match vocabulary: {'; '.join(detail)}")
    order = [file_labels.index(name) for name in vocab.names]

    ids: list[str] = []
    seen: set[str] = set()
    values = np.empty((len(rows) - 1, len(vocab)), dtype=np.float64)
    n = 0
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != len(header):
            raise DataError(
                f"{path}: row {lineno}: expected {len(header)} columns, got {len(row)}"
            )
        sample_id = row[0].strip()
        if not sample_id:
            raise DataError(f"{path}: row {lineno}: empty sample id")
        if sample_id in seen:
            raise DataError(f"{path}: row {lineno}: duplicate sample id {sample_id!r}")
        seen.add(sample_id)
        for j_out, j_in in enumerate(order):
            cell = row[1 + j_in].strip()
            try:
                x = float(cell)
            except ValueError:
                raise DataError(f"{path}: row {lineno}: non-numeric value {cell!r}") from None
            if not np.isfinite(x) or x < 0.0 or x > 1.0:
                raise DataError(f"{path}: row {lineno}: value {cell} outside [0, 1]")
            values[n, j_out] = x
        ids.append(sample_id)
        n += 1
    return ids, ProbMatrix(values=values[:n], vocab=vocab)


def save_probs(path: str | Path, ids: Sequence[str], probs: ProbMatrix) -> None:
    """Write a probability CSV in canonical vocabulary order, 6 decimals."""
    if len(ids) != probs.n_samples:
        raise ValueError("ids length must match the number of rows")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("image_name," + ",".join(probs.vocab.names) + "\n")
        for sample_id, row in zip(ids, probs.values):
            fh.write(sample_id + "," + ",".join(FLOAT_FMT % x for x in row) + "\n")


def load_features(path: str | Path) -> tuple[list[str] | None, FeatureMatrix]:
    """Load a feature matrix from .npy (row-aligned, no ids) or from CSV
    with header `image_name,<f1>,...` (ids in the first column)."""
    path = Path(path)
    if path.suffix == ".npy":
        arr = np.load(path)
        if arr.ndim != 2:
            raise DataError(f"{path}: expected a 2-D array, got shape {arr.shape}")
        return None, FeatureMatrix(values=arr)
    rows = _read_csv_rows(path)
    if not rows or not rows[0] or rows[0][0].strip() != "image_name":
        raise DataError(f"{path}: expected header starting with 'image_name'")
    names = tuple(c.strip() for c in rows[0][1:])
    ids: list[str] = []
    values = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != len(names) + 1:
            raise DataError(
                f"{path}: row {lineno}: expected {len(names) + 1} columns, got {len(row)}"
            )
        ids.append(row[0].strip())
        try:
            values.append([float(c) for c in row[1:]])
        except ValueError:
            raise DataError(f"{path}: row {lineno}: non-numeric feature value") from None
    if not ids:
        raise DataError(f"{path}: no feature rows")
    try:
        return ids, FeatureMatrix(values=np.array(values), feature_names=names or None)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None
