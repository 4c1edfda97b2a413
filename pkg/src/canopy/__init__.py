"""canopy: a multi-label classification toolkit for satellite scene tagging.

Library surface: F-beta metrics under four averaging schemes, per-class
decision-threshold optimization, stratified multi-label k-fold splitting,
weighted-vote and integrated-stacking ensembles driven by a from-scratch
dense network (Adam/AMSGrad, batch norm), from-scratch classical learners,
and bit-exact image preprocessing. The ``canopy`` CLI batches it all over
CSV probability matrices and tag files.
"""

from . import classical, ensemble, imageprep, metrics, nn, splits, thresholds
from .data import (
    AMAZON_LABELS,
    DataError,
    FeatureMatrix,
    LabelMatrix,
    LabelVocabulary,
    ProbMatrix,
    load_features,
    load_probs,
    load_tags,
    make_rng,
    save_probs,
    save_tags,
    spawn_seeds,
    validate_weather_block,
)

__version__ = "0.1.0"

__all__ = [
    "AMAZON_LABELS",
    "DataError",
    "FeatureMatrix",
    "LabelMatrix",
    "LabelVocabulary",
    "ProbMatrix",
    "__version__",
    "classical",
    "ensemble",
    "imageprep",
    "load_features",
    "load_probs",
    "load_tags",
    "make_rng",
    "metrics",
    "nn",
    "save_probs",
    "save_tags",
    "spawn_seeds",
    "splits",
    "thresholds",
    "validate_weather_block",
]
