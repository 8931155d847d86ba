"""
App/metrics/classification.py

Pure metric functions: confusion matrix, one-vs-rest counts,
precision/recall/F1, accuracy and macro averaging.

Zero-denominator precision/recall return 0 with an undefined flag
instead of raising.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from sklearn import metrics as sk_metrics

from App.exceptions import ValidationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """counts[i][j] = samples of true class i predicted as class j."""
    counts: np.ndarray
    classes: tuple = ('TN', 'Luminal', 'HER2')

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise ValidationError(f"confusion matrix must be square, got shape {counts.shape}")
        if np.any(counts < 0):
            raise ValidationError("confusion matrix counts must be non-negative")
        if len(self.classes) != counts.shape[0]:
            raise ValidationError(f"{len(self.classes)} class names for a {counts.shape[0]}-class matrix")
        counts.setflags(write=False)
        object.__setattr__(self, 'counts', counts)
        object.__setattr__(self, 'classes', tuple(self.classes))

    @property
    def n_classes(self):
        return self.counts.shape[0]

    @property
    def total(self):
        return int(self.counts.sum())

    def to_dict(self):
        return {'classes': list(self.classes), 'counts': self.counts.tolist()}

    @classmethod
    def from_dict(cls, data):
        return cls(counts=np.array(data['counts']), classes=tuple(data['classes']))


@dataclass(frozen=True)
class BinaryCounts:
    TP: int
    FP: int
    FN: int
    TN: int

    @property
    def total(self):
        return self.TP + self.FP + self.FN + self.TN


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float
    precision_undefined: bool = False
    recall_undefined: bool = False

    @property
    def undefined(self):
        return self.precision_undefined or self.recall_undefined


def confusion_matrix(predictions, truths, n_classes=3, classes=None) -> ConfusionMatrix:
    predictions = np.asarray(predictions, dtype=int).ravel()
    truths = np.asarray(truths, dtype=int).ravel()
    if predictions.shape != truths.shape:
        raise ValidationError(f"{predictions.size} predictions for {truths.size} truths")
    for name, values in (('prediction', predictions), ('truth', truths)):
        if values.size and (values.min() < 0 or values.max() >= n_classes):
            raise ValidationError(f"{name} labels must lie in [0, {n_classes})")
    if truths.size:
        counts = sk_metrics.confusion_matrix(truths, predictions, labels=np.arange(n_classes))
    else:
        counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    if classes is None:
        classes = ('TN', 'Luminal', 'HER2') if n_classes == 3 else tuple(str(c) for c in range(n_classes))
    return ConfusionMatrix(counts=counts, classes=classes)


def binary_counts(matrix: ConfusionMatrix, positive_class) -> BinaryCounts:
    c = matrix.classes.index(positive_class) if isinstance(positive_class, str) else int(positive_class)
    counts = matrix.counts
    tp = int(counts[c, c])
    fn = int(counts[c, :].sum()) - tp
    fp = int(counts[:, c].sum()) - tp
    tn = matrix.total - tp - fn - fp
    return BinaryCounts(TP=tp, FP=fp, FN=fn, TN=tn)


def f1_score(precision, recall):
    """Harmonic mean; 0 when both are 0."""
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def prf(counts: BinaryCounts) -> PRF:
    """
    precision = TP / (TP + FP), recall = TP / (TP + FN),
    F1 = 2 TP / (2 TP + FP + FN)
    """
    p_den = counts.TP + counts.FP
    r_den = counts.TP + counts.FN
    precision = counts.TP / p_den if p_den else 0.0
    recall = counts.TP / r_den if r_den else 0.0
    f1_den = 2 * counts.TP + counts.FP + counts.FN
    f1 = 2 * counts.TP / f1_den if f1_den else 0.0
    return PRF(
        precision=float(precision), recall=float(recall), f1=float(f1),
        precision_undefined=p_den == 0, recall_undefined=r_den == 0,
    )


def per_class_prf(predictions, truths, n_classes=3):
    """
    One-vs-rest PRF of every class, in class-index order. Values come from
    scikit-learn with zero_division=0; the undefined flags from the label counts.
    """
    predictions = np.asarray(predictions, dtype=int).ravel()
    truths = np.asarray(truths, dtype=int).ravel()
    if truths.size == 0:
        raise ValidationError("per-class scores of an empty sample are undefined")
    labels = np.arange(n_classes)
    precision, recall, f1, _ = sk_metrics.precision_recall_fscore_support(
        truths, predictions, labels=labels, average=None, zero_division=0,
    )
    n_predicted = np.bincount(predictions, minlength=n_classes)
    n_true = np.bincount(truths, minlength=n_classes)
    return [
        PRF(
            precision=float(precision[c]), recall=float(recall[c]), f1=float(f1[c]),
            precision_undefined=bool(n_predicted[c] == 0), recall_undefined=bool(n_true[c] == 0),
        )
        for c in labels
    ]


def accuracy(matrix: ConfusionMatrix) -> float:
    """trace / total (Eq. (TP + TN) / total in the binary case)."""
    total = matrix.total
    if total == 0:
        raise ValidationError("accuracy of an empty confusion matrix is undefined")
    return float(np.trace(matrix.counts)) / total


def macro_average(values) -> float:
    values = [float(v) for v in values]
    if not values:
        raise ValidationError("macro_average needs at least one value")
    if all(v == values[0] for v in values):
        return values[0]
    return math.fsum(values) / len(values)
