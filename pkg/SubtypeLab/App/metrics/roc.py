"""
App/metrics/roc.py

ROC curves with tied scores grouped, and trapezoidal AUC, on top of
scikit-learn.

Thresholds run from +inf down through every distinct score; a sample is
called positive when its score >= threshold. Every threshold is kept so
the area equals the Mann-Whitney statistic P(pos > neg) + P(pos == neg) / 2.
"""
from dataclasses import dataclass

import numpy as np
from sklearn import metrics as sk_metrics

from App.exceptions import ValidationError


@dataclass(frozen=True, eq=False)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    tp: np.ndarray
    fp: np.ndarray

    @property
    def n_positive(self):
        return int(self.tp[-1])

    @property
    def n_negative(self):
        return int(self.fp[-1])

    @property
    def points(self):
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))

    def rows(self):
        """(threshold, fpr, tpr) rows for CSV export."""
        return [(float(t), float(f), float(p)) for t, f, p in zip(self.thresholds, self.fpr, self.tpr)]


def roc_curve(scores, truths) -> RocCurve:
    """
    Args:
        scores: per-sample positive-class scores
        truths: binary labels (1 = positive)
    """
    scores = np.asarray(scores, dtype=np.float64).ravel()
    truths = np.asarray(truths).ravel().astype(bool)
    if scores.shape != truths.shape:
        raise ValidationError(f"{scores.size} scores for {truths.size} labels")
    if not np.all(np.isfinite(scores)):
        raise ValidationError("ROC scores must be finite")
    n_pos = int(truths.sum())
    n_neg = truths.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValidationError("ROC curve needs at least one positive and one negative sample")

    fpr, tpr, thresholds = sk_metrics.roc_curve(truths, scores, drop_intermediate=False)
    thresholds = np.asarray(thresholds, dtype=np.float64).copy()
    # older releases start at max(score) + 1 instead of +inf
    thresholds[0] = np.inf
    tp = np.rint(tpr * n_pos).astype(np.int64)
    fp = np.rint(fpr * n_neg).astype(np.int64)
    return RocCurve(fpr=fpr, tpr=tpr, thresholds=thresholds, tp=tp, fp=fp)


def auc(curve: RocCurve) -> float:
    """Trapezoidal area under the curve."""
    return float(sk_metrics.auc(curve.fpr, curve.tpr))


def mann_whitney_auc(scores, truths):
    """Pairwise P(pos > neg) + P(tie) / 2; reference oracle for auc()."""
    scores = np.asarray(scores, dtype=np.float64).ravel()
    truths = np.asarray(truths).ravel().astype(bool)
    pos, neg = scores[truths], scores[~truths]
    if pos.size == 0 or neg.size == 0:
        raise ValidationError("Mann-Whitney AUC needs both classes")
    diff = pos[:, None] - neg[None, :]
    return float((np.count_nonzero(diff > 0) + 0.5 * np.count_nonzero(diff == 0)) / diff.size)
