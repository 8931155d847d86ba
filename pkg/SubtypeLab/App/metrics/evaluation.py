"""
App/metrics/evaluation.py

Test-set evaluation of a TwoStageModel.

evaluate() predicts every test sample and reports, from the composed 3-class
distribution: the confusion matrix of argmax labels, per-class and macro
precision/recall/F1, one-vs-rest AUC, and overall accuracy. It also reports
each binary stage on its own (stage 1 on all samples, stage 2 on the
ground-truth non-TN samples it scored) and, for Monte-Carlo runs, the
lowest/highest-uncertainty sample of each class.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from App.data.features import load_features
from App.data.records import CLASS_NAMES, CLASS_ORDER, Dataset, SubtypeLabel
from App.exceptions import ValidationError
from App.hierarchy.flat import predict_flat_batch
from App.hierarchy.predict import predict_batch
from App.hierarchy.stages import STAGE1_CLASSES, STAGE2_CLASSES

from .classification import ConfusionMatrix, accuracy, confusion_matrix, macro_average, per_class_prf
from .roc import RocCurve, auc, roc_curve

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class MetricsReport:
    classes: tuple
    confusion: ConfusionMatrix
    per_class: Dict[str, dict]
    macro: Dict[str, Optional[float]]
    accuracy: float
    roc: Dict[str, RocCurve] = field(default_factory=dict)
    n_samples: int = 0
    uq: bool = False
    T: Optional[int] = None
    mode: str = 'soft'
    stages: Dict[str, 'MetricsReport'] = field(default_factory=dict)
    uncertainty: Optional[dict] = None

    def to_dict(self):
        data = {
            'classes': list(self.classes),
            'n_samples': self.n_samples,
            'uq': self.uq,
            'T': self.T,
            'mode': self.mode,
            'accuracy': self.accuracy,
            'accuracy_kind': 'overall (trace / total)',
            'per_class': self.per_class,
            'macro': self.macro,
            'confusion_matrix': self.confusion.to_dict(),
        }
        if self.stages:
            data['stages'] = {name: report.to_dict() for name, report in self.stages.items()}
        if self.uncertainty is not None:
            data['uncertainty'] = self.uncertainty
        return data


def _class_auc(scores, truths, c, name):
    positives = truths == c
    if positives.all() or not positives.any():
        logger.warning("AUC unavailable for %s: test data has no %s samples",
                       name, 'negative' if positives.all() else 'positive')
        return None, None
    curve = roc_curve(scores[:, c], positives)
    return auc(curve), curve


def classification_report(predicted, truths, scores, classes, **extra) -> MetricsReport:
    """
    Args:
        predicted: (N,) predicted class indices
        truths: (N,) true class indices
        scores: (N, C) class probabilities used for one-vs-rest ROC
        classes: class names in index order
    """
    predicted = np.asarray(predicted, dtype=int)
    truths = np.asarray(truths, dtype=int)
    scores = np.asarray(scores, dtype=np.float64).reshape(len(truths), len(classes))
    if truths.size == 0:
        raise ValidationError("cannot evaluate an empty test set")

    matrix = confusion_matrix(predicted, truths, n_classes=len(classes), classes=tuple(classes))
    per_class, curves = {}, {}
    scores_by_class = per_class_prf(predicted, truths, n_classes=len(classes))
    for c, name in enumerate(classes):
        result = scores_by_class[c]
        if result.undefined:
            logger.warning("Precision/recall undefined for %s (zero denominator); reported as 0", name)
        class_auc, curve = _class_auc(scores, truths, c, name)
        if curve is not None:
            curves[name] = curve
        per_class[name] = {
            'precision': result.precision,
            'recall': result.recall,
            'f1': result.f1,
            'auc': class_auc,
            'support': int(np.count_nonzero(truths == c)),
            'precision_undefined': result.precision_undefined,
            'recall_undefined': result.recall_undefined,
        }

    aucs = [per_class[name]['auc'] for name in classes]
    macro = {
        key: macro_average(per_class[name][key] for name in classes)
        for key in ('precision', 'recall', 'f1')
    }
    macro['auc'] = macro_average(aucs) if all(a is not None for a in aucs) else None

    return MetricsReport(
        classes=tuple(classes), confusion=matrix, per_class=per_class, macro=macro,
        accuracy=accuracy(matrix), roc=curves, n_samples=int(truths.size), **extra,
    )


def stage_metrics(predictions, truths) -> Dict[str, MetricsReport]:
    """Binary reports for stage 1 (all samples) and stage 2 (non-TN samples it scored)."""
    truths = np.asarray(truths, dtype=int)
    tn = SubtypeLabel.TN.class_index
    luminal = SubtypeLabel.LUMINAL.class_index

    probs1 = np.array([p.stage1_report.probabilities for p in predictions])
    t1 = np.where(truths == tn, 0, 1)
    stages = {'stage1': classification_report(probs1.argmax(axis=1), t1, probs1, STAGE1_CLASSES)}

    rows = [i for i, p in enumerate(predictions) if truths[i] != tn and p.stage2_report is not None]
    if rows:
        probs2 = np.array([predictions[i].stage2_report.probabilities for i in rows])
        t2 = np.where(truths[rows] == luminal, 0, 1)
        stages['stage2'] = classification_report(probs2.argmax(axis=1), t2, probs2, STAGE2_CLASSES)
    else:
        logger.warning("Stage 2 metrics unavailable: no non-TN test sample reached stage 2")
    return stages


def _deciding_entropy(prediction, label):
    if label == SubtypeLabel.TN or prediction.stage2_report is None:
        return 'stage1', prediction.stage1_report.entropy
    return 'stage2', prediction.stage2_report.entropy


def uncertainty_exemplars(predictions, records):
    """
    Per true class: the samples with the lowest and highest entropy of the
    stage that decides that class, and the mean composed entropy.
    """
    if len(predictions) != len(records):
        raise ValidationError(f"{len(predictions)} predictions for {len(records)} records")
    result = {}
    for label in CLASS_ORDER:
        members = [(p, r) for p, r in zip(predictions, records) if r.label == label]
        if not members:
            result[label.value] = None
            continue
        entries = []
        for p, r in members:
            stage, entropy = _deciding_entropy(p, label)
            entries.append({
                'image': r.display_name,
                'patient_id': r.patient_id,
                'view': r.view,
                'stage': stage,
                'stage_entropy': float(entropy),
                'composed_entropy': float(p.composed_entropy),
                'predicted': p.predicted_label.value,
            })
        # min/max keep the first sample on ties
        result[label.value] = {
            'count': len(entries),
            'mean_composed_entropy': float(np.mean([e['composed_entropy'] for e in entries])),
            'lowest': min(entries, key=lambda e: e['stage_entropy']),
            'highest': max(entries, key=lambda e: e['stage_entropy']),
        }
    return result


def report_from_predictions(predictions, records, mc=None, mode='soft') -> MetricsReport:
    if not predictions:
        raise ValidationError("cannot evaluate an empty test set")
    truths = np.array([r.label.class_index for r in records], dtype=int)
    scores = np.array([p.composed.probabilities for p in predictions])
    predicted = np.array([p.predicted_label.class_index for p in predictions], dtype=int)
    return classification_report(
        predicted, truths, scores, CLASS_NAMES,
        uq=mc is not None, T=mc.T if mc is not None else None, mode=mode,
        stages=stage_metrics(predictions, truths),
        uncertainty=uncertainty_exemplars(predictions, records) if mc is not None else None,
    )


def evaluate(model, test: Dataset, mc=None, mode='soft', return_predictions=False):
    if len(test) == 0:
        raise ValidationError("cannot evaluate an empty test set")
    logger.info("Evaluate START: %d samples (uq=%s, mode=%s)", len(test), mc is not None, mode)
    X, _ = load_features(test, model.target_size)
    predictions = predict_batch(model, X, mc, mode)
    report = report_from_predictions(predictions, list(test), mc, mode)
    logger.info("Evaluate DONE: accuracy=%.4f macro_f1=%.4f macro_auc=%s",
                report.accuracy, report.macro['f1'], report.macro['auc'])
    if return_predictions:
        return report, predictions
    return report


def flat_uncertainty(reports, records):
    """Mean predictive entropy of the flat network per true class."""
    result = {}
    for label in CLASS_ORDER:
        entropies = [r.entropy for r, record in zip(reports, records) if record.label == label]
        result[label.value] = {
            'count': len(entropies),
            'mean_entropy': float(np.mean(entropies)),
        } if entropies else None
    return result


def evaluate_flat(model, test: Dataset, mc=None) -> MetricsReport:
    if len(test) == 0:
        raise ValidationError("cannot evaluate an empty test set")
    logger.info("Evaluate flat START: %d samples (uq=%s)", len(test), mc is not None)
    X, truths = load_features(test, model.target_size)
    reports = predict_flat_batch(model, X, mc)
    scores = np.array([r.probabilities for r in reports])
    report = classification_report(
        scores.argmax(axis=1), truths, scores, CLASS_NAMES,
        uq=mc is not None, T=mc.T if mc is not None else None, mode='flat',
        uncertainty=flat_uncertainty(reports, list(test)) if mc is not None else None,
    )
    logger.info("Evaluate flat DONE: accuracy=%.4f macro_f1=%.4f macro_auc=%s",
                report.accuracy, report.macro['f1'], report.macro['auc'])
    return report


def evaluate_protocol(model, test: Dataset, mc, mode='soft', flat=None):
    """
    Both report columns: a deterministic pass and Monte-Carlo dropout. With a
    flat baseline its two columns follow under flat_without_uq / flat_with_uq.
    """
    reports = {
        'without_uq': evaluate(model, test, None, mode),
        'with_uq': evaluate(model, test, mc, mode),
    }
    if flat is not None:
        reports['flat_without_uq'] = evaluate_flat(flat, test, None)
        reports['flat_with_uq'] = evaluate_flat(flat, test, mc)
    return reports
