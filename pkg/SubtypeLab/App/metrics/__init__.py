from .classification import (
    PRF,
    BinaryCounts,
    ConfusionMatrix,
    accuracy,
    binary_counts,
    confusion_matrix,
    f1_score,
    macro_average,
    per_class_prf,
    prf,
)
from .evaluation import (
    MetricsReport,
    classification_report,
    evaluate,
    evaluate_flat,
    evaluate_protocol,
    flat_uncertainty,
    report_from_predictions,
    stage_metrics,
    uncertainty_exemplars,
)
from .excel_export import export_metrics_workbook
from .export import export_metrics, write_json
from .roc import RocCurve, auc, mann_whitney_auc, roc_curve

__all__ = [
    'PRF', 'BinaryCounts', 'ConfusionMatrix', 'accuracy', 'binary_counts', 'confusion_matrix',
    'f1_score', 'macro_average', 'per_class_prf', 'prf',
    'MetricsReport', 'classification_report', 'evaluate', 'evaluate_flat', 'evaluate_protocol', 'flat_uncertainty',
    'report_from_predictions', 'stage_metrics', 'uncertainty_exemplars',
    'export_metrics_workbook', 'export_metrics', 'write_json',
    'RocCurve', 'auc', 'mann_whitney_auc', 'roc_curve',
]
