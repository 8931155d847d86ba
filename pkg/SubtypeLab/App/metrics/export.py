"""
App/metrics/export.py

Report files written by the eval command:

    metrics_<suffix>.json                 full MetricsReport
    roc_<suffix>_<class>.csv              threshold,fpr,tpr
    confusion_<suffix>.csv                rows = true class, columns = predicted
"""
import json
import logging
from pathlib import Path

import pandas as pd

from App.exceptions import DataIOError

logger = logging.getLogger(__name__)


def write_json(data, path):
    path = Path(path)
    try:
        path.write_text(json.dumps(data, indent=2) + '\n')
    except OSError as e:
        raise DataIOError(f"cannot write {path}: {e}") from e
    return path


def roc_frame(curve):
    return pd.DataFrame(curve.rows(), columns=['threshold', 'fpr', 'tpr'])


def confusion_frame(matrix):
    return pd.DataFrame(matrix.counts, index=list(matrix.classes), columns=list(matrix.classes))


def export_metrics(report, out_dir, suffix):
    """Returns the list of written paths."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        written = [write_json(report.to_dict(), out_dir / f'metrics_{suffix}.json')]
        for name, curve in report.roc.items():
            path = out_dir / f'roc_{suffix}_{name}.csv'
            roc_frame(curve).to_csv(path, index=False, lineterminator='\n')
            written.append(path)
        path = out_dir / f'confusion_{suffix}.csv'
        confusion_frame(report.confusion).to_csv(path, index_label='true\\predicted', lineterminator='\n')
        written.append(path)
    except OSError as e:
        raise DataIOError(f"cannot write reports to {out_dir}: {e}") from e
    logger.info("Exported %d report files (%s) to %s", len(written), suffix, out_dir)
    return written
