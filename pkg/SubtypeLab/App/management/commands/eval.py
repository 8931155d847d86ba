"""
App/management/commands/eval.py

Evaluate a trained model on the reproduced test split, without and with
Monte-Carlo dropout, and the flat 3-class baseline beside it when the model
directory holds one.

Usage:
    python manage.py eval --config run.json
    python manage.py eval --config run.json --model runs/model --T 100 --mode hard

Writes to <out>/reports/:
    metrics_without_uq.json, metrics_with_uq.json
    metrics_flat_without_uq.json, metrics_flat_with_uq.json (flat baseline)
    roc_<column>_<class>.csv, confusion_<column>.csv
    exemplars.json, metrics.xlsx
"""
import logging

from App.data.features import clear_feature_cache
from App.exceptions import ValidationError
from App.hierarchy.flat import has_flat, load_flat
from App.hierarchy.model import load_model
from App.metrics.evaluation import evaluate_protocol
from App.metrics.excel_export import export_metrics_workbook
from App.metrics.export import export_metrics, write_json

from ._common import SubtypeLabCommand, ensure_dir, load_split, model_dir

logger = logging.getLogger(__name__)


class Command(SubtypeLabCommand):
    help = 'Evaluate the two-stage classifier with and without uncertainty'
    stage_name = 'eval'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--model', type=str, help='Model directory (default <out>/model)')
        parser.add_argument('--T', type=int, help='Monte-Carlo passes for the with-UQ column')
        parser.add_argument('--mode', choices=['soft', 'hard'], help='Stage routing mode')

    def run(self, **options):
        config = self.load_config(options)
        directory = model_dir(config, options)
        model = load_model(directory)
        flat = load_flat(directory) if config.flat_baseline and has_flat(directory) else None
        if tuple(model.target_size) != config.target_size:
            raise ValidationError(
                f"model input size {tuple(model.target_size)} does not match "
                f"config target_size {config.target_size}"
            )

        self.banner('EVALUATION')
        _, _, test_set = load_split(config)
        mc = config.mc_config()
        mode = config.inference['mode']
        self.stdout.write(f"Test: {len(test_set)} {test_set.counts_by_name()}")
        self.stdout.write(f"T={mc.T} mode={mode}")

        clear_feature_cache()
        reports = evaluate_protocol(model, test_set, mc, mode, flat=flat)

        out_dir = ensure_dir(config.output_dir / 'reports')
        for key, report in reports.items():
            export_metrics(report, out_dir, key)
        write_json(reports['with_uq'].uncertainty, out_dir / 'exemplars.json')
        export_metrics_workbook(reports, out_dir / 'metrics.xlsx', settings={
            'Model': str(directory),
            'Flat baseline': 'yes' if flat is not None else 'no',
            'Test samples': len(test_set),
            'T': mc.T,
            'Mode': mode,
            'Seed (inference)': mc.seed,
        })

        self.stdout.write(self.style.SUCCESS('\n[OK] EVALUATION COMPLETED'))
        for key, report in reports.items():
            auc = report.macro['auc']
            self.stdout.write(
                f"  {key}: accuracy={report.accuracy:.4f} macro_f1={report.macro['f1']:.4f} "
                f"macro_auc={'n/a' if auc is None else f'{auc:.4f}'}"
            )
        self.stdout.write(f"  Reports: {out_dir}")
