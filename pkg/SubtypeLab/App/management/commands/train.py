"""
App/management/commands/train.py

split -> rebalance -> per-epoch augmentation -> two-stage training.

Usage:
    python manage.py train --config run.json
    python manage.py train --config run.json --seed 3 --out runs/seed3

Writes <out>/model/ (stage specs, params, meta.json), the flat 3-class
baseline next to it when model.flat_baseline is on, and
<out>/training_log.json (config, seeds, split and rebalance counts,
per-epoch losses).
"""
import logging

from App.data.features import clear_feature_cache
from App.hierarchy.flat import save_flat, train_flat
from App.hierarchy.model import save_model
from App.hierarchy.training import train_two_stage
from App.metrics.export import write_json

from ._common import SubtypeLabCommand, ensure_dir, load_split, model_dir

logger = logging.getLogger(__name__)


class Command(SubtypeLabCommand):
    help = 'Train the two-stage subtype classifier'
    stage_name = 'train'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            '--model',
            type=str,
            help='Model directory (default <out>/model)',
        )

    def run(self, **options):
        config = self.load_config(options)
        self.banner('TWO-STAGE TRAINING')

        manifest, train_set, test_set = load_split(config)
        self.stdout.write(f"Manifest: {manifest}")
        self.stdout.write(f"Train: {len(train_set)} {train_set.counts_by_name()}")
        self.stdout.write(f"Test:  {len(test_set)} {test_set.counts_by_name()}")

        stage1_config = config.stage_config(1)
        stage2_config = config.stage_config(2)
        self.stdout.write(
            f"Epochs: stage1={stage1_config.training.epochs} stage2={stage2_config.training.epochs}"
        )

        clear_feature_cache()
        model = train_two_stage(train_set, stage1_config, stage2_config)
        model.metadata['run_config'] = config.to_dict()
        model.metadata['manifest'] = str(manifest)

        target = model_dir(config, options)
        save_model(model, target)

        flat = None
        if config.flat_baseline:
            flat_config = config.stage_config('flat')
            self.stdout.write(f"Flat baseline: epochs={flat_config.training.epochs}")
            flat = train_flat(train_set, flat_config)
            save_flat(flat, target)

        log = {
            'config': config.to_dict(),
            'manifest': str(manifest),
            'split': {
                'train': train_set.counts_by_name(),
                'test': test_set.counts_by_name(),
            },
            'seeds': {
                'split': config.dataset['seed'],
                'stage1': stage1_config.seed,
                'stage2': stage2_config.seed,
            },
            'stages': {
                name: {
                    'samples': model.metadata[name]['samples'],
                    'counts': model.metadata[name]['counts'],
                    'rebalanced_counts': model.metadata[name]['rebalanced_counts'],
                    'epochs': len(model.metadata[name]['history']),
                    'history': model.metadata[name]['history'],
                    'training_accuracy': model.metadata[name]['training_accuracy'],
                }
                for name in ('stage1', 'stage2')
            },
        }
        if flat is not None:
            log['seeds']['flat'] = flat.metadata['seed']
            log['flat'] = {
                key: flat.metadata[key]
                for key in ('samples', 'rebalanced_counts', 'history', 'training_accuracy')
            }
            log['flat']['epochs'] = len(flat.metadata['history'])
        ensure_dir(config.output_dir)
        log_path = write_json(log, config.output_dir / 'training_log.json')

        self.stdout.write(self.style.SUCCESS('\n[OK] TRAINING COMPLETED'))
        for name in ('stage1', 'stage2'):
            stage = log['stages'][name]
            self.stdout.write(
                f"  {name}: epochs={stage['epochs']} final_loss={stage['history'][-1]:.4f} "
                f"train_acc={stage['training_accuracy']:.4f}"
            )
        if flat is not None:
            self.stdout.write(
                f"  flat: epochs={log['flat']['epochs']} final_loss={log['flat']['history'][-1]:.4f} "
                f"train_acc={log['flat']['training_accuracy']:.4f}"
            )
        self.stdout.write(f"  Model: {target}")
        self.stdout.write(f"  Log: {log_path}")
