"""
Run configuration: defaults, file merging, overrides and validation.
"""
import json
import tempfile
from pathlib import Path

from django.test import SimpleTestCase

from App.config import RunConfig
from App.data.records import SubtypeLabel
from App.exceptions import DataIOError, ValidationError
from App.seeding import derive_seed


class RunConfigTests(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def write(self, data, name='run.json'):
        path = self.dir / name
        path.write_text(json.dumps(data) if not isinstance(data, str) else data)
        return path

    def test_defaults(self):
        config = RunConfig.from_file().validate()
        self.assertEqual(config.training['lr'], 1e-4)
        self.assertEqual(config.training['batch_size'], 32)
        self.assertEqual(config.training['reg'], 1e-6)
        self.assertEqual((config.epochs('stage1'), config.epochs('stage2')), (55, 75))
        self.assertEqual(config.augment_config().rotation_range, (-90.0, 90.0))
        self.assertEqual(config.mc_config().T, 50)
        self.assertEqual(config.inference['mode'], 'soft')

    def test_file_merges_over_defaults(self):
        path = self.write({
            'training': {'epochs': {'stage1': 3, 'stage2': 4}, 'lr': 1e-3},
            'dataset': {'synthetic': {'counts': {'TN': 5}}, 'manifest': None},
        })
        config = RunConfig.from_file(path).validate()
        self.assertEqual(config.epochs('stage2'), 4)
        self.assertEqual(config.training['lr'], 1e-3)
        self.assertEqual(config.training['batch_size'], 32)
        self.assertEqual(config.dataset['synthetic']['counts'], {'TN': 5})
        self.assertEqual(config.dataset['synthetic']['noise'], 0.1)
        self.assertEqual(config.source, str(path))

    def test_overrides(self):
        config = RunConfig.from_file(None, {'seed': 7, 'T': 9, 'mode': 'hard', 'out': str(self.dir)})
        self.assertEqual(config.dataset['seed'], 7)
        self.assertEqual(config.mc_config().seed, 7)
        self.assertEqual(config.mc_config().T, 9)
        self.assertEqual(config.inference['mode'], 'hard')
        self.assertEqual(config.output_dir, self.dir)
        self.assertEqual(config.stage_seed(1), derive_seed(7, 'stage', 1))
        self.assertNotEqual(config.stage_seed(1), config.stage_seed(2))

    def test_stage_config(self):
        config = RunConfig.from_dict({'model': {'widths': [16], 'backbone': 'none'},
                                      'augment': {'enabled': False}})
        stage = config.stage_config(2)
        self.assertEqual(stage.training.epochs, 75)
        self.assertEqual(stage.widths, (16,))
        self.assertIsNone(stage.augment)
        self.assertEqual(stage.rebalance.method_for(SubtypeLabel.TN), 'adasyn')
        self.assertEqual(stage.target_size, (32, 32))

    def test_stage_config_per_stage(self):
        config = RunConfig.from_dict({'training': {'epochs': {'stage1': 3, 'stage2': 4}}}).validate()
        stage1, stage2 = config.stage_config(1), config.stage_config(2)
        self.assertEqual((stage1.training.epochs, stage2.training.epochs), (3, 4))
        self.assertEqual(stage1.seed, config.stage_seed(1))
        self.assertNotEqual(stage1.seed, stage2.seed)
        self.assertEqual(config.epochs('stage2'), config.epochs(2))
        with self.assertRaises(ValidationError):
            config.epochs(3)

    def test_single_epoch_count(self):
        config = RunConfig.from_dict({'training': {'epochs': 7}}).validate()
        self.assertEqual((config.stage_config(1).training.epochs, config.stage_config(2).training.epochs), (7, 7))

    def test_flat_baseline_config(self):
        config = RunConfig.from_dict({'training': {'epochs': {'stage1': 3, 'stage2': 4}}}).validate()
        self.assertTrue(config.flat_baseline)
        flat = config.stage_config('flat')
        self.assertEqual(flat.training.epochs, 4)
        self.assertEqual(flat.seed, derive_seed(0, 'stage', 'flat'))
        self.assertEqual(flat.rebalance.method_for(SubtypeLabel.TN), 'adasyn')

        explicit = RunConfig.from_dict({'training': {'epochs': {'stage1': 3, 'stage2': 4, 'flat': 9}}})
        self.assertEqual(explicit.validate().epochs('flat'), 9)
        off = RunConfig.from_dict({'model': {'flat_baseline': False}}).validate()
        self.assertFalse(off.flat_baseline)

    def test_relative_manifest(self):
        (self.dir / 'data').mkdir()
        (self.dir / 'data' / 'manifest.csv').write_text('image,patient_id,view,label\n')
        config = RunConfig.from_file(self.write({'dataset': {'manifest': 'data/manifest.csv'}}))
        self.assertEqual(config.validate(require_manifest=True).dataset['manifest'],
                         str(self.dir / 'data' / 'manifest.csv'))

    def test_missing_manifest(self):
        config = RunConfig.from_file(self.write({'dataset': {'manifest': 'nope.csv'}}))
        with self.assertRaises(DataIOError):
            config.validate()
        with self.assertRaises(ValidationError):
            RunConfig.from_file().validate(require_manifest=True)

    def test_file_errors(self):
        with self.assertRaises(DataIOError):
            RunConfig.from_file(self.dir / 'missing.json')
        with self.assertRaises(ValidationError):
            RunConfig.from_file(self.write('{not json'))
        with self.assertRaises(ValidationError):
            RunConfig.from_file(self.write('[1, 2]'))
        with self.assertRaises(ValidationError):
            RunConfig.from_file(self.write({'optimizer': {}}))

    def test_invalid_values(self):
        bad = [
            {'dataset': {'train_fraction': 1.0}},
            {'dataset': {'grouping': 'by_site'}},
            {'dataset': {'target_size': [32]}},
            {'model': {'dropout': 1.0}},
            {'model': {'flat_baseline': 'yes'}},
            {'training': {'epochs': {'stage1': 3, 'stage2': 4, 'flat': 0}}},
            {'training': {'lr': 0}},
            {'training': {'batch_size': 0}},
            {'training': {'epochs': {'stage1': 0, 'stage2': 5}}},
            {'inference': {'T': 0}},
            {'inference': {'mode': 'routed'}},
            {'augment': {'rotation_range': [-10, 30]}},
            {'rebalance': {'methods': {'TN': 'smote'}}},
        ]
        for data in bad:
            with self.assertRaises(ValidationError, msg=str(data)):
                RunConfig.from_dict(data).validate()
