"""
Management commands: gen-synthetic, train, eval, predict.
"""
import json
import shutil
import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, tag

from App.data.features import load_features
from App.data.imaging import read_image
from App.data.manifest import load_manifest
from App.data.synthetic import template
from App.hierarchy.model import load_model
from App.hierarchy.predict import predict_batch
from App.uncertainty.mc import MCConfig


def run(name, *args, **options):
    out = StringIO()
    call_command(name, *args, stdout=out, **options)
    return out.getvalue()


def write_config(path, out_dir, **sections):
    config = {
        'dataset': {
            'synthetic': {'counts': {'Luminal': 12, 'HER2': 8, 'TN': 8}, 'size': [8, 8], 'noise': 0.1},
            'target_size': [8, 8],
        },
        'model': {'backbone': 'none', 'widths': [8], 'dropout': 0.2},
        'training': {'epochs': {'stage1': 2, 'stage2': 2}, 'lr': 0.01, 'batch_size': 16},
        'output': {'directory': str(out_dir)},
    }
    for section, values in sections.items():
        config.setdefault(section, {}).update(values)
    Path(path).write_text(json.dumps(config))
    return str(path)


class CommandTestCase(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)
        self.out = self.dir / 'run'
        self.config = write_config(self.dir / 'run.json', self.out)

    def tearDown(self):
        self.tmp.cleanup()


class GenSyntheticTests(CommandTestCase):

    def test_byte_reproducible(self):
        run('gen-synthetic', config=self.config, out=str(self.dir / 'a'))
        run('gen-synthetic', config=self.config, out=str(self.dir / 'b'))
        files_a = sorted(p.relative_to(self.dir / 'a') for p in (self.dir / 'a').rglob('*') if p.is_file())
        files_b = sorted(p.relative_to(self.dir / 'b') for p in (self.dir / 'b').rglob('*') if p.is_file())
        self.assertEqual(files_a, files_b)
        self.assertEqual(len(files_a), 29)
        for rel in files_a:
            self.assertEqual((self.dir / 'a' / rel).read_bytes(), (self.dir / 'b' / rel).read_bytes(), str(rel))

    def test_default_directory_and_counts(self):
        output = run('gen-synthetic', config=self.config)
        dataset = load_manifest(self.out / 'data' / 'manifest.csv')
        self.assertEqual(dataset.counts_by_name(), {'Luminal': 12, 'HER2': 8, 'TN': 8})
        self.assertEqual(len(dataset.patients()), 14)
        self.assertIn('DATASET WRITTEN', output)

    def test_zero_noise_gives_templates(self):
        run('gen-synthetic', config=self.config, out=str(self.dir / 'clean'), noise=0.0)
        for record in load_manifest(self.dir / 'clean' / 'manifest.csv'):
            pixels, max_value = read_image(record.image_ref)
            self.assertEqual(max_value, 255)
            np.testing.assert_array_equal(pixels, template(record.label, (8, 8)))

    def test_classes_are_nearest_neighbour_separable(self):
        config = write_config(self.dir / 'big.json', self.out, dataset={
            'synthetic': {'counts': {'Luminal': 200, 'HER2': 60, 'TN': 40}, 'size': [16, 16], 'noise': 0.1},
        })
        run('gen-synthetic', config=config, out=str(self.dir / 'big'))
        records = list(load_manifest(self.dir / 'big' / 'manifest.csv'))
        X = np.array([read_image(r.image_ref)[0].ravel() / 255.0 for r in records])
        y = np.array([r.label.class_index for r in records])
        d = ((X[:, None, :] - X[None, :, :]) ** 2).sum(axis=2)
        np.fill_diagonal(d, np.inf)
        self.assertGreaterEqual(np.mean(y[d.argmin(axis=1)] == y), 0.95)

    def test_negative_noise(self):
        with self.assertRaises(CommandError) as ctx:
            run('gen-synthetic', config=self.config, noise=-0.1)
        self.assertEqual(ctx.exception.returncode, 2)


class TrainEvalPredictTests(CommandTestCase):

    def test_train_writes_model_and_log(self):
        output = run('train', config=self.config)
        for name in ('stage1.spec.json', 'stage1.params.bin', 'stage2.spec.json', 'stage2.params.bin',
                     'meta.json', 'flat.spec.json', 'flat.params.bin', 'flat.meta.json'):
            self.assertTrue((self.out / 'model' / name).is_file(), name)
        log = json.loads((self.out / 'training_log.json').read_text())
        self.assertEqual(log['stages']['stage1']['epochs'], 2)
        self.assertEqual(len(log['stages']['stage2']['history']), 2)
        self.assertEqual(log['flat']['epochs'], 2)
        self.assertEqual(log['flat']['samples'], sum(log['flat']['rebalanced_counts'].values()))
        self.assertEqual(sum(log['split']['train'].values()) + sum(log['split']['test'].values()), 28)
        self.assertIn('TRAINING COMPLETED', output)

    def test_train_rerun_is_identical(self):
        run('train', config=self.config)
        model = self.out / 'model'
        first = {p.name: p.read_bytes() for p in model.iterdir()}
        run('train', config=self.config)
        second = {p.name: p.read_bytes() for p in model.iterdir()}
        self.assertEqual(first, second)

    def test_train_missing_class(self):
        config = write_config(self.dir / 'no_tn.json', self.out, dataset={
            'synthetic': {'counts': {'Luminal': 12, 'HER2': 8, 'TN': 0}, 'size': [8, 8], 'noise': 0.1},
        })
        with self.assertRaises(CommandError) as ctx:
            run('train', config=config)
        self.assertEqual(ctx.exception.returncode, 2)
        self.assertIn('TN', str(ctx.exception))

    def test_eval_reports(self):
        run('train', config=self.config)
        run('eval', config=self.config, T=2)
        reports = self.out / 'reports'
        without_uq = (reports / 'metrics_without_uq.json').read_bytes()
        with_uq = json.loads((reports / 'metrics_with_uq.json').read_text())
        self.assertEqual(with_uq['T'], 2)
        self.assertTrue(with_uq['uq'])
        self.assertIn('uncertainty', with_uq)
        for name in ('exemplars.json', 'metrics.xlsx', 'confusion_with_uq.csv', 'roc_without_uq_TN.csv',
                     'metrics_flat_without_uq.json', 'metrics_flat_with_uq.json', 'confusion_flat_with_uq.csv'):
            self.assertTrue((reports / name).is_file(), name)
        flat = json.loads((reports / 'metrics_flat_with_uq.json').read_text())
        self.assertEqual((flat['mode'], flat['T']), ('flat', 2))

        run('eval', config=self.config, T=5)
        self.assertEqual((reports / 'metrics_without_uq.json').read_bytes(), without_uq)
        self.assertEqual(json.loads((reports / 'metrics_with_uq.json').read_text())['T'], 5)

    def test_flat_baseline_off(self):
        config = write_config(self.dir / 'no_flat.json', self.out, model={'flat_baseline': False})
        output = run('train', config=config)
        self.assertFalse((self.out / 'model' / 'flat.spec.json').exists())
        self.assertNotIn('flat', json.loads((self.out / 'training_log.json').read_text()))
        self.assertNotIn('flat:', output)
        run('eval', config=config, T=2)
        self.assertFalse((self.out / 'reports' / 'metrics_flat_with_uq.json').exists())

    def test_eval_size_mismatch(self):
        run('train', config=self.config)
        config = write_config(self.dir / 'wide.json', self.out, dataset={'target_size': [12, 12]})
        with self.assertRaises(CommandError) as ctx:
            run('eval', config=config)
        self.assertEqual(ctx.exception.returncode, 2)

    def test_predict(self):
        run('train', config=self.config)
        image = str(self.out / 'data' / 'images' / 'TN_0000_CC.png')
        first = json.loads(run('predict', config=self.config, image=image))
        second = json.loads(run('predict', config=self.config, image=image))
        self.assertEqual(first, second)
        self.assertEqual(first['T'], 50)
        self.assertEqual(first['image'], image)
        self.assertEqual(first['classes'], ['TN', 'Luminal', 'HER2'])
        self.assertAlmostEqual(sum(first['probs']), 1.0, places=12)
        self.assertIn(first['label'], first['classes'])

        hard = json.loads(run('predict', config=self.config, image=image, T=3, mode='hard'))
        self.assertEqual((hard['T'], hard['mode']), (3, 'hard'))

    def test_predict_missing_image(self):
        run('train', config=self.config)
        with self.assertRaises(CommandError) as ctx:
            run('predict', config=self.config, image=str(self.dir / 'missing.png'))
        self.assertEqual(ctx.exception.returncode, 1)

    def test_missing_model(self):
        with self.assertRaises(CommandError) as ctx:
            run('eval', config=self.config, model=str(self.dir / 'nowhere'))
        self.assertEqual(ctx.exception.returncode, 1)


class ConfigErrorTests(CommandTestCase):

    def test_missing_config(self):
        with self.assertRaises(CommandError) as ctx:
            run('train', config=str(self.dir / 'missing.json'))
        self.assertEqual(ctx.exception.returncode, 1)

    def test_invalid_json(self):
        path = self.dir / 'broken.json'
        path.write_text('{"dataset": ')
        with self.assertRaises(CommandError) as ctx:
            run('train', config=str(path))
        self.assertEqual(ctx.exception.returncode, 2)

    def test_unknown_section(self):
        path = self.dir / 'extra.json'
        path.write_text(json.dumps({'scheduler': {}}))
        with self.assertRaises(CommandError) as ctx:
            run('gen-synthetic', config=str(path))
        self.assertEqual(ctx.exception.returncode, 2)


@tag('slow')
class EndToEndTests(SimpleTestCase):
    """Full pipeline on the default synthetic set: python manage.py test --tag slow"""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.dir = Path(tempfile.mkdtemp())
        cls.out = cls.dir / 'run'
        cls.sections = {
            'dataset': {
                'synthetic': {'counts': {'Luminal': 200, 'HER2': 60, 'TN': 40}, 'size': [16, 16], 'noise': 0.1},
                'target_size': [16, 16],
            },
            'model': {'backbone': 'none', 'widths': [64], 'dropout': 0.5},
            'training': {'epochs': {'stage1': 15, 'stage2': 20}, 'lr': 1e-3, 'batch_size': 32},
            'inference': {'T': 25},
        }
        cls.config = write_config(cls.dir / 'run.json', cls.out, **cls.sections)
        run('train', config=cls.config)
        run('eval', config=cls.config)
        cls.reports = {
            key: json.loads((cls.out / 'reports' / f'metrics_{key}.json').read_text())
            for key in ('without_uq', 'with_uq', 'flat_without_uq', 'flat_with_uq')
        }

    @classmethod
    def tearDownClass(cls):
        shutil.rmtree(cls.dir, ignore_errors=True)
        super().tearDownClass()

    def outputs(self):
        """Model and report files that must not change between identical runs."""
        files = list((self.out / 'model').iterdir()) + list((self.out / 'reports').iterdir())
        files.append(self.out / 'training_log.json')
        # openpyxl stamps the workbook with its creation time
        return {str(p.relative_to(self.out)): p.read_bytes() for p in files if p.suffix != '.xlsx'}

    def test_macro_auc(self):
        for key in ('without_uq', 'with_uq'):
            self.assertGreaterEqual(self.reports[key]['macro']['auc'], 0.9, key)

    def test_tn_auc_at_least_macro(self):
        for key in ('without_uq', 'with_uq'):
            report = self.reports[key]
            self.assertGreaterEqual(report['per_class']['TN']['auc'], report['macro']['auc'], key)

    def test_flat_baseline_reported(self):
        for key in ('flat_without_uq', 'flat_with_uq'):
            self.assertEqual(self.reports[key]['mode'], 'flat')
            self.assertEqual(self.reports[key]['n_samples'], self.reports['with_uq']['n_samples'])
            self.assertIsNotNone(self.reports[key]['macro']['auc'])

    def test_noisy_inputs_raise_entropy(self):
        noisy_data = self.dir / 'noisy'
        run('gen-synthetic', config=self.config, out=str(noisy_data), noise=0.5)
        sections = dict(self.sections, dataset=dict(self.sections['dataset'],
                                                    manifest=str(noisy_data / 'manifest.csv')))
        noisy_config = write_config(self.dir / 'noisy.json', self.dir / 'noisy_run', **sections)
        run('eval', config=noisy_config, model=str(self.out / 'model'))

        def mean_entropy(path):
            exemplars = json.loads(path.read_text())
            total = sum(e['count'] * e['mean_composed_entropy'] for e in exemplars.values() if e)
            return total / sum(e['count'] for e in exemplars.values() if e)

        clean = mean_entropy(self.out / 'reports' / 'exemplars.json')
        noisy = mean_entropy(self.dir / 'noisy_run' / 'reports' / 'exemplars.json')
        self.assertGreater(noisy, clean)

    def test_tn_template_is_confident(self):
        clean_data = self.dir / 'templates'
        run('gen-synthetic', config=self.config, out=str(clean_data), noise=0.0)
        image = str(clean_data / 'images' / 'TN_0000_CC.png')
        result = json.loads(run('predict', config=self.config, image=image))
        self.assertEqual(result['label'], 'TN')

        model = load_model(self.out / 'model')
        dataset = load_manifest(self.out / 'data' / 'manifest.csv')
        X, _ = load_features(dataset, model.target_size)
        entropies = [p.composed_entropy for p in predict_batch(model, X, MCConfig(T=25))]
        self.assertLess(result['composed_entropy'], float(np.median(entropies)))

    def test_rerun_is_byte_identical(self):
        first = self.outputs()
        run('train', config=self.config)
        run('eval', config=self.config)
        second = self.outputs()
        self.assertEqual(sorted(first), sorted(second))
        for name in first:
            self.assertEqual(first[name], second[name], name)
