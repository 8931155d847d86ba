"""
App/management/commands/_common.py

Shared pieces of the gen-synthetic / train / eval / predict commands:
config loading, dataset resolution and the exit-code contract
(SubtypeLabError.exit_code -> CommandError returncode).
"""
import logging
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from App.config import RunConfig
from App.data.manifest import load_manifest
from App.data.splitting import split
from App.data.synthetic import generate_synthetic
from App.exceptions import DataIOError, SubtypeLabError

logger = logging.getLogger(__name__)


class SubtypeLabCommand(BaseCommand):
    """Base command: subclasses implement run(config, **options)."""

    stage_name = 'command'

    def add_arguments(self, parser):
        parser.add_argument('--config', type=str, help='Run configuration (JSON)')
        parser.add_argument('--seed', type=int, help='Override every seed in the config')
        parser.add_argument('--out', type=str, help='Output directory')

    def load_config(self, options, require_manifest=False):
        overrides = {
            'seed': options.get('seed'),
            'T': options.get('T'),
            'mode': options.get('mode'),
            'out': options.get('out'),
        }
        config = RunConfig.from_file(options.get('config'), overrides)
        return config.validate(require_manifest=require_manifest)

    def banner(self, title):
        self.stdout.write(self.style.SUCCESS('=' * 60))
        self.stdout.write(self.style.SUCCESS(title))
        self.stdout.write(self.style.SUCCESS('=' * 60))

    def handle(self, *args, **options):
        try:
            self.run(**options)
        except SubtypeLabError as e:
            logger.error("%s failed: %s", self.stage_name, e, exc_info=True)
            raise CommandError(f"{self.stage_name}: {e}", returncode=e.exit_code) from e

    def run(self, **options):
        raise NotImplementedError


def data_dir(config):
    return config.output_dir / 'data'


def resolve_manifest(config, generate=True):
    """Configured manifest, or the synthetic set under <output>/data (generated on first use)."""
    if config.dataset.get('manifest'):
        return Path(config.dataset['manifest'])
    manifest = data_dir(config) / 'manifest.csv'
    if not manifest.is_file() and generate:
        synthetic = config.dataset['synthetic']
        generate_synthetic(
            data_dir(config), counts=synthetic['counts'], size=tuple(synthetic['size']),
            noise=float(synthetic['noise']), seed=int(config.dataset['seed']),
        )
    return manifest


def load_split(config):
    """(manifest path, train, test) reproduced from the config's split settings."""
    manifest = resolve_manifest(config)
    dataset = load_manifest(manifest)
    ds = config.dataset
    train, test = split(dataset, train_fraction=float(ds['train_fraction']),
                        seed=int(ds['seed']), grouping=ds['grouping'])
    return manifest, train, test


def model_dir(config, options):
    return Path(options['model']) if options.get('model') else config.output_dir / 'model'


def ensure_dir(path):
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise DataIOError(f"cannot create directory {path}: {e}") from e
    return path
