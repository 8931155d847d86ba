"""
App/config.py

RunConfig: the single JSON run configuration shared by every command.

Resolution order: settings.SUBTYPELAB_DEFAULTS, then the JSON file, then
command-line overrides (--seed, --T, --mode, --out).

Example file:
    {
      "dataset": {"manifest": "data/manifest.csv", "target_size": [32, 32]},
      "training": {"epochs": {"stage1": 15, "stage2": 20}, "lr": 0.001},
      "inference": {"T": 25}
    }
"""
import copy
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from django.conf import settings

from App.data.imaging import AugmentConfig
from App.data.oversampling import METHODS, RebalancePolicy
from App.data.splitting import GROUPINGS
from App.exceptions import DataIOError, ValidationError
from App.hierarchy.compose import MODES
from App.hierarchy.training import StageConfig
from App.nn.training import L2_SCOPES, TrainConfig
from App.seeding import derive_seed
from App.uncertainty.mc import MCConfig

logger = logging.getLogger(__name__)

SECTIONS = ('dataset', 'model', 'training', 'augment', 'rebalance', 'inference', 'output')


def _merge(base, update):
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict) and key not in ('counts', 'methods', 'epochs'):
            _merge(base[key], value)
        else:
            base[key] = copy.deepcopy(value)
    return base


def _positive_int(value, name):
    if isinstance(value, bool) or not isinstance(value, int) or value <= 0:
        raise ValidationError(f"{name} must be a positive integer, got {value!r}")
    return value


@dataclass(frozen=True)
class RunConfig:
    dataset: dict
    model: dict
    training: dict
    augment: dict
    rebalance: dict
    inference: dict
    output: dict
    source: Optional[str] = None

    @classmethod
    def from_dict(cls, data, overrides=None, base_dir=None, source=None):
        merged = copy.deepcopy(settings.SUBTYPELAB_DEFAULTS)
        unknown = sorted(set(data) - set(SECTIONS))
        if unknown:
            raise ValidationError(f"unknown config section(s): {unknown}")
        _merge(merged, data)

        manifest = merged['dataset'].get('manifest')
        if manifest and base_dir is not None and not Path(manifest).is_absolute():
            merged['dataset']['manifest'] = str(Path(base_dir) / manifest)

        overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
        if 'seed' in overrides:
            for section in ('dataset', 'training', 'inference'):
                merged[section]['seed'] = int(overrides['seed'])
        if 'T' in overrides:
            merged['inference']['T'] = overrides['T']
        if 'mode' in overrides:
            merged['inference']['mode'] = overrides['mode']
        if 'out' in overrides:
            merged['output']['directory'] = str(overrides['out'])

        return cls(source=source, **{s: merged[s] for s in SECTIONS})

    @classmethod
    def from_file(cls, path=None, overrides=None):
        """Defaults only when path is None."""
        if path is None:
            return cls.from_dict({}, overrides)
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except FileNotFoundError as e:
            raise DataIOError(f"config file not found: {path}") from e
        except OSError as e:
            raise DataIOError(f"cannot read config {path}: {e}") from e
        except json.JSONDecodeError as e:
            raise ValidationError(f"config {path} is not valid JSON: {e}") from e
        if not isinstance(data, dict):
            raise ValidationError(f"config {path} must hold a JSON object")
        return cls.from_dict(data, overrides, base_dir=path.parent, source=str(path))

    # ------------------------------------------------------------------
    # Validation
    # ------------------------------------------------------------------

    def validate(self, require_manifest=False):
        ds = self.dataset
        if not 0.0 < float(ds['train_fraction']) < 1.0:
            raise ValidationError(f"dataset.train_fraction must be in (0, 1), got {ds['train_fraction']}")
        if ds['grouping'] not in GROUPINGS:
            raise ValidationError(f"dataset.grouping must be one of {GROUPINGS}, got '{ds['grouping']}'")
        if len(ds['target_size']) != 2:
            raise ValidationError(f"dataset.target_size must be [height, width], got {ds['target_size']}")
        for extent in ds['target_size']:
            _positive_int(extent, 'dataset.target_size')
        if ds.get('manifest'):
            if not Path(ds['manifest']).is_file():
                raise DataIOError(f"manifest not found: {ds['manifest']}")
        elif require_manifest:
            raise ValidationError("dataset.manifest is required")
        synthetic = ds['synthetic']
        if float(synthetic['noise']) < 0:
            raise ValidationError(f"dataset.synthetic.noise must be >= 0, got {synthetic['noise']}")

        md = self.model
        if not 0.0 <= float(md['dropout']) < 1.0:
            raise ValidationError(f"model.dropout must be in [0, 1), got {md['dropout']}")
        if not 0.0 <= float(md['backbone_dropout']) < 1.0:
            raise ValidationError(f"model.backbone_dropout must be in [0, 1), got {md['backbone_dropout']}")
        for width in md['widths']:
            _positive_int(width, 'model.widths')
        if not isinstance(md['flat_baseline'], bool):
            raise ValidationError(f"model.flat_baseline must be true or false, got {md['flat_baseline']!r}")

        tr = self.training
        if float(tr['lr']) <= 0:
            raise ValidationError(f"training.lr must be positive, got {tr['lr']}")
        _positive_int(tr['batch_size'], 'training.batch_size')
        if float(tr['reg']) < 0:
            raise ValidationError(f"training.reg must be >= 0, got {tr['reg']}")
        if tr['l2_scope'] not in L2_SCOPES:
            raise ValidationError(f"training.l2_scope must be one of {L2_SCOPES}, got '{tr['l2_scope']}'")
        for stage in ('stage1', 'stage2', 'flat'):
            _positive_int(self.epochs(stage), f'training.epochs.{stage}')

        for label, method in self.rebalance['methods'].items():
            if method not in METHODS:
                raise ValidationError(f"rebalance.methods.{label} must be one of {METHODS}, got '{method}'")

        inf = self.inference
        _positive_int(inf['T'], 'inference.T')
        if inf['mode'] not in MODES:
            raise ValidationError(f"inference.mode must be one of {MODES}, got '{inf['mode']}'")

        # constructing the typed configs runs their own checks
        self.augment_config()
        self.rebalance_policy()
        return self

    # ------------------------------------------------------------------
    # Typed views
    # ------------------------------------------------------------------

    @property
    def target_size(self):
        return tuple(int(v) for v in self.dataset['target_size'])

    @property
    def output_dir(self):
        return Path(self.output['directory'])

    @property
    def flat_baseline(self):
        return bool(self.model['flat_baseline'])

    def epochs(self, stage):
        """stage is 1, 2, 'stage1', 'stage2' or 'flat'."""
        key = stage if isinstance(stage, str) else f"stage{int(stage)}"
        if key not in ('stage1', 'stage2', 'flat'):
            raise ValidationError(f"unknown stage {stage!r}")
        epochs = self.training['epochs']
        if not isinstance(epochs, dict):
            return epochs
        if key == 'flat' and key not in epochs:
            # the flat baseline trains as long as the longer stage
            return max(self.epochs('stage1'), self.epochs('stage2'))
        if key not in epochs:
            raise ValidationError(f"training.epochs has no entry for {key}")
        return epochs[key]

    def stage_seed(self, stage):
        return derive_seed(self.training['seed'], 'stage', stage)

    def augment_config(self):
        aug = self.augment
        if not aug.get('enabled', True):
            return None
        return AugmentConfig(
            rotation_range=tuple(aug['rotation_range']),
            horizontal_flip=bool(aug['horizontal_flip']),
            vertical_flip=bool(aug['vertical_flip']),
        )

    def rebalance_policy(self):
        return RebalancePolicy.from_dict(self.rebalance)

    def stage_config(self, stage):
        tr, md = self.training, self.model
        training = TrainConfig(
            lr=float(tr['lr']), batch_size=int(tr['batch_size']), epochs=int(self.epochs(stage)),
            reg=float(tr['reg']), seed=self.stage_seed(stage), l2_scope=tr['l2_scope'],
        )
        backbone = md['backbone'] if isinstance(md['backbone'], str) else tuple(md['backbone'])
        return StageConfig(
            training=training,
            widths=tuple(int(w) for w in md['widths']),
            dropout=float(md['dropout']),
            backbone=backbone,
            backbone_dropout=float(md['backbone_dropout']),
            target_size=self.target_size,
            augment=self.augment_config(),
            rebalance=self.rebalance_policy(),
        )

    def mc_config(self):
        inf = self.inference
        return MCConfig(T=int(inf['T']), seed=int(inf['seed']))

    def to_dict(self):
        return {s: copy.deepcopy(getattr(self, s)) for s in SECTIONS}
