"""
App/hierarchy/flat.py

Flat 3-class baseline: one network over TN / Luminal / HER2, trained with
the same engine, rebalancing and augmentation as the two stages and
reported beside the hierarchical model.

On disk it sits next to the stage files:

    <dir>/flat.spec.json   flat.params.bin   flat.meta.json
"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from App.data.features import load_features
from App.data.oversampling import rebalance
from App.data.records import CLASS_NAMES, Dataset
from App.exceptions import DataIOError, ShapeError, ValidationError
from App.nn.layers import NetworkSpec, load_spec, save_spec
from App.nn.tensors import ModelParams, check_param_shapes, load_params, save_params
from App.uncertainty.mc import MCConfig, deterministic_batch, mc_forward_batch

from .predict import stage_mc_config
from .training import StageConfig, fit_network, require_all_classes

logger = logging.getLogger(__name__)

FLAT_SPEC = 'flat.spec.json'
FLAT_PARAMS = 'flat.params.bin'
FLAT_META = 'flat.meta.json'


@dataclass(frozen=True, eq=False)
class FlatModel:
    spec: NetworkSpec
    params: ModelParams
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.spec.n_classes != len(CLASS_NAMES):
            raise ValidationError(f"the flat baseline needs a {len(CLASS_NAMES)}-class head, "
                                  f"got {self.spec.n_classes}")
        check_param_shapes(self.spec, self.params)

    @property
    def input_shape(self):
        return self.spec.input_shape

    @property
    def target_size(self):
        return self.input_shape[:2]

    @property
    def classes(self):
        return CLASS_NAMES


def train_flat(train_set: Dataset, config: StageConfig = None) -> FlatModel:
    config = config or StageConfig()
    require_all_classes(train_set, 'train_flat')
    logger.info("Flat baseline START")

    policy = config.rebalance
    rebalanced = rebalance(train_set, policy, config.target_size, seed=config.seed) if policy else train_set
    X, targets = load_features(rebalanced, config.target_size)
    spec, params, history, accuracy = fit_network('flat', X, targets, len(CLASS_NAMES), config)

    meta = {
        'samples': len(rebalanced),
        'train_counts': train_set.counts_by_name(),
        'rebalanced_counts': rebalanced.counts_by_name(),
        'synthetic': sum(1 for r in rebalanced if r.synthetic),
        'duplicates': sum(1 for r in rebalanced if r.duplicate),
        'history': [float(v) for v in history],
        'training_accuracy': accuracy,
        'seed': config.seed,
        'config': config.to_dict(),
    }
    logger.info("Flat baseline DONE: samples=%d accuracy=%.4f", len(rebalanced), accuracy)
    return FlatModel(spec=spec, params=params, metadata=meta)


def predict_flat_batch(model: FlatModel, X, mc: Optional[MCConfig] = None):
    """One UncertaintyReport over (TN, Luminal, HER2) per row of X."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != len(model.input_shape) + 1 or X.shape[1:] != model.input_shape:
        raise ShapeError(f"inputs of shape {X.shape[1:]} do not match the model input {model.input_shape}")
    if X.shape[0] == 0:
        return []
    if mc is None:
        return deterministic_batch(model.spec, model.params, X, CLASS_NAMES)
    return mc_forward_batch(model.spec, model.params, X, stage_mc_config(mc, 'flat'), CLASS_NAMES)


def has_flat(directory):
    directory = Path(directory)
    return all((directory / name).is_file() for name in (FLAT_SPEC, FLAT_PARAMS, FLAT_META))


def save_flat(model: FlatModel, directory):
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
        save_spec(model.spec, directory / FLAT_SPEC)
        save_params(model.params, directory / FLAT_PARAMS)
        meta = dict(model.metadata, class_order=list(CLASS_NAMES))
        (directory / FLAT_META).write_text(json.dumps(meta, indent=2, sort_keys=True) + '\n')
    except OSError as e:
        raise DataIOError(f"cannot write the flat baseline to {directory}: {e}") from e
    logger.info("Saved flat baseline to %s", directory)
    return directory


def load_flat(directory) -> FlatModel:
    directory = Path(directory)
    try:
        meta = json.loads((directory / FLAT_META).read_text())
    except OSError as e:
        raise DataIOError(f"cannot read {directory / FLAT_META}: {e}") from e
    except json.JSONDecodeError as e:
        raise ValidationError(f"{directory / FLAT_META} is not valid JSON: {e}") from e
    if tuple(meta.get('class_order', ())) != CLASS_NAMES:
        raise ValidationError(f"flat class order {meta.get('class_order')} does not match {list(CLASS_NAMES)}")
    spec = load_spec(directory / FLAT_SPEC)
    model = FlatModel(spec=spec, params=load_params(directory / FLAT_PARAMS, spec), metadata=meta)
    logger.info("Loaded flat baseline from %s", directory)
    return model
