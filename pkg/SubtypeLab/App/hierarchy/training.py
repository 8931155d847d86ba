"""
App/hierarchy/training.py

Two independent training lines: stage 1 on TN vs non-TN, stage 2 on
Luminal vs HER2 (ground-truth non-TN samples only). Each line rebalances
the training split for itself, then trains with per-epoch augmentation.
"""
import logging
from dataclasses import dataclass, field
from functools import partial
from typing import Optional, Tuple, Union

from App.data.features import load_features
from App.data.imaging import AugmentConfig, augment_batch
from App.data.oversampling import RebalancePolicy, rebalance
from App.data.records import CLASS_ORDER, Dataset, SubtypeLabel
from App.exceptions import LabelError, SubtypeLabError
from App.nn.initializers import init_params
from App.nn.layers import build_network_spec
from App.nn.training import TrainConfig, train, training_accuracy

from .model import StageModel, TwoStageModel
from .stages import relabel_stage1, relabel_stage2

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StageConfig:
    training: TrainConfig = field(default_factory=TrainConfig)
    widths: Tuple[int, ...] = (128, 128)
    dropout: float = 0.5
    backbone: Union[str, tuple] = 'default'
    backbone_dropout: float = 0.0
    target_size: Tuple[int, int] = (32, 32)
    augment: Optional[AugmentConfig] = field(default_factory=AugmentConfig)
    rebalance: Optional[RebalancePolicy] = field(default_factory=RebalancePolicy)

    @property
    def seed(self):
        return self.training.seed

    def to_dict(self):
        return {
            'training': self.training.to_dict(),
            'widths': list(self.widths),
            'dropout': self.dropout,
            'backbone': self.backbone if isinstance(self.backbone, str) else list(self.backbone),
            'backbone_dropout': self.backbone_dropout,
            'target_size': list(self.target_size),
            'augment': self.augment.to_dict() if self.augment else None,
            'rebalance': self.rebalance.to_dict() if self.rebalance else None,
        }


def require_all_classes(train_set: Dataset, context):
    missing = [label.value for label in CLASS_ORDER if train_set.class_counts[label] == 0]
    if missing:
        raise LabelError(f"training data is missing class(es): {', '.join(missing)}", context=context)


def fit_network(name, X, targets, n_classes, config: StageConfig):
    """Build, initialize and train one network; returns (spec, params, history, training accuracy)."""
    spec = build_network_spec(
        X.shape[1:], backbone=config.backbone, widths=config.widths, dropout=config.dropout,
        n_classes=n_classes, backbone_dropout=config.backbone_dropout,
    )
    params = init_params(spec, config.seed)
    transform = partial(augment_batch, config=config.augment) if config.augment else None
    try:
        params, history = train(spec, params, X, targets, config.training, transform)
    except SubtypeLabError as e:
        e.context = e.context or name
        raise
    return spec, params, history, training_accuracy(spec, params, X, targets)


def _train_stage(name, binary_of, train_set: Dataset, config: StageConfig, policy):
    logger.info("Stage %s START", name)
    rebalanced = rebalance(train_set, policy, config.target_size, seed=config.seed) if policy else train_set
    binary = binary_of(rebalanced)
    X, _ = load_features(binary.dataset, config.target_size)
    spec, params, history, accuracy = fit_network(name, X, binary.targets, 2, config)

    meta = {
        'samples': len(binary),
        'counts': binary.counts(),
        'rebalanced_counts': rebalanced.counts_by_name(),
        'synthetic': sum(1 for r in rebalanced if r.synthetic),
        'duplicates': sum(1 for r in rebalanced if r.duplicate),
        'history': [float(v) for v in history],
        'training_accuracy': accuracy,
        'config': config.to_dict(),
    }
    logger.info("Stage %s DONE: samples=%d counts=%s accuracy=%.4f", name, len(binary), binary.counts(), accuracy)
    return StageModel(spec=spec, params=params, classes=binary.classes), meta


def train_two_stage(train_set: Dataset, stage1_config: StageConfig = None,
                    stage2_config: StageConfig = None) -> TwoStageModel:
    stage1_config = stage1_config or StageConfig()
    stage2_config = stage2_config or StageConfig()
    require_all_classes(train_set, 'train_two_stage')

    stage1, meta1 = _train_stage('stage1', relabel_stage1, train_set, stage1_config, stage1_config.rebalance)
    # stage 2 rebalances Luminal against HER2 only
    non_tn = Dataset(tuple(r for r in train_set if r.label != SubtypeLabel.TN))
    policy2 = stage2_config.rebalance.without(SubtypeLabel.TN) if stage2_config.rebalance else None
    stage2, meta2 = _train_stage('stage2', relabel_stage2, non_tn, stage2_config, policy2)

    metadata = {
        'train_counts': train_set.counts_by_name(),
        'stage1': meta1,
        'stage2': meta2,
        'seeds': {'stage1': stage1_config.seed, 'stage2': stage2_config.seed},
    }
    return TwoStageModel(stage1=stage1, stage2=stage2, metadata=metadata)
