"""
App/hierarchy package

Two-stage subtype classifier: TN vs rest, then Luminal vs HER2, composed
into one 3-class distribution.
"""

from .compose import compose_distribution, compose_hard
from .flat import FlatModel, load_flat, predict_flat_batch, save_flat, train_flat
from .model import StageModel, TwoStageModel, load_model, save_model
from .predict import HierarchicalPrediction, predict, predict_batch
from .stages import STAGE1_CLASSES, STAGE2_CLASSES, BinaryDataset, relabel_stage1, relabel_stage2
from .training import StageConfig, train_two_stage

__all__ = [
    'compose_distribution',
    'compose_hard',
    'StageModel',
    'TwoStageModel',
    'load_model',
    'save_model',
    'HierarchicalPrediction',
    'predict',
    'predict_batch',
    'STAGE1_CLASSES',
    'STAGE2_CLASSES',
    'BinaryDataset',
    'relabel_stage1',
    'relabel_stage2',
    'FlatModel',
    'load_flat',
    'predict_flat_batch',
    'save_flat',
    'train_flat',
    'StageConfig',
    'train_two_stage',
]
