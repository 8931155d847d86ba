"""
App/hierarchy/predict.py

Hierarchical inference: both stages (MC dropout or a single deterministic
pass), composed into a 3-class distribution with its entropy.
"""
import logging
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from App.data.records import SubtypeLabel
from App.exceptions import ShapeError, ValidationError
from App.nn.distributions import ClassDistribution
from App.seeding import derive_seed
from App.uncertainty.mc import (
    MCConfig,
    UncertaintyReport,
    deterministic_batch,
    mc_forward_batch,
    predictive_entropy,
)

from .compose import MODES, compose_distribution, compose_hard, stage1_routes_to_tn
from .model import TwoStageModel

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class HierarchicalPrediction:
    composed: ClassDistribution
    stage1_report: UncertaintyReport
    stage2_report: Optional[UncertaintyReport]
    composed_entropy: float
    predicted_label: SubtypeLabel
    mode: str = 'soft'
    T: Optional[int] = None

    @property
    def stage2_skipped(self):
        return self.stage2_report is None

    def to_dict(self):
        return {
            'label': self.predicted_label.value,
            'probs': [float(p) for p in self.composed.probabilities],
            'classes': list(self.composed.classes),
            'composed_entropy': float(self.composed_entropy),
            'stage1': self.stage1_report.to_dict(),
            'stage2': self.stage2_report.to_dict() if self.stage2_report else None,
            'mode': self.mode,
            'T': self.T,
        }


def stage_mc_config(mc: MCConfig, stage):
    """Each stage draws its dropout masks from its own stream."""
    return replace(mc, seed=derive_seed(mc.seed, 'stage', stage))


def _stage_reports(stage_model, X, mc, stage):
    if mc is None:
        return deterministic_batch(stage_model.spec, stage_model.params, X, stage_model.classes)
    return mc_forward_batch(stage_model.spec, stage_model.params, X,
                            stage_mc_config(mc, stage), stage_model.classes)


def _assemble(r1, r2, mode, T):
    if mode == 'hard' and stage1_routes_to_tn(r1.mean):
        composed = compose_hard(r1.mean)
        r2 = None
    else:
        composed = compose_distribution(r1.mean, r2.mean)
    return HierarchicalPrediction(
        composed=composed,
        stage1_report=r1,
        stage2_report=r2,
        composed_entropy=predictive_entropy(composed),
        predicted_label=SubtypeLabel.from_index(composed.argmax()),
        mode=mode,
        T=T,
    )


def predict_batch(model: TwoStageModel, X, mc: Optional[MCConfig] = None, mode='soft'):
    """One HierarchicalPrediction per row of X (N, H, W, 3)."""
    if mode not in MODES:
        raise ValidationError(f"mode must be one of {MODES}, got '{mode}'")
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != len(model.input_shape) + 1 or X.shape[1:] != model.input_shape:
        raise ShapeError(f"inputs of shape {X.shape[1:]} do not match the model input {model.input_shape}")
    if X.shape[0] == 0:
        return []

    reports1 = _stage_reports(model.stage1, X, mc, 1)
    if mode == 'hard':
        routed = [i for i, r in enumerate(reports1) if not stage1_routes_to_tn(r.mean)]
        reports2 = [None] * len(reports1)
        for i, r in zip(routed, _stage_reports(model.stage2, X[routed], mc, 2) if routed else []):
            reports2[i] = r
    else:
        reports2 = _stage_reports(model.stage2, X, mc, 2)

    T = mc.T if mc is not None else None
    predictions = [_assemble(r1, r2, mode, T) for r1, r2 in zip(reports1, reports2)]
    logger.debug("Predicted %d samples (mode=%s, T=%s)", len(predictions), mode, T)
    return predictions


def predict(model: TwoStageModel, x, mc: Optional[MCConfig] = None, mode='soft') -> HierarchicalPrediction:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != model.input_shape:
        raise ShapeError(f"input of shape {x.shape} does not match the model input {model.input_shape}")
    return predict_batch(model, x[None, ...], mc, mode)[0]
