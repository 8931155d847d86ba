"""
App/nn/training.py

Mini-batch training loop: seeded per-epoch shuffling, dropout in train
mode, cross-entropy + L2 loss, Adam updates.

Randomness comes from three derived streams per epoch/batch (shuffle,
dropout, augment), so a fixed seed reproduces the loss history exactly.
"""
import logging
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np

from App.exceptions import LabelError, NumericError, ValidationError
from App.seeding import derive_rng

from .engine import backward, forward
from .losses import cross_entropy_batch, l2_penalty
from .optim import AdamState, adam_step
from .tensors import ModelParams, add_params, as_tensor, check_param_shapes

logger = logging.getLogger(__name__)

L2_SCOPES = ('classifier', 'all')


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-4
    batch_size: int = 32
    epochs: int = 10
    reg: float = 1e-6
    seed: int = 0
    l2_scope: str = 'classifier'

    def validate(self):
        if self.lr < 0:
            raise ValidationError(f"lr must be >= 0, got {self.lr}")
        if int(self.batch_size) != self.batch_size or self.batch_size <= 0:
            raise ValidationError(f"batch_size must be a positive integer, got {self.batch_size}")
        if int(self.epochs) != self.epochs or self.epochs <= 0:
            raise ValidationError(f"epochs must be a positive integer, got {self.epochs}")
        if self.reg < 0:
            raise ValidationError(f"reg must be >= 0, got {self.reg}")
        if self.l2_scope not in L2_SCOPES:
            raise ValidationError(f"l2_scope must be one of {L2_SCOPES}, got '{self.l2_scope}'")

    def to_dict(self):
        return {
            'lr': self.lr, 'batch_size': self.batch_size, 'epochs': self.epochs,
            'reg': self.reg, 'seed': self.seed, 'l2_scope': self.l2_scope,
        }


def train(spec, params: ModelParams, X, y, config: TrainConfig,
          transform: Optional[Callable] = None):
    """
    Train a copy of params on (X, y).

    Args:
        spec: NetworkSpec
        params: starting parameters (not modified)
        X: (N, *spec.input_shape) inputs
        y: (N,) integer labels
        config: TrainConfig
        transform: optional callable(batch, rng) -> batch applied to every
            training batch (on-the-fly augmentation)

    Returns:
        (trained params, per-epoch mean loss list)
    """
    config.validate()
    check_param_shapes(spec, params)
    X = as_tensor(X, name='training inputs')
    y = np.asarray(y, dtype=int)
    if X.shape[0] == 0:
        raise ValidationError("training dataset is empty")
    if X.shape[1:] != spec.input_shape:
        raise ValidationError(f"training inputs have shape {X.shape[1:]}, spec expects {spec.input_shape}")
    if y.shape != (X.shape[0],):
        raise ValidationError(f"{y.shape[0]} labels for {X.shape[0]} samples")
    if np.any(y < 0) or np.any(y >= spec.n_classes):
        raise LabelError(f"labels must lie in [0, {spec.n_classes})")
    present = np.unique(y)
    if present.size < 2:
        raise LabelError(f"training dataset contains a single class ({present.tolist()})")

    layer_filter = spec.classifier_layers() if config.l2_scope == 'classifier' else None
    n = X.shape[0]
    state = AdamState.initial(params)
    current = params
    history: List[float] = []

    logger.info("Training START samples=%d epochs=%d batch=%d lr=%g reg=%g",
                n, config.epochs, config.batch_size, config.lr, config.reg)
    for epoch in range(config.epochs):
        order = derive_rng(config.seed, 'shuffle', epoch).permutation(n)
        total = 0.0
        for b, start in enumerate(range(0, n, config.batch_size)):
            idx = order[start:start + config.batch_size]
            xb = X[idx]
            if transform is not None:
                xb = transform(xb, derive_rng(config.seed, 'augment', epoch, b))
            out, trace = forward(spec, current, xb, mode='train',
                                 rng=derive_rng(config.seed, 'dropout', epoch, b))
            data_loss, dprobs = cross_entropy_batch(out, y[idx])
            penalty, reg_grads = l2_penalty(current, config.reg, layer_filter)
            batch_loss = data_loss + penalty
            if not np.isfinite(batch_loss):
                raise NumericError(f"loss became non-finite at epoch {epoch + 1}, batch {b}")
            grads = add_params(backward(spec, current, trace, dprobs), reg_grads)
            current, state = adam_step(state, current, grads, config.lr)
            total += batch_loss * len(idx)
        history.append(total / n)
        logger.info("epoch %d/%d loss=%.6f", epoch + 1, config.epochs, history[-1])
    logger.info("Training DONE final_loss=%.6f", history[-1])
    return current, history


def training_accuracy(spec, params: ModelParams, X, y):
    out, _ = forward(spec, params, X, mode='eval')
    return float(np.mean(np.argmax(out, axis=1) == np.asarray(y)))
