"""
App/nn/losses.py

Cross-entropy loss (binary for the two-stage heads) and L2 regularization.
"""
import numpy as np

from App.exceptions import LabelError, NumericError, ValidationError

from .distributions import ClassDistribution
from .tensors import ModelParams

PROB_CLAMP = 1e-12


def _probabilities(predicted):
    if isinstance(predicted, ClassDistribution):
        return predicted.probabilities
    return np.asarray(predicted, dtype=np.float64)


def cross_entropy(predicted, target):
    """-ln p(target) with p clamped to [1e-12, 1 - 1e-12]."""
    probs = _probabilities(predicted)
    if probs.ndim != 1:
        raise ValidationError(f"expected one distribution, got shape {probs.shape}")
    if not (0 <= int(target) < probs.shape[0]) or int(target) != target:
        raise LabelError(f"target index {target} out of range for {probs.shape[0]} classes")
    p = np.clip(probs[int(target)], PROB_CLAMP, 1.0 - PROB_CLAMP)
    return float(-np.log(p))


def bce_loss(predicted, target):
    probs = _probabilities(predicted)
    if probs.shape != (2,):
        raise ValidationError(f"binary cross-entropy needs 2 classes, got shape {probs.shape}")
    return cross_entropy(probs, target)


def cross_entropy_batch(probs, targets):
    """
    Mean loss over a batch and its gradient with respect to the probabilities.

    Args:
        probs: (N, C) softmax outputs
        targets: (N,) integer class indices

    Returns:
        (loss, dLoss/dprobs)
    """
    probs = np.asarray(probs, dtype=np.float64)
    targets = np.asarray(targets)
    n, c = probs.shape
    if targets.shape != (n,):
        raise ValidationError(f"{targets.shape[0] if targets.ndim else 0} targets for {n} predictions")
    if np.any(targets < 0) or np.any(targets >= c):
        raise LabelError(f"target index out of range for {c} classes")
    rows = np.arange(n)
    picked = probs[rows, targets]
    clamped = np.clip(picked, PROB_CLAMP, 1.0 - PROB_CLAMP)
    loss = float(-np.mean(np.log(clamped)))
    if not np.isfinite(loss):
        raise NumericError("cross-entropy loss is not finite")
    grad = np.zeros_like(probs)
    inside = (picked > PROB_CLAMP) & (picked < 1.0 - PROB_CLAMP)
    grad[rows[inside], targets[inside]] = -1.0 / (n * picked[inside])
    return loss, grad


def l2_penalty(params: ModelParams, reg, layer_filter=None):
    """
    reg * sum(w^2) over the weights of the selected layers (biases excluded).

    Args:
        params: model parameters
        reg: regularization strength, >= 0
        layer_filter: iterable of layer indices or a predicate on the index;
            None selects every parametric layer

    Returns:
        (penalty, gradient contribution shaped like params)
    """
    if reg < 0:
        raise ValidationError(f"regularization must be >= 0, got {reg}")
    if layer_filter is None:
        selected = set(params)
    elif callable(layer_filter):
        selected = {i for i in params if layer_filter(i)}
    else:
        selected = set(layer_filter)

    penalty = 0.0
    grads: ModelParams = {}
    for i, layer in params.items():
        grads[i] = {k: np.zeros_like(t) for k, t in layer.items()}
        if i in selected and reg:
            W = layer['W']
            penalty += reg * float(np.sum(W * W))
            grads[i]['W'] = 2.0 * reg * W
    return penalty, grads
