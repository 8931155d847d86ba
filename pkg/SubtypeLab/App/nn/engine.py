"""
App/nn/engine.py

Forward and reverse passes over a NetworkSpec.

Modes:
    eval  - dropout is the identity
    train - inverted dropout: drop with probability p, scale survivors 1/(1-p)
    mc    - same masks as train, used at inference for Monte-Carlo passes

A forward pass returns a ForwardTrace holding every layer input and the
dropout masks it drew; backward() consumes that trace, so gradients always
flow through the exact masks of the pass they belong to. Passing masks= to
forward() freezes them (used by gradient_check).
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from App.exceptions import NumericError, ShapeError, ValidationError

from .distributions import ClassDistribution
from .tensors import ModelParams, as_tensor, check_param_shapes, copy_params

logger = logging.getLogger(__name__)

MODES = ('train', 'eval', 'mc')


@dataclass
class ForwardTrace:
    mode: str
    batched: bool
    layer_kinds: tuple
    activations: List[np.ndarray]           # activations[i] is the input of layer i; last is the output
    masks: Dict[int, np.ndarray] = field(default_factory=dict)
    pool_indices: Dict[int, np.ndarray] = field(default_factory=dict)

    @property
    def output(self):
        return self.activations[-1]

    @property
    def logits(self):
        """Input of the softmax head (pre-softmax scores)."""
        return self.activations[-2]


# ---------------------------------------------------------------------------
# Softmax
# ---------------------------------------------------------------------------

def softmax_rows(z):
    shifted = z - np.max(z, axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=-1, keepdims=True)


def softmax(logits, classes=None) -> ClassDistribution:
    z = np.asarray(logits, dtype=np.float64)
    if z.ndim != 1 or z.shape[0] < 2:
        raise ValidationError(f"softmax needs a vector of >= 2 logits, got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        raise NumericError(f"non-finite logits: {z}")
    if classes is None:
        classes = tuple(str(c) for c in range(z.shape[0]))
    return ClassDistribution(softmax_rows(z), tuple(classes))


# ---------------------------------------------------------------------------
# Layer kernels
# ---------------------------------------------------------------------------

def _conv_windows(x, k, s):
    # (N, H-k+1, W-k+1, C, k, k) strided view, subsampled by stride
    return sliding_window_view(x, (k, k), axis=(1, 2))[:, ::s, ::s]


def conv2d_forward(x, W, b, stride):
    k = W.shape[0]
    windows = _conv_windows(x, k, stride)
    # contract C, kh, kw against W[kh, kw, C, F]
    return np.tensordot(windows, W, axes=([3, 4, 5], [2, 0, 1])) + b


def conv2d_backward(x, W, stride, g):
    k = W.shape[0]
    windows = _conv_windows(x, k, stride)
    dW = np.tensordot(windows, g, axes=([0, 1, 2], [0, 1, 2])).transpose(1, 2, 0, 3)
    db = g.sum(axis=(0, 1, 2))
    dx = np.zeros_like(x)
    h_out, w_out = g.shape[1], g.shape[2]
    for i in range(k):
        for j in range(k):
            dx[:, i:i + stride * (h_out - 1) + 1:stride, j:j + stride * (w_out - 1) + 1:stride, :] += g @ W[i, j].T
    return dx, dW, db


def maxpool_forward(x, window):
    n, h, w, c = x.shape
    ho, wo = h // window, w // window
    blocks = (
        x[:, :ho * window, :wo * window, :]
        .reshape(n, ho, window, wo, window, c)
        .transpose(0, 1, 3, 5, 2, 4)
        .reshape(n, ho, wo, c, window * window)
    )
    idx = np.argmax(blocks, axis=-1)
    out = np.take_along_axis(blocks, idx[..., None], axis=-1)[..., 0]
    return out, idx


def maxpool_backward(x, window, idx, g):
    n, h, w, c = x.shape
    ho, wo = g.shape[1], g.shape[2]
    blocks = np.zeros((n, ho, wo, c, window * window))
    np.put_along_axis(blocks, idx[..., None], g[..., None], axis=-1)
    dx = np.zeros_like(x)
    dx[:, :ho * window, :wo * window, :] = (
        blocks.reshape(n, ho, wo, c, window, window)
        .transpose(0, 1, 4, 2, 5, 3)
        .reshape(n, ho * window, wo * window, c)
    )
    return dx


def dropout_mask(shape, rate, rng):
    """Inverted-dropout scale mask: 0 for dropped units, 1/(1-p) for kept ones."""
    keep = rng.random(shape) >= rate
    return keep / (1.0 - rate)


# ---------------------------------------------------------------------------
# Forward / backward
# ---------------------------------------------------------------------------

def _batch_input(spec, x):
    x = as_tensor(x, name='input')
    if x.shape == spec.input_shape:
        return x[None, ...], False
    if x.ndim == len(spec.input_shape) + 1 and x.shape[1:] == spec.input_shape:
        return x, True
    raise ShapeError(f"input shape {x.shape} does not match spec input {spec.input_shape} (layer input)")


def forward(spec, params: ModelParams, x, mode='eval', rng=None, masks: Optional[Dict[int, np.ndarray]] = None):
    """
    Run the network on one sample (spec.input_shape) or a batch (N, *input_shape).

    Returns (output, trace); output rows are softmax distributions and
    follow the batching of the input.
    """
    if mode not in MODES:
        raise ValidationError(f"mode must be one of {MODES}, got '{mode}'")
    a, batched = _batch_input(spec, x)
    stochastic = mode in ('train', 'mc')
    if stochastic and rng is None and masks is None and spec.dropout_layers():
        raise ValidationError(f"mode '{mode}' needs an rng (or frozen masks) for dropout")

    trace = ForwardTrace(
        mode=mode, batched=batched,
        layer_kinds=tuple(layer.kind for layer in spec.layers),
        activations=[a],
    )
    for i, layer in enumerate(spec.layers):
        kind = layer.kind
        if kind == 'dense':
            W, b = params[i]['W'], params[i]['b']
            if a.shape[1] != W.shape[0]:
                raise ShapeError(f"layer {i} (dense) expects {W.shape[0]} features, got {a.shape[1]}")
            a = a @ W + b
        elif kind == 'conv2d':
            W, b = params[i]['W'], params[i]['b']
            if a.ndim != 4 or a.shape[3] != W.shape[2]:
                raise ShapeError(f"layer {i} (conv2d) expects {W.shape[2]} channels, got shape {a.shape[1:]}")
            a = conv2d_forward(a, W, b, layer.stride)
        elif kind == 'relu':
            a = np.maximum(a, 0.0)
        elif kind == 'maxpool2d':
            a, idx = maxpool_forward(a, layer.window)
            trace.pool_indices[i] = idx
        elif kind == 'flatten':
            a = a.reshape(a.shape[0], -1)
        elif kind == 'dropout':
            if stochastic:
                if masks is not None and i in masks:
                    mask = masks[i]
                    if mask.shape != a.shape:
                        raise ShapeError(f"layer {i} (dropout) frozen mask {mask.shape} vs activation {a.shape}")
                else:
                    mask = dropout_mask(a.shape, layer.rate, rng)
                trace.masks[i] = mask
                a = a * mask
        elif kind == 'softmax':
            a = softmax_rows(a)
        trace.activations.append(a)

    if not np.all(np.isfinite(a)):
        raise NumericError("forward pass produced non-finite output")
    output = a if batched else a[0]
    return output, trace


def backward(spec, params: ModelParams, trace: ForwardTrace, loss_gradient) -> ModelParams:
    """
    Gradients of the loss with respect to every parameter.

    loss_gradient is dLoss/dOutput (the softmax probabilities), batched like
    the forward input.
    """
    if trace.layer_kinds != tuple(layer.kind for layer in spec.layers):
        raise ValidationError("trace was produced by a different network spec")
    g = np.asarray(loss_gradient, dtype=np.float64)
    if not trace.batched:
        g = g[None, ...]
    if g.shape != trace.output.shape:
        raise ShapeError(f"loss gradient {g.shape} does not match output {trace.output.shape}")

    grads: ModelParams = {}
    for i in range(len(spec.layers) - 1, -1, -1):
        layer = spec.layers[i]
        x = trace.activations[i]
        kind = layer.kind
        if kind == 'softmax':
            p = trace.activations[i + 1]
            g = p * (g - np.sum(g * p, axis=1, keepdims=True))
        elif kind == 'dense':
            W = params[i]['W']
            grads[i] = {'W': x.T @ g, 'b': g.sum(axis=0)}
            g = g @ W.T
        elif kind == 'conv2d':
            g, dW, db = conv2d_backward(x, params[i]['W'], layer.stride, g)
            grads[i] = {'W': dW, 'b': db}
        elif kind == 'relu':
            g = g * (x > 0)
        elif kind == 'maxpool2d':
            g = maxpool_backward(x, layer.window, trace.pool_indices[i], g)
        elif kind == 'flatten':
            g = g.reshape(x.shape)
        elif kind == 'dropout':
            if i in trace.masks:
                g = g * trace.masks[i]
    return grads


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------

def relative_error(analytic, numeric):
    """|a - n| / max(1e-8, |a| + |n|)"""
    return abs(analytic - numeric) / max(1e-8, abs(analytic) + abs(numeric))


def gradient_check(spec, params: ModelParams, x, target, eps=1e-5, masks=None, rng=None):
    """
    Max relative error between analytic and central-difference gradients of
    the mean cross-entropy loss. Dropout masks are drawn once (or taken from
    masks=) and held fixed for every evaluation.
    """
    from .losses import cross_entropy_batch

    check_param_shapes(spec, params)
    targets = np.atleast_1d(np.asarray(target, dtype=int))
    mode = 'eval'
    if spec.dropout_layers():
        mode = 'train'
        if masks is None:
            if rng is None:
                rng = np.random.default_rng(0)
            _, drawn = forward(spec, params, x, mode='train', rng=rng)
            masks = drawn.masks

    def loss_at(p):
        out, _ = forward(spec, p, x, mode=mode, masks=masks)
        loss, _ = cross_entropy_batch(np.atleast_2d(out), targets)
        return loss

    out, trace = forward(spec, params, x, mode=mode, masks=masks)
    _, dprobs = cross_entropy_batch(np.atleast_2d(out), targets)
    if not trace.batched:
        dprobs = dprobs[0]
    analytic = backward(spec, params, trace, dprobs)

    shifted = copy_params(params)
    worst = 0.0
    for i in sorted(shifted):
        for key, tensor in shifted[i].items():
            for idx in np.ndindex(tensor.shape):
                original = tensor[idx]
                tensor[idx] = original + eps
                plus = loss_at(shifted)
                tensor[idx] = original - eps
                minus = loss_at(shifted)
                tensor[idx] = original
                numeric = (plus - minus) / (2.0 * eps)
                a = analytic[i][key][idx]
                worst = max(worst, relative_error(a, numeric))
    logger.debug("gradient_check max relative error %.3e", worst)
    return worst
