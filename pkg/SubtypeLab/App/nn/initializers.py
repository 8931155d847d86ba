"""
App/nn/initializers.py

Parameter initialization: He-normal for layers feeding a ReLU,
Glorot-uniform otherwise, zero biases.
"""
import logging

import numpy as np

from App.seeding import derive_rng

from .tensors import ModelParams

logger = logging.getLogger(__name__)


def _fans(spec, index, shape):
    layer = spec.layers[index]
    if layer.kind == 'conv2d':
        k, _, c_in, c_out = shape
        return k * k * c_in, k * k * c_out
    return shape[0], shape[1]


def init_params(spec, seed) -> ModelParams:
    rng = derive_rng(seed, 'init')
    params: ModelParams = {}
    for i, shapes in sorted(spec.param_shapes().items()):
        w_shape = shapes['W']
        fan_in, fan_out = _fans(spec, i, w_shape)
        followed_by_relu = i + 1 < len(spec.layers) and spec.layers[i + 1].kind == 'relu'
        if followed_by_relu:
            weights = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=w_shape)
        else:
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            weights = rng.uniform(-limit, limit, size=w_shape)
        params[i] = {'W': weights, 'b': np.zeros(shapes['b'])}
    logger.debug("Initialized %d parameter layers (seed=%s)", len(params), seed)
    return params
