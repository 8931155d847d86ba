"""
App/nn package

Feed-forward network engine on numpy: layer specs, forward/backward
passes with inverted dropout, cross-entropy + L2 losses, Adam, training.
"""

from .distributions import ClassDistribution
from .engine import ForwardTrace, backward, forward, gradient_check, softmax
from .initializers import init_params
from .layers import LayerSpec, NetworkSpec, build_network_spec, load_spec, save_spec
from .losses import bce_loss, cross_entropy, cross_entropy_batch, l2_penalty
from .optim import AdamState, adam_step
from .tensors import ModelParams, load_params, params_equal, save_params
from .training import TrainConfig, train, training_accuracy

__all__ = [
    'ClassDistribution',
    'ForwardTrace',
    'forward',
    'backward',
    'gradient_check',
    'softmax',
    'init_params',
    'LayerSpec',
    'NetworkSpec',
    'build_network_spec',
    'load_spec',
    'save_spec',
    'bce_loss',
    'cross_entropy',
    'cross_entropy_batch',
    'l2_penalty',
    'AdamState',
    'adam_step',
    'ModelParams',
    'load_params',
    'save_params',
    'params_equal',
    'TrainConfig',
    'train',
    'training_accuracy',
]
