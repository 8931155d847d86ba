"""
App/nn/optim.py

Adam with bias correction. adam_step is functional: it returns new
parameters and a new state and leaves its inputs untouched.
"""
from dataclasses import dataclass

import numpy as np

from App.exceptions import ShapeError

from .tensors import ModelParams, zeros_like_params


@dataclass
class AdamState:
    m: ModelParams
    v: ModelParams
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def initial(cls, params: ModelParams, beta1=0.9, beta2=0.999, eps=1e-8):
        return cls(m=zeros_like_params(params), v=zeros_like_params(params),
                   t=0, beta1=beta1, beta2=beta2, eps=eps)


def adam_step(state: AdamState, params: ModelParams, grads: ModelParams, lr):
    t = state.t + 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1 ** t
    bc2 = 1.0 - b2 ** t

    new_params, new_m, new_v = {}, {}, {}
    for i, layer in params.items():
        new_params[i], new_m[i], new_v[i] = {}, {}, {}
        for key, w in layer.items():
            g = grads[i][key]
            if g.shape != w.shape:
                raise ShapeError(f"layer {i} {key}: gradient {g.shape} vs parameter {w.shape}")
            m = b1 * state.m[i][key] + (1.0 - b1) * g
            v = b2 * state.v[i][key] + (1.0 - b2) * (g * g)
            new_m[i][key] = m
            new_v[i][key] = v
            new_params[i][key] = w - lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)

    new_state = AdamState(m=new_m, v=new_v, t=t, beta1=b1, beta2=b2, eps=state.eps)
    return new_params, new_state
