"""
App/nn/layers.py

Declarative network description: LayerSpec and NetworkSpec.

Shapes are per-sample and channels-last: images are (H, W, C), feature
vectors are (n,). NetworkSpec validates shape propagation on construction,
so every NetworkSpec in circulation is usable by the engine.
"""
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from App.exceptions import DataIOError, ShapeError, ValidationError

logger = logging.getLogger(__name__)

LAYER_KINDS = ('dense', 'conv2d', 'relu', 'softmax', 'dropout', 'flatten', 'maxpool2d')
PARAMETRIC_KINDS = ('dense', 'conv2d')

# Fields serialized per kind
KIND_FIELDS = {
    'dense': ('units',),
    'conv2d': ('filters', 'kernel_size', 'stride'),
    'dropout': ('rate',),
    'maxpool2d': ('window',),
    'relu': (),
    'softmax': (),
    'flatten': (),
}

DEFAULT_BACKBONE = (
    {'kind': 'conv2d', 'filters': 8, 'kernel_size': 3, 'stride': 1},
    {'kind': 'relu'},
    {'kind': 'maxpool2d', 'window': 2},
    {'kind': 'conv2d', 'filters': 16, 'kernel_size': 3, 'stride': 1},
    {'kind': 'relu'},
    {'kind': 'maxpool2d', 'window': 2},
)


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    units: Optional[int] = None
    filters: Optional[int] = None
    kernel_size: Optional[int] = None
    stride: Optional[int] = None
    rate: Optional[float] = None
    window: Optional[int] = None

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise ValidationError(f"unknown layer kind '{self.kind}'")
        if self.kind == 'dense':
            _require_positive(self, 'units')
        elif self.kind == 'conv2d':
            if self.stride is None:
                object.__setattr__(self, 'stride', 1)
            for field in ('filters', 'kernel_size', 'stride'):
                _require_positive(self, field)
        elif self.kind == 'maxpool2d':
            _require_positive(self, 'window')
        elif self.kind == 'dropout':
            if self.rate is None or not (0.0 <= float(self.rate) < 1.0):
                raise ValidationError(f"dropout rate must be in [0, 1), got {self.rate}")
            object.__setattr__(self, 'rate', float(self.rate))

    # Constructors -----------------------------------------------------
    @classmethod
    def dense(cls, units):
        return cls('dense', units=units)

    @classmethod
    def conv2d(cls, filters, kernel_size, stride=1):
        return cls('conv2d', filters=filters, kernel_size=kernel_size, stride=stride)

    @classmethod
    def dropout(cls, rate):
        return cls('dropout', rate=rate)

    @classmethod
    def maxpool2d(cls, window):
        return cls('maxpool2d', window=window)

    @classmethod
    def relu(cls):
        return cls('relu')

    @classmethod
    def softmax(cls):
        return cls('softmax')

    @classmethod
    def flatten(cls):
        return cls('flatten')

    @property
    def has_params(self):
        return self.kind in PARAMETRIC_KINDS

    def to_dict(self):
        out = {'kind': self.kind}
        for field in KIND_FIELDS[self.kind]:
            out[field] = getattr(self, field)
        return out

    @classmethod
    def from_dict(cls, data):
        if 'kind' not in data:
            raise ValidationError(f"layer entry without 'kind': {data}")
        kind = data['kind']
        if kind not in KIND_FIELDS:
            raise ValidationError(f"unknown layer kind '{kind}'")
        unknown = set(data) - {'kind', *KIND_FIELDS[kind]}
        if unknown:
            raise ValidationError(f"unexpected fields for {kind}: {sorted(unknown)}")
        return cls(kind, **{k: data[k] for k in KIND_FIELDS[kind] if k in data})

    def output_shape(self, shape):
        """Per-sample output shape for a per-sample input shape."""
        if self.kind in ('relu', 'dropout'):
            return shape
        if self.kind == 'flatten':
            return (int(np.prod(shape)),)
        if self.kind in ('dense', 'softmax'):
            if len(shape) != 1:
                raise ShapeError(f"{self.kind} needs a flat feature vector, got {shape}")
            return (self.units,) if self.kind == 'dense' else shape
        if len(shape) != 3:
            raise ShapeError(f"{self.kind} needs an (H, W, C) input, got {shape}")
        h, w, c = shape
        if self.kind == 'conv2d':
            k, s = self.kernel_size, self.stride
            if h < k or w < k:
                raise ShapeError(f"conv2d kernel {k} larger than input {h}x{w}")
            return ((h - k) // s + 1, (w - k) // s + 1, self.filters)
        # maxpool2d: non-overlapping windows, remainder rows/columns dropped
        if h < self.window or w < self.window:
            raise ShapeError(f"maxpool2d window {self.window} larger than input {h}x{w}")
        return (h // self.window, w // self.window, c)


def _require_positive(layer, field):
    value = getattr(layer, field)
    try:
        valid = value is not None and int(value) == value and int(value) > 0
    except (TypeError, ValueError):
        valid = False
    if not valid:
        raise ValidationError(f"{layer.kind}.{field} must be a positive integer, got {value}")
    object.__setattr__(layer, field, int(value))


@dataclass(frozen=True)
class NetworkSpec:
    input_shape: Tuple[int, ...]
    layers: Tuple[LayerSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, 'input_shape', tuple(int(d) for d in self.input_shape))
        object.__setattr__(self, 'layers', tuple(self.layers))
        if not self.input_shape or any(d <= 0 for d in self.input_shape):
            raise ValidationError(f"input_shape must have positive extents, got {self.input_shape}")
        if not self.layers or self.layers[-1].kind != 'softmax':
            raise ValidationError("the final layer must be softmax")
        if sum(1 for layer in self.layers if layer.kind == 'softmax') != 1:
            raise ValidationError("exactly one softmax layer is allowed, in final position")
        shapes = self.shapes()
        if len(shapes[-1]) != 1 or shapes[-1][0] < 2:
            raise ValidationError(f"softmax head needs >= 2 classes, got output shape {shapes[-1]}")

    def shapes(self):
        """Per-sample shapes: shapes[0] is the input, shapes[i+1] follows layer i."""
        shapes = [self.input_shape]
        for i, layer in enumerate(self.layers):
            try:
                shapes.append(layer.output_shape(shapes[-1]))
            except ShapeError as e:
                raise ShapeError(f"layer {i} ({layer.kind}): {e}") from e
        return shapes

    @property
    def n_classes(self):
        return self.shapes()[-1][0]

    def param_shapes(self):
        shapes = self.shapes()
        out = {}
        for i, layer in enumerate(self.layers):
            if layer.kind == 'dense':
                out[i] = {'W': (shapes[i][0], layer.units), 'b': (layer.units,)}
            elif layer.kind == 'conv2d':
                k = layer.kernel_size
                out[i] = {'W': (k, k, shapes[i][2], layer.filters), 'b': (layer.filters,)}
        return out

    def classifier_layers(self):
        """Indices of the fully-connected (classifier block) layers."""
        return [i for i, layer in enumerate(self.layers) if layer.kind == 'dense']

    def dropout_layers(self):
        return [i for i, layer in enumerate(self.layers) if layer.kind == 'dropout']

    def to_dict(self):
        return {
            'input_shape': list(self.input_shape),
            'layers': [layer.to_dict() for layer in self.layers],
        }

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(
                input_shape=tuple(data['input_shape']),
                layers=tuple(LayerSpec.from_dict(d) for d in data['layers']),
            )
        except KeyError as e:
            raise ValidationError(f"network spec missing field {e}") from e


def build_network_spec(input_shape, backbone='default', widths=(128, 128), dropout=0.5,
                       n_classes=2, backbone_dropout=0.0):
    """
    Backbone followed by the classifier block:
        dense -> relu -> dropout -> dense -> relu -> dropout -> dense(n) -> softmax

    Args:
        input_shape: (H, W, C) or (n,)
        backbone: 'default' (small CNN), 'none', or a list of layer dicts
        widths: hidden widths of the classifier block
        dropout: classifier-block dropout rate p
        n_classes: size of the softmax head
        backbone_dropout: if > 0, dropout after each backbone pooling layer
    """
    layers = []
    if backbone == 'default':
        backbone = DEFAULT_BACKBONE
    elif backbone in (None, 'none'):
        backbone = ()
    for entry in backbone:
        layer = LayerSpec.from_dict(entry) if isinstance(entry, dict) else entry
        layers.append(layer)
        if backbone_dropout and layer.kind == 'maxpool2d':
            layers.append(LayerSpec.dropout(backbone_dropout))
    if len(input_shape) != 1 or layers:
        layers.append(LayerSpec.flatten())
    for width in widths:
        layers.extend([LayerSpec.dense(width), LayerSpec.relu(), LayerSpec.dropout(dropout)])
    layers.extend([LayerSpec.dense(n_classes), LayerSpec.softmax()])
    return NetworkSpec(input_shape=tuple(input_shape), layers=tuple(layers))


def save_spec(spec, path):
    try:
        Path(path).write_text(json.dumps(spec.to_dict(), indent=2, sort_keys=True) + '\n')
    except OSError as e:
        raise DataIOError(f"cannot write network spec to {path}: {e}") from e


def load_spec(path):
    try:
        data = json.loads(Path(path).read_text())
    except OSError as e:
        raise DataIOError(f"cannot read network spec {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ValidationError(f"{path} is not valid JSON: {e}") from e
    return NetworkSpec.from_dict(data)
