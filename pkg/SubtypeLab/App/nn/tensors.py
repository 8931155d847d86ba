"""
App/nn/tensors.py

Tensor helpers and the ModelParams container.

Tensors are float64 numpy arrays in row-major, channels-last layout.
ModelParams maps a layer index to {'W': weights, 'b': biases} for every
layer that owns parameters (dense, conv2d).

Binary parameter file ("HMC1"):
    magic b"HMC1", then for each tensor in layer order (W before b):
    u32 rank, rank x u32 extents, f64 payload, all little-endian.
"""
import logging
import struct
from pathlib import Path
from typing import Dict

import numpy as np

from App.exceptions import DataIOError, NumericError, ShapeError

logger = logging.getLogger(__name__)

PARAMS_MAGIC = b'HMC1'
PARAM_KEYS = ('W', 'b')

ModelParams = Dict[int, Dict[str, np.ndarray]]


def as_tensor(value, *, name='tensor'):
    """Convert to a float64 array and reject NaN/Inf."""
    arr = np.asarray(value, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"{name} contains non-finite values")
    return arr


def copy_params(params: ModelParams) -> ModelParams:
    return {i: {k: t.copy() for k, t in layer.items()} for i, layer in params.items()}


def zeros_like_params(params: ModelParams) -> ModelParams:
    return {i: {k: np.zeros_like(t) for k, t in layer.items()} for i, layer in params.items()}


def add_params(a: ModelParams, b: ModelParams) -> ModelParams:
    return {i: {k: a[i][k] + b[i][k] for k in a[i]} for i in a}


def iter_tensors(params: ModelParams):
    """Yield (layer_index, key, tensor) in file order."""
    for i in sorted(params):
        for key in PARAM_KEYS:
            if key in params[i]:
                yield i, key, params[i][key]


def params_equal(a: ModelParams, b: ModelParams):
    if sorted(a) != sorted(b):
        return False
    return all(
        a[i].keys() == b[i].keys() and all(np.array_equal(a[i][k], b[i][k]) for k in a[i])
        for i in a
    )


def check_param_shapes(spec, params: ModelParams):
    expected = spec.param_shapes()
    if sorted(expected) != sorted(params):
        raise ShapeError(
            f"parameters cover layers {sorted(params)}, spec expects {sorted(expected)}"
        )
    for i, shapes in expected.items():
        for key, shape in shapes.items():
            actual = params[i][key].shape
            if actual != shape:
                raise ShapeError(
                    f"layer {i} ({spec.layers[i].kind}) {key} has shape {actual}, expected {shape}"
                )


def save_params(params: ModelParams, path):
    path = Path(path)
    chunks = [PARAMS_MAGIC]
    for _, _, tensor in iter_tensors(params):
        chunks.append(struct.pack('<I', tensor.ndim))
        chunks.append(struct.pack(f'<{tensor.ndim}I', *tensor.shape))
        chunks.append(np.ascontiguousarray(tensor, dtype='<f8').tobytes())
    try:
        path.write_bytes(b''.join(chunks))
    except OSError as e:
        raise DataIOError(f"cannot write parameters to {path}: {e}") from e
    logger.debug("Saved %d tensors to %s", sum(1 for _ in iter_tensors(params)), path)


def load_params(path, spec) -> ModelParams:
    """Read an HMC1 file; tensor order and shapes are checked against spec."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise DataIOError(f"cannot read parameters from {path}: {e}") from e
    if raw[:4] != PARAMS_MAGIC:
        raise DataIOError(f"{path} is not an HMC1 parameter file")

    offset = 4
    params: ModelParams = {}
    for i, shapes in sorted(spec.param_shapes().items()):
        params[i] = {}
        for key in PARAM_KEYS:
            try:
                (rank,) = struct.unpack_from('<I', raw, offset)
                offset += 4
                extents = struct.unpack_from(f'<{rank}I', raw, offset)
                offset += 4 * rank
                count = int(np.prod(extents)) if rank else 1
                data = np.frombuffer(raw, dtype='<f8', count=count, offset=offset)
                offset += 8 * count
            except (struct.error, ValueError) as e:
                raise DataIOError(f"{path} is truncated at layer {i} {key}") from e
            if tuple(extents) != shapes[key]:
                raise ShapeError(
                    f"{path}: layer {i} {key} stored as {tuple(extents)}, spec expects {shapes[key]}"
                )
            params[i][key] = data.astype(np.float64).reshape(extents)
    if offset != len(raw):
        raise DataIOError(f"{path} has {len(raw) - offset} trailing bytes")
    return params
