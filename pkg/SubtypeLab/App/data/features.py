"""
App/data/features.py

Materialize datasets as tensors for training and inference.
"""
import logging
from functools import lru_cache

import numpy as np

from App.exceptions import ValidationError

from .imaging import load_tensor, preprocess

logger = logging.getLogger(__name__)


@lru_cache(maxsize=4096)
def _cached_tensor(path, target_size):
    tensor = load_tensor(path, target_size)
    tensor.setflags(write=False)
    return tensor


def record_tensor(record, target_size):
    target_size = (int(target_size[0]), int(target_size[1]))
    if not record.embedded:
        return _cached_tensor(record.image_ref, target_size)
    tensor = np.asarray(record.image_ref, dtype=np.float64)
    if tensor.ndim != 3 or tensor.shape[2] != 3:
        raise ValidationError(f"embedded tensor for {record.display_name} has shape {tensor.shape}")
    if tensor.shape[:2] != target_size:
        tensor = preprocess(tensor, target_size, max_value=1.0)
    return tensor


def load_features(dataset, target_size):
    """
    Returns:
        (X, y): X is (N, H, W, 3) float64, y is (N,) class indices
    """
    if len(dataset) == 0:
        return np.zeros((0, int(target_size[0]), int(target_size[1]), 3)), np.zeros(0, dtype=int)
    X = np.stack([record_tensor(r, target_size) for r in dataset])
    logger.debug("Loaded features %s", X.shape)
    return X, dataset.labels


def clear_feature_cache():
    _cached_tensor.cache_clear()
