"""
App/data/imaging.py

Image I/O, preprocessing (bilinear resize + [0, 1] normalization) and
training-time augmentation (rotation + flips).

Bilinear convention: align-corners with edge clamping. Output pixel i of a
resize from n to m samples source coordinate i * (n - 1) / (m - 1); sample
coordinates outside the image are clamped to the border, so rotated images
replicate edge pixels.
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Tuple

import numpy as np
from PIL import Image, UnidentifiedImageError

from App.exceptions import DataIOError, ValidationError

logger = logging.getLogger(__name__)

SIXTEEN_BIT_MODES = ('I;16', 'I;16B', 'I;16L', 'I;16N', 'I')


# ---------------------------------------------------------------------------
# I/O
# ---------------------------------------------------------------------------

def read_image(path):
    """
    Read a PNG/PGM file.

    Returns:
        (pixels, max_value): pixels is (H, W) or (H, W, 3); max_value is the
        bit-depth maximum (255 or 65535)
    """
    path = Path(path)
    try:
        with Image.open(path) as img:
            img.load()
            mode = img.mode
            if mode in SIXTEEN_BIT_MODES:
                return np.array(img, dtype=np.int64), 65535
            if mode in ('RGB', 'RGBA'):
                return np.array(img.convert('RGB')), 255
            return np.array(img.convert('L')), 255
    except FileNotFoundError as e:
        raise DataIOError(f"image file not found: {path}") from e
    except (UnidentifiedImageError, OSError) as e:
        raise DataIOError(f"unreadable image {path}: {e}") from e


def write_image(path, pixels):
    """Write an 8-bit grayscale PNG (pixels: uint8 (H, W))."""
    try:
        Image.fromarray(np.asarray(pixels, dtype=np.uint8)).save(path, format='PNG')
    except OSError as e:
        raise DataIOError(f"cannot write image {path}: {e}") from e


# ---------------------------------------------------------------------------
# Resampling
# ---------------------------------------------------------------------------

def sample_bilinear(image, ys, xs):
    """Bilinear samples of an (H, W, C) image at float coordinates, clamped to the border."""
    h, w = image.shape[:2]
    ys = np.clip(ys, 0.0, h - 1)
    xs = np.clip(xs, 0.0, w - 1)
    y0 = np.floor(ys).astype(int)
    x0 = np.floor(xs).astype(int)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = (ys - y0)[..., None]
    wx = (xs - x0)[..., None]
    return (
        (1 - wy) * (1 - wx) * image[y0, x0]
        + (1 - wy) * wx * image[y0, x1]
        + wy * (1 - wx) * image[y1, x0]
        + wy * wx * image[y1, x1]
    )


def _grid(n_in, n_out):
    if n_out == 1:
        return np.zeros(1)
    return np.arange(n_out) * ((n_in - 1) / (n_out - 1))


def bilinear_resize(image, size):
    """Resize an (H, W, C) float image to size=(height, width)."""
    h, w = image.shape[:2]
    out_h, out_w = int(size[0]), int(size[1])
    if (h, w) == (out_h, out_w):
        return image.copy()
    ys, xs = np.meshgrid(_grid(h, out_h), _grid(w, out_w), indexing='ij')
    return sample_bilinear(image, ys, xs)


def _bit_depth_max(image):
    if image.dtype == np.uint8:
        return 255
    if image.dtype == np.uint16:
        return 65535
    return 255 if image.max() <= 255 else 65535


def preprocess(image, target_size=(224, 224), max_value=None):
    """
    Resize to target_size and normalize to [0, 1] as an (H, W, 3) tensor.

    Args:
        image: (H, W), (H, W, 1), (H, W, 3) or (H, W, 4) pixel array
        target_size: (height, width)
        max_value: bit-depth maximum; inferred from dtype when omitted
    """
    image = np.asarray(image)
    if image.ndim not in (2, 3) or image.shape[0] == 0 or image.shape[1] == 0:
        raise ValidationError(f"cannot preprocess image with shape {image.shape}")
    if image.ndim == 3 and image.shape[2] not in (1, 3, 4):
        raise ValidationError(f"unsupported channel count {image.shape[2]}")
    if max_value is None:
        max_value = _bit_depth_max(image)

    pixels = image.astype(np.float64)
    if pixels.ndim == 2:
        pixels = pixels[..., None]
    if pixels.shape[2] == 4:
        pixels = pixels[..., :3]
    pixels = bilinear_resize(pixels, target_size) / float(max_value)
    if pixels.shape[2] == 1:
        pixels = np.repeat(pixels, 3, axis=2)
    return np.clip(pixels, 0.0, 1.0)


def load_tensor(path, target_size):
    pixels, max_value = read_image(path)
    return preprocess(pixels, target_size, max_value=max_value)


# ---------------------------------------------------------------------------
# Augmentation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AugmentConfig:
    rotation_range: Tuple[float, float] = (-90.0, 90.0)
    horizontal_flip: bool = True
    vertical_flip: bool = True

    def __post_init__(self):
        lo, hi = (float(v) for v in self.rotation_range)
        object.__setattr__(self, 'rotation_range', (lo, hi))
        if lo != -hi or not (-180.0 < lo <= hi < 180.0):
            raise ValidationError(
                f"rotation range must be symmetric inside (-180, 180), got ({lo}, {hi})"
            )

    def to_dict(self):
        return {
            'rotation_range': list(self.rotation_range),
            'horizontal_flip': self.horizontal_flip,
            'vertical_flip': self.vertical_flip,
        }


def rotate(image, angle_degrees):
    """
    Rotate an (H, W, C) image counter-clockwise about its center, bilinear,
    edge pixels replicated. +90 on a square image equals np.rot90.
    """
    theta = np.deg2rad(angle_degrees)
    # rounding snaps exact quarter turns to exact 0/1 coefficients
    cos_t = float(np.round(np.cos(theta), 15))
    sin_t = float(np.round(np.sin(theta), 15))
    h, w = image.shape[:2]
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    rows, cols = np.meshgrid(np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing='ij')
    dy, dx = rows - cy, cols - cx
    ys = cy + cos_t * dy + sin_t * dx
    xs = cx - sin_t * dy + cos_t * dx
    return sample_bilinear(image, ys, xs)


def flip_horizontal(image):
    return image[:, ::-1].copy()


def flip_vertical(image):
    return image[::-1].copy()


def augment(image, config: AugmentConfig, rng):
    lo, hi = config.rotation_range
    angle = rng.uniform(lo, hi) if hi > lo else lo
    out = rotate(image, angle) if angle != 0 else image.copy()
    if config.horizontal_flip and rng.random() < 0.5:
        out = flip_horizontal(out)
    if config.vertical_flip and rng.random() < 0.5:
        out = flip_vertical(out)
    return np.clip(out, 0.0, 1.0)


def augment_batch(batch, rng, config: AugmentConfig):
    """Training-time transform: augment each (H, W, C) image of a batch."""
    return np.stack([augment(image, config, rng) for image in batch])
