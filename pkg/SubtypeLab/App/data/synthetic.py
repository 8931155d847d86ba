"""
App/data/synthetic.py

Procedural 3-class grayscale image set used in place of mammograms for
desk-scale runs.

Each class has a fixed 8-bit template:
    TN       bright disk on a dark background
    Luminal  horizontal stripes
    HER2     checkerboard
Images are the template plus seeded Gaussian noise (in [0, 1] units),
rounded back to uint8. Images come in CC/MLO pairs per patient.
"""
import logging
from pathlib import Path

import numpy as np

from App.exceptions import DataIOError, ValidationError
from App.seeding import derive_rng

from .imaging import write_image
from .manifest import write_manifest
from .records import CLASS_ORDER, SubtypeLabel

logger = logging.getLogger(__name__)

DEFAULT_COUNTS = {'Luminal': 200, 'HER2': 60, 'TN': 40}
HIGH, LOW = 200, 60


def template(label, size):
    """uint8 (H, W) template of a class."""
    label = SubtypeLabel.parse(label)
    h, w = int(size[0]), int(size[1])
    if h < 2 or w < 2:
        raise ValidationError(f"synthetic images need at least 2x2 pixels, got {h}x{w}")
    rows, cols = np.meshgrid(np.arange(h), np.arange(w), indexing='ij')

    if label == SubtypeLabel.TN:
        cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
        radius = min(h, w) / 3.0
        inside = (rows - cy) ** 2 + (cols - cx) ** 2 <= radius ** 2
        return np.where(inside, 220, 40).astype(np.uint8)
    if label == SubtypeLabel.LUMINAL:
        stripe = max(1, h // 8)
        return np.where((rows // stripe) % 2 == 0, HIGH, LOW).astype(np.uint8)
    cell = max(1, min(h, w) // 4)
    return np.where(((rows // cell) + (cols // cell)) % 2 == 0, HIGH, LOW).astype(np.uint8)


def add_noise(pixels, level, rng):
    """Gaussian noise with std `level` on the [0, 1] scale; same dtype/range as the input."""
    if level < 0:
        raise ValidationError(f"noise level must be non-negative, got {level}")
    pixels = np.asarray(pixels)
    if pixels.dtype == np.uint8:
        scaled = pixels.astype(np.float64) / 255.0
        noisy = np.clip(scaled + level * rng.standard_normal(pixels.shape), 0.0, 1.0)
        return np.round(noisy * 255.0).astype(np.uint8)
    return np.clip(pixels + level * rng.standard_normal(pixels.shape), 0.0, 1.0)


def synthetic_image(label, index, size, noise, seed):
    label = SubtypeLabel.parse(label)
    base = template(label, size)
    if noise == 0:
        return base
    return add_noise(base, noise, derive_rng(seed, 'synthetic', label.class_index, index))


def generate_synthetic(out_dir, counts=None, size=(16, 16), noise=0.1, seed=0):
    """
    Write images/ and manifest.csv under out_dir.

    Args:
        counts: images per class name, e.g. {'Luminal': 200, 'HER2': 60, 'TN': 40}

    Returns:
        Path to manifest.csv
    """
    counts = {SubtypeLabel.parse(k): int(v) for k, v in (counts or DEFAULT_COUNTS).items()}
    if any(v < 0 for v in counts.values()):
        raise ValidationError(f"synthetic counts must be non-negative, got {counts}")

    out_dir = Path(out_dir)
    image_dir = out_dir / 'images'
    try:
        image_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise DataIOError(f"cannot create output directory {out_dir}: {e}") from e

    logger.info("Synthetic START: counts=%s size=%s noise=%s seed=%s",
                {k.value: v for k, v in counts.items()}, tuple(size), noise, seed)
    rows = []
    for label in CLASS_ORDER:
        for j in range(counts.get(label, 0)):
            patient = j // 2
            view = ('CC', 'MLO')[j % 2]
            rel = f"images/{label.value}_{patient:04d}_{view}.png"
            write_image(out_dir / rel, synthetic_image(label, j, size, noise, seed))
            rows.append({
                'image': rel,
                'patient_id': f"{label.value}-{patient:04d}",
                'view': view,
                'label': label.value,
            })

    manifest = write_manifest(rows, out_dir / 'manifest.csv')
    logger.info("Synthetic DONE: %d images -> %s", len(rows), manifest)
    return manifest
