"""
App/data/manifest.py

CSV manifest I/O.

Header: image,patient_id,view,label
    label is one of Luminal, HER2, TN; view is CC, MLO or empty/unknown.
    image paths are resolved relative to the manifest's directory.

Row numbers in errors are CSV line numbers (the header is line 1).
"""
import logging
from pathlib import Path

import pandas as pd
from PIL import Image, UnidentifiedImageError

from App.exceptions import DataIOError, LabelError, ValidationError

from .records import Dataset, SampleRecord, SubtypeLabel, VIEWS

logger = logging.getLogger(__name__)

MANIFEST_COLUMNS = ['image', 'patient_id', 'view', 'label']


def _check_image(path, row):
    if not path.is_file():
        raise DataIOError(f"image file not found: {path}", row=row)
    try:
        with Image.open(path) as img:
            img.verify()
    except (UnidentifiedImageError, OSError) as e:
        raise DataIOError(f"unreadable image {path}: {e}", row=row) from e


def load_manifest(path, check_images=True) -> Dataset:
    path = Path(path)
    if not path.is_file():
        raise DataIOError(f"manifest not found: {path}")
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DataIOError(f"cannot read manifest {path}: {e}") from e

    missing = [c for c in MANIFEST_COLUMNS if c not in df.columns]
    if missing:
        raise ValidationError(f"manifest {path} is missing columns {missing}")
    logger.info("Loading manifest %s (%d rows)", path, len(df))

    base = path.parent
    seen = set()
    records = []
    for offset, row in enumerate(df.itertuples(index=False)):
        line = offset + 2
        image = str(row.image).strip()
        patient_id = str(row.patient_id).strip()
        if not image or not patient_id:
            raise ValidationError(f"row {line}: image and patient_id are required")
        try:
            label = SubtypeLabel.parse(str(row.label).strip())
        except LabelError as e:
            raise LabelError(f"row {line}: {e}") from e
        view = str(row.view).strip() or 'unknown'
        if view not in VIEWS:
            raise ValidationError(f"row {line}: view must be one of {VIEWS}, got '{view}'")

        key = (patient_id, image)
        if key in seen:
            raise ValidationError(f"row {line}: duplicate entry for patient {patient_id} image {image}")
        seen.add(key)

        image_path = Path(image)
        if not image_path.is_absolute():
            image_path = base / image_path
        if check_images:
            _check_image(image_path, line)
        records.append(SampleRecord(
            image_ref=str(image_path), label=label, patient_id=patient_id, view=view,
        ))

    dataset = Dataset(tuple(records))
    logger.info("Manifest loaded: %d images, %d patients, counts=%s",
                len(dataset), len(dataset.patients()), dataset.counts_by_name())
    return dataset


def write_manifest(rows, path):
    """
    Args:
        rows: iterable of dicts with the manifest columns (image relative to path's directory)
        path: CSV destination
    """
    df = pd.DataFrame(list(rows), columns=MANIFEST_COLUMNS)
    try:
        df.to_csv(path, index=False, lineterminator='\n')
    except OSError as e:
        raise DataIOError(f"cannot write manifest {path}: {e}") from e
    return Path(path)
