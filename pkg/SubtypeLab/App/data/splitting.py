"""
App/data/splitting.py

Stratified train/test split over patients (default) or single images.

The training share is fixed once for the whole dataset, round(f * N) units,
and handed out to the classes by largest remainder. Every class with two or
more units keeps at least one unit on each side; a single-unit class goes
to training with a StratificationWarning.
"""
import logging
import math
import warnings
from collections import defaultdict

import numpy as np
from sklearn.model_selection import train_test_split

from App.exceptions import ValidationError
from App.seeding import derive_seed

from .records import CLASS_ORDER, Dataset

logger = logging.getLogger(__name__)

GROUPINGS = ('by_patient', 'by_image')


class StratificationWarning(UserWarning):
    pass


def _unit_key(record, index, grouping):
    return record.patient_id if grouping == 'by_patient' else f"{index:08d}"


def n_train_units(n_units, train_fraction):
    """Nearest-integer share of units for training, keeping one unit per side when n >= 2."""
    if n_units < 2:
        return n_units
    n_train = int(math.floor(train_fraction * n_units + 0.5))
    return min(max(n_train, 1), n_units - 1)


def allocate_train_units(sizes, train_fraction):
    """
    Per-class training counts summing to n_train_units(sum(sizes)) where the
    per-class bounds allow it.

    Args:
        sizes: units per class, in class order
    """
    sizes = np.asarray(sizes, dtype=int)
    lower = np.where(sizes >= 2, 1, sizes)
    upper = np.where(sizes >= 2, sizes - 1, sizes)
    total = int(np.clip(n_train_units(int(sizes.sum()), train_fraction), lower.sum(), upper.sum()))

    quotas = train_fraction * sizes
    counts = np.clip(np.floor(quotas).astype(int), lower, upper)
    remainders = quotas - np.floor(quotas)
    # largest remainder first; class order breaks ties
    by_remainder = np.argsort(-remainders, kind='stable')
    while counts.sum() < total:
        room = [c for c in by_remainder if counts[c] < upper[c]]
        counts[room[0]] += 1
        remainders[room[0]] = -1.0
        by_remainder = np.argsort(-remainders, kind='stable')
    while counts.sum() > total:
        spare = [c for c in by_remainder[::-1] if counts[c] > lower[c]]
        counts[spare[0]] -= 1
        remainders[spare[0]] = 2.0
        by_remainder = np.argsort(-remainders, kind='stable')
    return counts


def split(dataset: Dataset, train_fraction=0.8, seed=0, grouping='by_patient'):
    """
    Returns:
        (train, test) Datasets in the input's record order
    """
    if not 0.0 < float(train_fraction) < 1.0:
        raise ValidationError(f"train_fraction must be in (0, 1), got {train_fraction}")
    if grouping not in GROUPINGS:
        raise ValidationError(f"grouping must be one of {GROUPINGS}, got '{grouping}'")

    # a patient's label is the label of its first original image
    units = {}
    for i, record in enumerate(dataset):
        if record.synthetic or record.duplicate:
            continue
        units.setdefault(_unit_key(record, i, grouping), record.label)

    by_label = defaultdict(list)
    for key, label in units.items():
        by_label[label].append(key)

    labels = [label for label in CLASS_ORDER if by_label.get(label)]
    for label in labels:
        if len(by_label[label]) < 2:
            msg = f"class {label.value} has {len(by_label[label])} unit(s); it cannot appear on both sides of the split"
            warnings.warn(msg, StratificationWarning)
            logger.warning(msg)
    allocation = allocate_train_units([len(by_label[label]) for label in labels], float(train_fraction))

    train_units = set()
    for label, n_train in zip(labels, allocation):
        keys = sorted(by_label[label])
        if n_train >= len(keys):
            train_units.update(keys)
            continue
        chosen, _ = train_test_split(
            keys, train_size=int(n_train), shuffle=True,
            random_state=derive_seed(seed, 'split', label.class_index),
        )
        train_units.update(chosen)

    train_idx, test_idx = [], []
    for i, record in enumerate(dataset):
        if record.synthetic or record.duplicate:
            train_idx.append(i)
        elif _unit_key(record, i, grouping) in train_units:
            train_idx.append(i)
        else:
            test_idx.append(i)

    train, test = dataset.subset(train_idx), dataset.subset(test_idx)
    logger.info("Split (%s, fraction=%.2f, seed=%s): train=%d %s, test=%d %s",
                grouping, train_fraction, seed, len(train), train.counts_by_name(),
                len(test), test.counts_by_name())
    return train, test
