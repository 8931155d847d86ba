"""
App/data/records.py

Sample records and datasets.

Class order is fixed everywhere: TN (0) < Luminal (1) < HER2 (2).
"""
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, Optional, Tuple, Union

import numpy as np

from App.exceptions import LabelError, ValidationError


class SubtypeLabel(str, Enum):
    TN = 'TN'
    LUMINAL = 'Luminal'
    HER2 = 'HER2'

    @property
    def class_index(self):
        return CLASS_ORDER.index(self)

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        for label in cls:
            if value == label.value:
                return label
        raise LabelError(f"unknown label '{value}' (expected one of {[l.value for l in cls]})")

    @classmethod
    def from_index(cls, index):
        return CLASS_ORDER[int(index)]


CLASS_ORDER = (SubtypeLabel.TN, SubtypeLabel.LUMINAL, SubtypeLabel.HER2)
CLASS_NAMES = tuple(label.value for label in CLASS_ORDER)

VIEWS = ('CC', 'MLO', 'unknown')


@dataclass(frozen=True, eq=False)
class SampleRecord:
    """
    One image with its label.

    image_ref is a file path, or an embedded (H, W, 3) tensor in [0, 1] for
    records created in memory (ADASYN synthetics).
    """
    image_ref: Union[str, np.ndarray]
    label: SubtypeLabel
    patient_id: str
    view: str = 'unknown'
    synthetic: bool = False
    duplicate: bool = False
    name: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, 'label', SubtypeLabel.parse(self.label))
        if self.view not in VIEWS:
            raise ValidationError(f"view must be one of {VIEWS}, got '{self.view}'")

    @property
    def embedded(self):
        return not isinstance(self.image_ref, str)

    @property
    def display_name(self):
        if self.name:
            return self.name
        return self.image_ref if isinstance(self.image_ref, str) else f"<embedded:{self.patient_id}>"

    def as_duplicate(self):
        return replace(self, duplicate=True)


def count_labels(records) -> Dict[SubtypeLabel, int]:
    counts = {label: 0 for label in CLASS_ORDER}
    for r in records:
        counts[r.label] += 1
    return counts


@dataclass(frozen=True, eq=False)
class Dataset:
    records: Tuple[SampleRecord, ...]
    class_counts: Dict[SubtypeLabel, int] = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, 'records', tuple(self.records))
        object.__setattr__(self, 'class_counts', count_labels(self.records))

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, index):
        return self.records[index]

    def recount(self):
        return count_labels(self.records)

    @property
    def labels(self):
        """Class indices in CLASS_ORDER."""
        return np.array([r.label.class_index for r in self.records], dtype=int)

    def patients(self):
        return sorted({r.patient_id for r in self.records})

    def subset(self, indices):
        return Dataset(tuple(self.records[i] for i in indices))

    def of_label(self, label):
        label = SubtypeLabel.parse(label)
        return [r for r in self.records if r.label == label]

    def counts_by_name(self):
        return {label.value: n for label, n in self.class_counts.items()}
