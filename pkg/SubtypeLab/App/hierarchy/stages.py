"""
App/hierarchy/stages.py

Binary relabelling for the two stages.

    stage 1: TN (positive, index 0)      vs non-TN (Luminal + HER2)
    stage 2: Luminal (positive, index 0) vs non-Luminal (HER2), TN removed
"""
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from App.data.records import Dataset, SubtypeLabel
from App.exceptions import LabelError

STAGE1_CLASSES = ('TN', 'non-TN')
STAGE2_CLASSES = ('Luminal', 'non-Luminal')


@dataclass(frozen=True, eq=False)
class BinaryDataset:
    dataset: Dataset
    targets: np.ndarray
    classes: Tuple[str, str]

    def __len__(self):
        return len(self.dataset)

    def counts(self):
        return {
            self.classes[0]: int(np.count_nonzero(self.targets == 0)),
            self.classes[1]: int(np.count_nonzero(self.targets == 1)),
        }


def relabel_stage1(dataset: Dataset) -> BinaryDataset:
    targets = np.array([0 if r.label == SubtypeLabel.TN else 1 for r in dataset], dtype=int)
    return BinaryDataset(dataset=dataset, targets=targets, classes=STAGE1_CLASSES)


def relabel_stage2(dataset: Dataset) -> BinaryDataset:
    kept = [r for r in dataset if r.label != SubtypeLabel.TN]
    if not kept:
        raise LabelError("stage 2 has no Luminal or HER2 samples")
    targets = np.array([0 if r.label == SubtypeLabel.LUMINAL else 1 for r in kept], dtype=int)
    return BinaryDataset(dataset=Dataset(tuple(kept)), targets=targets, classes=STAGE2_CLASSES)
