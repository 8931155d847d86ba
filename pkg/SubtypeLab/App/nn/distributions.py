"""
App/nn/distributions.py

ClassDistribution: a normalized probability vector with its class labels.
"""
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from App.exceptions import NumericError, ValidationError

SUM_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class ClassDistribution:
    probabilities: np.ndarray
    classes: Tuple[str, ...]

    def __post_init__(self):
        probs = np.asarray(self.probabilities, dtype=np.float64)
        if probs.ndim != 1 or probs.shape[0] < 2:
            raise ValidationError(f"distribution needs a 1-D vector of >= 2 classes, got shape {probs.shape}")
        if len(self.classes) != probs.shape[0]:
            raise ValidationError(
                f"{len(self.classes)} class labels for {probs.shape[0]} probabilities"
            )
        if not np.all(np.isfinite(probs)):
            raise NumericError(f"non-finite probabilities: {probs}")
        if np.any(probs < -SUM_TOLERANCE) or np.any(probs > 1 + SUM_TOLERANCE):
            raise ValidationError(f"probabilities outside [0, 1]: {probs}")
        if abs(probs.sum() - 1.0) > SUM_TOLERANCE:
            raise ValidationError(f"probabilities sum to {probs.sum():.12f}, expected 1")
        probs = np.clip(probs, 0.0, 1.0)
        probs.setflags(write=False)
        object.__setattr__(self, 'probabilities', probs)
        object.__setattr__(self, 'classes', tuple(str(c) for c in self.classes))

    @property
    def n_classes(self):
        return self.probabilities.shape[0]

    def argmax(self):
        # np.argmax returns the first maximum, so ties follow class order
        return int(np.argmax(self.probabilities))

    @property
    def label(self):
        return self.classes[self.argmax()]

    def prob(self, label):
        return float(self.probabilities[self.classes.index(label)])

    def to_dict(self):
        return {
            'probs': [float(p) for p in self.probabilities],
            'classes': list(self.classes),
        }

    def __repr__(self):
        pairs = ', '.join(f"{c}={p:.4f}" for c, p in zip(self.classes, self.probabilities))
        return f"ClassDistribution({pairs})"
