"""
App/uncertainty/mc.py

Monte-Carlo dropout inference and predictive entropy.

mc_forward runs T stochastic passes (dropout active, one derived random
stream per pass index) and averages the softmax outputs in pass order.
deterministic_predict is the single eval-mode pass used for the
"without uncertainty" baseline. Both normalize through _renormalize, so
with dropout rate 0 the two agree bit for bit.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from App.exceptions import NumericError, ValidationError
from App.nn.distributions import SUM_TOLERANCE, ClassDistribution
from App.nn.engine import forward
from App.seeding import derive_rng

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MCConfig:
    T: int = 50
    seed: int = 0
    keep_passes: bool = False

    def __post_init__(self):
        if isinstance(self.T, bool) or int(self.T) != self.T or self.T < 1:
            raise ValidationError(f"T must be a positive integer, got {self.T}")
        object.__setattr__(self, 'T', int(self.T))

    def to_dict(self):
        return {'T': self.T, 'seed': self.seed}


@dataclass(frozen=True, eq=False)
class UncertaintyReport:
    """Mean distribution with its entropy. T is None for a deterministic pass."""
    mean: ClassDistribution
    entropy: float
    T: Optional[int]
    passes: Optional[np.ndarray] = None

    @property
    def probabilities(self):
        return self.mean.probabilities

    @property
    def label(self):
        return self.mean.label

    def to_dict(self):
        return {
            'probs': [float(p) for p in self.mean.probabilities],
            'entropy': float(self.entropy),
            'T': self.T,
            'classes': list(self.mean.classes),
        }


def predictive_entropy(dist) -> float:
    """-sum p ln p in nats, with 0 ln 0 = 0."""
    p = dist.probabilities if isinstance(dist, ClassDistribution) else np.asarray(dist, dtype=np.float64)
    nz = p[p > 0]
    h = float(-np.sum(nz * np.log(nz)))
    return max(h, 0.0)


def _renormalize(probs):
    total = probs.sum(axis=-1, keepdims=True)
    if np.any(np.abs(total - 1.0) > SUM_TOLERANCE):
        raise NumericError(f"averaged probabilities drifted from 1 by {np.max(np.abs(total - 1.0)):.3e}")
    return probs / total


def _classes(spec, classes):
    if classes is None:
        return tuple(str(c) for c in range(spec.n_classes))
    if len(classes) != spec.n_classes:
        raise ValidationError(f"{len(classes)} class labels for a {spec.n_classes}-class head")
    return tuple(classes)


def _report(probs, classes, T, passes=None):
    dist = ClassDistribution(probs, classes)
    return UncertaintyReport(mean=dist, entropy=predictive_entropy(dist), T=T, passes=passes)


def mc_probabilities(spec, params, X, config: MCConfig):
    """
    Averaged probabilities for a batch.

    Returns:
        (mean (N, C), passes (T, N, C) or None)
    """
    mean = None
    kept = [] if config.keep_passes else None
    for t in range(1, config.T + 1):
        out, _ = forward(spec, params, X, mode='mc', rng=derive_rng(config.seed, 'mc', t))
        if mean is None:
            mean = out.copy()
        else:
            mean += (out - mean) / t
        if kept is not None:
            kept.append(out)
    passes = np.stack(kept) if kept is not None else None
    return _renormalize(mean), passes


def mc_forward(spec, params, x, config: MCConfig, classes: Sequence[str] = None) -> UncertaintyReport:
    """Monte-Carlo predictive distribution of a single sample."""
    classes = _classes(spec, classes)
    mean, passes = mc_probabilities(spec, params, x, config)
    if mean.ndim != 1:
        raise ValidationError("mc_forward takes one sample; use mc_forward_batch for batches")
    return _report(mean, classes, config.T, passes)


def mc_forward_batch(spec, params, X, config: MCConfig, classes: Sequence[str] = None):
    """One UncertaintyReport per row of X; each row draws its own masks."""
    classes = _classes(spec, classes)
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] == 0:
        return []
    mean, passes = mc_probabilities(spec, params, X, config)
    logger.debug("MC batch: N=%d T=%d", X.shape[0], config.T)
    return [
        _report(mean[i], classes, config.T, passes[:, i] if passes is not None else None)
        for i in range(mean.shape[0])
    ]


def deterministic_probabilities(spec, params, X):
    out, _ = forward(spec, params, X, mode='eval')
    return _renormalize(out)


def deterministic_predict(spec, params, x, classes: Sequence[str] = None) -> ClassDistribution:
    """Single eval-mode pass (dropout is the identity)."""
    return ClassDistribution(deterministic_probabilities(spec, params, x), _classes(spec, classes))


def deterministic_batch(spec, params, X, classes: Sequence[str] = None):
    classes = _classes(spec, classes)
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] == 0:
        return []
    probs = deterministic_probabilities(spec, params, X)
    return [_report(row, classes, None) for row in probs]
