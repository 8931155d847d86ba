"""
App/data/oversampling.py

Class rebalancing for training data: ADASYN synthetics and random
duplication, applied once after the split and before training.

ADASYN works in the space of flattened preprocessed pixel vectors with exact
Euclidean neighbors from scikit-learn.
"""
import logging
import warnings
from dataclasses import dataclass, field
from typing import Dict

import numpy as np
from sklearn.neighbors import NearestNeighbors

from App.exceptions import ValidationError
from App.seeding import derive_rng

from .features import record_tensor
from .records import CLASS_ORDER, Dataset, SampleRecord, SubtypeLabel

logger = logging.getLogger(__name__)

METHODS = ('adasyn', 'random', 'none')


class AdasynFallbackWarning(UserWarning):
    pass


def nearest_neighbors(points, k):
    """(n, k) indices of the k nearest other points of every row, nearest first."""
    index = NearestNeighbors(n_neighbors=k, algorithm='brute').fit(points)
    # without a query array each point is excluded from its own neighbors
    return index.kneighbors(return_distance=False)


def largest_remainder(weights, total):
    """Integer allocation of total proportional to weights, summing exactly to total."""
    raw = np.asarray(weights, dtype=np.float64) * total
    counts = np.floor(raw).astype(int)
    short = int(total - counts.sum())
    if short > 0:
        order = np.argsort(-(raw - counts), kind='stable')
        counts[order[:short]] += 1
    return counts


def adasyn(minority, majority, k=5, target_count=None, seed=0, rng=None, return_sources=False):
    """
    Adaptive synthetic oversampling.

    Args:
        minority: (m, d) feature vectors of the class to grow
        majority: (M, d) feature vectors of every other class
        k: neighbors considered for difficulty ratios and interpolation
        target_count: minority size after oversampling (default: M)
        rng: Generator overriding the seeded stream

    Returns:
        (G, d) synthetic vectors; with return_sources also
        (base_indices, neighbor_indices, lambdas)
    """
    minority = np.asarray(minority, dtype=np.float64)
    if minority.ndim != 2:
        raise ValidationError(f"minority must be a 2-D array of feature vectors, got shape {minority.shape}")
    majority = np.asarray(majority, dtype=np.float64).reshape(-1, minority.shape[1])
    m, n_major = len(minority), len(majority)
    if m < 2:
        raise ValidationError(f"ADASYN needs at least 2 minority samples, got {m}")
    if not 1 <= k < m + n_major:
        raise ValidationError(f"k must be in [1, {m + n_major}), got {k}")
    if target_count is None:
        target_count = n_major
    if target_count < m:
        raise ValidationError(f"target_count {target_count} is below the minority size {m}")
    rng = rng if rng is not None else derive_rng(seed, 'adasyn')

    G = int(target_count) - m
    d = minority.shape[1]
    empty = np.zeros((0, d))
    if G == 0:
        none = np.zeros(0, dtype=int)
        return (empty, (none, none, np.zeros(0))) if return_sources else empty

    combined = np.vstack([minority, majority]) if n_major else minority
    k_min = min(k, m - 1)
    # rows past m in combined are majority samples
    ratios = np.count_nonzero(nearest_neighbors(combined, k)[:m] >= m, axis=1) / k
    minority_neighbors = nearest_neighbors(minority, k_min)

    if ratios.sum() == 0:
        msg = "no minority sample has majority neighbors; using uniform ADASYN weights"
        warnings.warn(msg, AdasynFallbackWarning)
        logger.warning(msg)
        weights = np.full(m, 1.0 / m)
    else:
        weights = ratios / ratios.sum()
    g = largest_remainder(weights, G)

    synthetic = np.empty((G, d))
    bases = np.empty(G, dtype=int)
    neighbors = np.empty(G, dtype=int)
    lambdas = np.empty(G)
    row = 0
    for i in range(m):
        for _ in range(g[i]):
            z = minority_neighbors[i][int(rng.integers(k_min))]
            lam = float(rng.random())
            synthetic[row] = minority[i] + lam * (minority[z] - minority[i])
            bases[row], neighbors[row], lambdas[row] = i, z, lam
            row += 1

    logger.debug("ADASYN: m=%d M=%d k=%d generated=%d", m, n_major, k, G)
    if return_sources:
        return synthetic, (bases, neighbors, lambdas)
    return synthetic


def random_oversample(samples, target_count, seed=0, rng=None):
    """
    Every original once, followed by target_count - len(samples) uniform
    draws with replacement. SampleRecord draws are flagged duplicate.
    """
    samples = list(samples)
    if not samples:
        raise ValidationError("random_oversample needs at least one sample")
    if target_count < len(samples):
        raise ValidationError(f"target_count {target_count} is below the sample count {len(samples)}")
    rng = rng if rng is not None else derive_rng(seed, 'oversample')

    extra = int(target_count) - len(samples)
    picks = rng.integers(len(samples), size=extra) if extra else []
    duplicates = []
    for j in picks:
        s = samples[int(j)]
        duplicates.append(s.as_duplicate() if isinstance(s, SampleRecord) else s)
    return samples + duplicates


@dataclass(frozen=True)
class RebalancePolicy:
    """Per-class method ('adasyn', 'random' or 'none'); target is the largest class count."""
    methods: Dict[SubtypeLabel, str] = field(default_factory=lambda: {
        SubtypeLabel.TN: 'adasyn',
        SubtypeLabel.LUMINAL: 'none',
        SubtypeLabel.HER2: 'random',
    })
    k: int = 5

    def __post_init__(self):
        methods = {SubtypeLabel.parse(label): method for label, method in self.methods.items()}
        for label, method in methods.items():
            if method not in METHODS:
                raise ValidationError(f"rebalance method for {label.value} must be one of {METHODS}, got '{method}'")
        if self.k < 1:
            raise ValidationError(f"ADASYN k must be positive, got {self.k}")
        object.__setattr__(self, 'methods', methods)

    def method_for(self, label):
        return self.methods.get(label, 'none')

    def without(self, label):
        methods = dict(self.methods)
        methods[SubtypeLabel.parse(label)] = 'none'
        return RebalancePolicy(methods=methods, k=self.k)

    @classmethod
    def from_dict(cls, data):
        return cls(methods=dict(data.get('methods', {})), k=int(data.get('k', 5)))

    def to_dict(self):
        return {'methods': {label.value: m for label, m in self.methods.items()}, 'k': self.k}


def _adasyn_records(train, label, target, policy, target_size, seed):
    minority = train.of_label(label)
    majority = [r for r in train if r.label != label]
    shape = (int(target_size[0]), int(target_size[1]), 3)
    X_min = np.stack([record_tensor(r, target_size).ravel() for r in minority])
    X_maj = (np.stack([record_tensor(r, target_size).ravel() for r in majority])
             if majority else np.zeros((0, X_min.shape[1])))
    k = min(policy.k, len(minority) + len(majority) - 1)
    vectors, (bases, _, _) = adasyn(
        X_min, X_maj, k=k, target_count=target,
        rng=derive_rng(seed, 'adasyn', label.class_index), return_sources=True,
    )
    return [
        SampleRecord(
            image_ref=np.clip(v, 0.0, 1.0).reshape(shape), label=label,
            patient_id=minority[b].patient_id, view=minority[b].view,
            synthetic=True, name=f"adasyn:{label.value}:{n:05d}",
        )
        for n, (v, b) in enumerate(zip(vectors, bases))
    ]


def rebalance(train: Dataset, policy: RebalancePolicy = None, target_size=(32, 32), seed=0) -> Dataset:
    """Grow each configured class to the largest class count present in train."""
    policy = policy or RebalancePolicy()
    counts = train.class_counts
    target = max(counts.values()) if len(train) else 0
    logger.info("Rebalance START: counts=%s target=%d", train.counts_by_name(), target)

    added = []
    for label in CLASS_ORDER:
        method = policy.method_for(label)
        n = counts[label]
        if method == 'none' or n == 0 or n >= target:
            continue
        if method == 'adasyn':
            new = _adasyn_records(train, label, target, policy, target_size, seed)
        else:
            grown = random_oversample(train.of_label(label), target,
                                      rng=derive_rng(seed, 'oversample', label.class_index))
            new = grown[n:]
        logger.info("Rebalance %s: %s added %d", label.value, method, len(new))
        added.extend(new)

    result = Dataset(train.records + tuple(added))
    logger.info("Rebalance DONE: counts=%s", result.counts_by_name())
    return result
