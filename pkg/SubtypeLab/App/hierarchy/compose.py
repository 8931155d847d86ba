"""
App/hierarchy/compose.py

Product-rule composition of the two binary stages into a 3-class
distribution over (TN, Luminal, HER2).
"""
import numpy as np

from App.data.records import CLASS_NAMES
from App.exceptions import ValidationError
from App.nn.distributions import ClassDistribution

MODES = ('soft', 'hard')


def _binary(dist, name):
    p = dist.probabilities if isinstance(dist, ClassDistribution) else np.asarray(dist, dtype=np.float64)
    if p.shape != (2,):
        raise ValidationError(f"{name} must be a binary distribution, got shape {p.shape}")
    return p


def compose_distribution(p1, p2) -> ClassDistribution:
    """p(TN) = p1(TN); p(Luminal) = p1(non-TN) p2(Luminal); p(HER2) = p1(non-TN) p2(non-Luminal)."""
    a = _binary(p1, 'stage 1')
    b = _binary(p2, 'stage 2')
    return ClassDistribution(np.array([a[0], a[1] * b[0], a[1] * b[1]]), CLASS_NAMES)


def stage1_routes_to_tn(p1):
    a = _binary(p1, 'stage 1')
    return int(np.argmax(a)) == 0


def compose_hard(p1, p2=None) -> ClassDistribution:
    """
    Hard routing: when stage 1 picks TN, stage 2 is not consulted and the
    non-TN mass is split evenly; otherwise the product rule applies.
    """
    a = _binary(p1, 'stage 1')
    if stage1_routes_to_tn(a):
        return ClassDistribution(np.array([a[0], a[1] / 2.0, a[1] / 2.0]), CLASS_NAMES)
    if p2 is None:
        raise ValidationError("stage 2 distribution is required when stage 1 routes to non-TN")
    return compose_distribution(a, p2)
