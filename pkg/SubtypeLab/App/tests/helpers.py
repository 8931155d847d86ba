"""
Shared fixtures for the App test-suite.
"""
import numpy as np

from App.data.records import Dataset, SampleRecord, SubtypeLabel
from App.data.synthetic import add_noise, template
from App.hierarchy.flat import FlatModel
from App.hierarchy.model import StageModel, TwoStageModel
from App.hierarchy.stages import STAGE1_CLASSES, STAGE2_CLASSES
from App.nn.layers import build_network_spec


def embedded_dataset(counts, size=(8, 8), noise=0.05, seed=0):
    """
    Dataset of in-memory tensors built from the synthetic class templates.

    Args:
        counts: {'Luminal': n, 'HER2': n, 'TN': n}
    """
    rng = np.random.default_rng(seed)
    records = []
    for name, n in counts.items():
        label = SubtypeLabel.parse(name)
        base = template(label, size).astype(np.float64) / 255.0
        for j in range(n):
            pixels = add_noise(base, noise, rng) if noise else base
            tensor = np.repeat(pixels[..., None], 3, axis=2)
            records.append(SampleRecord(
                image_ref=tensor, label=label, patient_id=f"{name}-{j // 2:04d}",
                view=('CC', 'MLO')[j % 2], name=f"{name}:{j}",
            ))
    return Dataset(tuple(records))


def bias_stage(probabilities, hidden=None, dropout=0.0):
    """
    A 1-input stage whose output is fixed by its biases.

    With hidden=None the network is dense(2) -> softmax and outputs exactly
    softmax(log p). With hidden=k a (dense(k) -> relu -> dropout) block is
    inserted, fed by zero weights, so the output is unchanged.
    """
    widths = () if hidden is None else (hidden,)
    spec = build_network_spec((1,), backbone='none', widths=widths, dropout=dropout, n_classes=2)
    params = {}
    for i, shapes in spec.param_shapes().items():
        params[i] = {'W': np.zeros(shapes['W']), 'b': np.zeros(shapes['b'])}
    last = max(params)
    with np.errstate(divide='ignore'):
        logits = np.log(np.asarray(probabilities, dtype=np.float64))
    params[last]['b'] = np.where(np.isfinite(logits), logits, -1000.0)
    return spec, params


def fixed_model(p1, p2, hidden=None, dropout=0.0):
    spec1, params1 = bias_stage(p1, hidden, dropout)
    spec2, params2 = bias_stage(p2, hidden, dropout)
    return TwoStageModel(
        stage1=StageModel(spec=spec1, params=params1, classes=STAGE1_CLASSES),
        stage2=StageModel(spec=spec2, params=params2, classes=STAGE2_CLASSES),
    )


LEVELS = {SubtypeLabel.TN: 0.0, SubtypeLabel.LUMINAL: 0.5, SubtypeLabel.HER2: 1.0}


def level_dataset(counts, size=(2, 2)):
    """Constant images whose brightness encodes the class: TN 0, Luminal 0.5, HER2 1."""
    records = []
    for name, n in counts.items():
        label = SubtypeLabel.parse(name)
        for j in range(n):
            records.append(SampleRecord(
                image_ref=np.full((*size, 3), LEVELS[label]), label=label,
                patient_id=f"{name}-{j:04d}", name=f"{name}:{j}",
            ))
    return Dataset(tuple(records))


def _threshold_stage(size, threshold, classes):
    # logit(second class) - logit(first class) = 40 * (mean pixel - threshold)
    spec = build_network_spec((*size, 3), backbone='none', widths=(), n_classes=2)
    n = size[0] * size[1] * 3
    W = np.zeros((n, 2))
    W[:, 1] = 40.0 / n
    params = {1: {'W': W, 'b': np.array([0.0, -40.0 * threshold])}}
    return StageModel(spec=spec, params=params, classes=classes)


def truth_model(size=(2, 2)):
    """Two-stage model that recovers the class of every level_dataset image."""
    return TwoStageModel(
        stage1=_threshold_stage(size, 0.25, STAGE1_CLASSES),
        stage2=_threshold_stage(size, 0.75, STAGE2_CLASSES),
    )


def flat_truth_model(size=(2, 2)):
    """Flat 3-class model that recovers the class of every level_dataset image."""
    spec = build_network_spec((*size, 3), backbone='none', widths=(), n_classes=3)
    (index, shapes), = spec.param_shapes().items()
    n = shapes['W'][0]
    # logits (0, 40 m - 10, 80 m - 40) for mean pixel m
    W = np.zeros(shapes['W'])
    W[:, 1] = 40.0 / n
    W[:, 2] = 80.0 / n
    params = {index: {'W': W, 'b': np.array([0.0, -10.0, -40.0])}}
    return FlatModel(spec=spec, params=params)
