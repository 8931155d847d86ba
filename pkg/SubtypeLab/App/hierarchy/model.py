"""
App/hierarchy/model.py

TwoStageModel and its on-disk layout:

    <dir>/stage1.spec.json   stage1.params.bin
    <dir>/stage2.spec.json   stage2.params.bin
    <dir>/meta.json          class order, stage classes, seeds, configs, counts
"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Tuple

from App.data.records import CLASS_NAMES
from App.exceptions import DataIOError, ShapeError, ValidationError
from App.nn.layers import NetworkSpec, load_spec, save_spec
from App.nn.tensors import ModelParams, check_param_shapes, load_params, save_params

from .stages import STAGE1_CLASSES, STAGE2_CLASSES

logger = logging.getLogger(__name__)

META_FILE = 'meta.json'


@dataclass(frozen=True, eq=False)
class StageModel:
    spec: NetworkSpec
    params: ModelParams
    classes: Tuple[str, str]

    def __post_init__(self):
        if self.spec.n_classes != 2:
            raise ValidationError(f"stage models must have a 2-class head, got {self.spec.n_classes}")
        check_param_shapes(self.spec, self.params)
        object.__setattr__(self, 'classes', tuple(self.classes))


@dataclass(frozen=True, eq=False)
class TwoStageModel:
    stage1: StageModel
    stage2: StageModel
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.stage1.spec.input_shape != self.stage2.spec.input_shape:
            raise ShapeError(
                f"stage input shapes differ: {self.stage1.spec.input_shape} vs {self.stage2.spec.input_shape}"
            )

    @property
    def input_shape(self):
        return self.stage1.spec.input_shape

    @property
    def target_size(self):
        return self.input_shape[:2]

    @property
    def classes(self):
        return CLASS_NAMES


def save_model(model: TwoStageModel, directory):
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise DataIOError(f"cannot create model directory {directory}: {e}") from e

    for name, stage in (('stage1', model.stage1), ('stage2', model.stage2)):
        save_spec(stage.spec, directory / f'{name}.spec.json')
        save_params(stage.params, directory / f'{name}.params.bin')

    meta = dict(model.metadata)
    meta['class_order'] = list(CLASS_NAMES)
    meta['stage_classes'] = {'stage1': list(model.stage1.classes), 'stage2': list(model.stage2.classes)}
    meta['input_shape'] = list(model.input_shape)
    try:
        (directory / META_FILE).write_text(json.dumps(meta, indent=2, sort_keys=True) + '\n')
    except OSError as e:
        raise DataIOError(f"cannot write {META_FILE}: {e}") from e
    logger.info("Saved model to %s", directory)
    return directory


def load_model(directory) -> TwoStageModel:
    directory = Path(directory)
    if not directory.is_dir():
        raise DataIOError(f"model directory not found: {directory}")
    try:
        meta = json.loads((directory / META_FILE).read_text())
    except OSError as e:
        raise DataIOError(f"cannot read {directory / META_FILE}: {e}") from e
    except json.JSONDecodeError as e:
        raise ValidationError(f"{directory / META_FILE} is not valid JSON: {e}") from e

    if tuple(meta.get('class_order', ())) != CLASS_NAMES:
        raise ValidationError(f"model class order {meta.get('class_order')} does not match {list(CLASS_NAMES)}")
    stage_classes = meta.get('stage_classes', {})
    expected = {'stage1': STAGE1_CLASSES, 'stage2': STAGE2_CLASSES}

    stages = {}
    for name, classes in expected.items():
        if tuple(stage_classes.get(name, classes)) != classes:
            raise ValidationError(f"{name} classes {stage_classes.get(name)} do not match {list(classes)}")
        spec = load_spec(directory / f'{name}.spec.json')
        params = load_params(directory / f'{name}.params.bin', spec)
        stages[name] = StageModel(spec=spec, params=params, classes=classes)

    model = TwoStageModel(stage1=stages['stage1'], stage2=stages['stage2'], metadata=meta)
    logger.info("Loaded model from %s (input %s)", directory, model.input_shape)
    return model
