from .features import clear_feature_cache, load_features, record_tensor
from .imaging import (
    AugmentConfig,
    augment,
    augment_batch,
    bilinear_resize,
    flip_horizontal,
    flip_vertical,
    load_tensor,
    preprocess,
    read_image,
    rotate,
    write_image,
)
from .manifest import MANIFEST_COLUMNS, load_manifest, write_manifest
from .oversampling import RebalancePolicy, adasyn, random_oversample, rebalance
from .records import CLASS_NAMES, CLASS_ORDER, Dataset, SampleRecord, SubtypeLabel, count_labels
from .splitting import StratificationWarning, split
from .synthetic import add_noise, generate_synthetic, template

__all__ = [
    'AugmentConfig', 'augment', 'augment_batch', 'bilinear_resize', 'flip_horizontal',
    'flip_vertical', 'load_tensor', 'preprocess', 'read_image', 'rotate', 'write_image',
    'MANIFEST_COLUMNS', 'load_manifest', 'write_manifest',
    'RebalancePolicy', 'adasyn', 'random_oversample', 'rebalance',
    'CLASS_NAMES', 'CLASS_ORDER', 'Dataset', 'SampleRecord', 'SubtypeLabel', 'count_labels',
    'StratificationWarning', 'split',
    'add_noise', 'generate_synthetic', 'template',
    'clear_feature_cache', 'load_features', 'record_tensor',
]
