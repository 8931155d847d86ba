from .mc import (
    MCConfig,
    UncertaintyReport,
    deterministic_batch,
    deterministic_predict,
    mc_forward,
    mc_forward_batch,
    predictive_entropy,
)

__all__ = [
    'MCConfig',
    'UncertaintyReport',
    'deterministic_batch',
    'deterministic_predict',
    'mc_forward',
    'mc_forward_batch',
    'predictive_entropy',
]
