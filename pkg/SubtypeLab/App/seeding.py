"""
App/seeding.py

Per-purpose random streams.

All randomness flows from a run seed through derive_rng(seed, *keys):
string keys name a purpose ("split", "dropout", ...) and integer keys mix in
an index (pass number, sample number, class index). The same (seed, keys)
always yields the same stream and distinct keys yield independent streams.
"""
import zlib

import numpy as np


def _key_to_int(key):
    if isinstance(key, (bool, np.bool_)):
        return int(key)
    if isinstance(key, (int, np.integer)):
        if key < 0:
            raise ValueError(f"seed keys must be non-negative, got {key}")
        return int(key)
    return zlib.crc32(str(key).encode('utf-8'))


def seed_entropy(seed, *keys):
    """Entropy words for SeedSequence; exposed for tests."""
    return [_key_to_int(seed), *(_key_to_int(k) for k in keys)]


def derive_rng(seed, *keys):
    """Return a numpy Generator for the purpose identified by keys."""
    return np.random.default_rng(np.random.SeedSequence(seed_entropy(seed, *keys)))


def derive_seed(seed, *keys):
    """Integer seed for a sub-component (stored in metadata)."""
    return int(np.random.SeedSequence(seed_entropy(seed, *keys)).generate_state(1)[0])
