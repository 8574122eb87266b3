"""Deterministic substreams on top of the Philox counter-based generator.

Every source of randomness in the package draws from Philox-4x64-10 keyed
by (seed, stream id), so streams are independent, reproducible across
platforms, and insensitive to how many other streams exist.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1

# reserved stream ids, far above any plausible column index
LABEL_TRAIN_STREAM = 1 << 62
LABEL_TEST_STREAM = (1 << 62) + 1
FOLD_STREAM = (1 << 62) + 2
SUBSAMPLE_STREAM = (1 << 62) + 3


def substream(seed: int, stream: int) -> np.random.Generator:
    """Generator for the (seed, stream) Philox substream."""
    key = np.array([seed & _MASK64, stream & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
