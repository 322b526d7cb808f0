"""Named, reproducible random streams derived from one integer seed."""
from __future__ import annotations

import zlib

import numpy as np


def derive_seed(seed: int, *keys) -> np.random.SeedSequence:
    """Seed sequence for the stream at path ``keys`` below ``seed``; independent of call order."""
    words = [int(seed) & 0xFFFFFFFF]
    for k in keys:
        words.append(zlib.crc32(str(k).encode("utf-8")))
    return np.random.SeedSequence(words)


def derive_rng(seed: int, *keys) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, *keys))
