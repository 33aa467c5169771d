"""Per-cell random streams derived from one root seed.

Each cell key (strings, ints, floats) is mapped to integers and appended to
the root seed as a :class:`numpy.random.SeedSequence` entropy pool, so any
cell can be regenerated on its own, in any order, on any worker.
"""
from __future__ import annotations

import struct
import zlib

import numpy as np


def _word(key) -> int:
    if isinstance(key, (bool, np.bool_)):
        return int(key)
    if isinstance(key, (int, np.integer)):
        if key < 0:
            raise ValueError("negative seed keys are not supported")
        return int(key)
    if isinstance(key, (float, np.floating)):
        return struct.unpack("<Q", struct.pack("<d", float(key)))[0]
    return zlib.crc32(str(key).encode("utf-8"))


def cell_seed(root: int, *keys) -> np.random.SeedSequence:
    return np.random.SeedSequence([_word(root), *(_word(k) for k in keys)])


def cell_rng(root: int, *keys) -> np.random.Generator:
    return np.random.default_rng(cell_seed(root, *keys))
