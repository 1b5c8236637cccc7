"""Reproducible random streams.

All randomness flows from a single 64-bit seed.  Substreams (one per replica,
per particle system, per step, ...) use a counter-based Philox4x64 generator
keyed by a SplitMix64 mix of the seed and the substream indexes, so that

* the same (seed, indexes) always reproduces the same stream, bit for bit,
* streams are independent of the order in which they are created, and
* the derivation is a documented closed formula, portable across languages.

Key derivation for indexes (i1, ..., ik):

    key = seed
    for i in (i1, ..., ik):  key = splitmix64(key + GOLDEN * (i + 1))

with GOLDEN = 0x9E3779B97F4A7C15 and splitmix64 the standard finalizer
(Steele/Lea/Flood mixing constants).  Normal and uniform variates are drawn
from numpy's Generator on top of the Philox stream.
"""

from __future__ import annotations

import numpy as np

__all__ = ["substream_key", "make_generator"]

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _splitmix64(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def substream_key(seed: int, *indexes: int) -> int:
    """64-bit Philox key for the substream of ``seed`` at ``indexes``."""
    key = seed & _MASK
    for i in indexes:
        key = _splitmix64((key + _GOLDEN * ((i & _MASK) + 1)) & _MASK)
    return key


def make_generator(seed: int, *indexes: int) -> np.random.Generator:
    """Generator for the (seed, indexes) substream."""
    return np.random.Generator(np.random.Philox(key=substream_key(seed, *indexes)))
