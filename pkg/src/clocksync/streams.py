"""Named, seedable random sub-streams.

Every stochastic ingredient of a run (tick scheduling, per-node clock
readings, per-arc hearing and delay jitter) draws from its own generator,
keyed by a stable name.  Two runs with the same seed therefore consume
identical noise even when the synchronization algorithm differs, which
makes variance-reduction comparisons (same noise, different algorithm)
meaningful and traces bit-reproducible.
"""

from __future__ import annotations

import zlib

import numpy as np


def substream(seed: int, *key) -> np.random.Generator:
    """Return a generator for the sub-stream identified by ``key``.

    Keys may mix strings and integers; strings are reduced with CRC32 so
    the mapping is stable across processes and platforms.
    """
    words = [int(seed) & 0xFFFFFFFF]
    for part in key:
        if isinstance(part, str):
            words.append(zlib.crc32(part.encode("utf-8")))
        else:
            words.append(int(part) & 0xFFFFFFFF)
    return np.random.default_rng(np.random.SeedSequence(words))
