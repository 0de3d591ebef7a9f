"""Seeded random streams.

Every stream is a Philox4x64 generator keyed through ``SeedSequence`` by
the user seed plus integer tags (stream id, frame, time slice, ...), so the
numbers drawn for one tag never depend on how many were drawn for another.
This generator choice is part of the reproducibility contract.
"""
import numpy as np

STREAM_FRINGE = 1
STREAM_ICCD = 2
STREAM_PAIRS = 3
STREAM_SCAN = 4


def philox(seed: int, *tags: int) -> np.random.Generator:
    if seed is None:
        raise ValueError("a seed is mandatory")
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, *map(int, tags)])))
