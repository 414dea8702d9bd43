"""Counter-based random streams.

Every stream is a Philox generator whose key comes from the master seed and
a stable cell id, and whose counter's top word selects the block (or trial).
Streams never overlap, so work can be split across processes in any order
and still reproduce the same numbers.
"""

from __future__ import annotations

import zlib

import numpy as np

_BLOCK_SPACE = 0
_TRIAL_SPACE = 1


def cell_id(*parts) -> int:
    """Stable 32-bit id for a grid cell, independent of interpreter hash seeds."""
    text = "|".join(repr(p) for p in parts)
    return zlib.crc32(text.encode("utf-8"))


def _key(master_seed: int, cell: int, space: int) -> np.ndarray:
    seq = np.random.SeedSequence([int(master_seed) & (2**64 - 1), int(cell), space])
    return seq.generate_state(2, dtype=np.uint64)


def block_stream(master_seed: int, cell: int, block: int) -> np.random.Generator:
    counter = np.array([0, 0, 0, block], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=_key(master_seed, cell, _BLOCK_SPACE), counter=counter))


def trial_stream(master_seed: int, cell: int, trial_index: int) -> np.random.Generator:
    counter = np.array([0, 0, 0, trial_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=_key(master_seed, cell, _TRIAL_SPACE), counter=counter))
