"""Seed handling.

Every random draw in crimelab comes from numpy's PCG64 bit generator
(``numpy.random.Generator``).  Sub-streams are derived by feeding the master
seed plus a tuple of integer keys to ``numpy.random.SeedSequence``, which
hashes them into an independent state.  Permutations use
``Generator.permutation`` (a Fisher-Yates shuffle).

Because sub-seeds depend only on (master seed, keys), work units may run in
any order or on any thread without changing results.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), *map(int, keys)])))


def derive_seed(seed: int, *keys: int) -> int:
    """A 63-bit child seed for the stream ``(seed, *keys)``."""
    state = np.random.SeedSequence([int(seed), *map(int, keys)]).generate_state(2, dtype=np.uint32)
    return int((int(state[0]) << 31) ^ int(state[1]))
