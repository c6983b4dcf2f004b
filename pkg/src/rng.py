"""
Seeded, splittable random streams.

Every stream is a PCG64 generator keyed by (seed, *keys) through numpy's
SeedSequence spawn keys, so a stream never depends on which other streams
were drawn before it.
"""

from typing import Tuple

import numpy as np

GENERATOR_NAME = "PCG64"

# Stream names used as the first spawn key, one per consumer
STREAM_WORDS = 1
STREAM_TRANSLATIONS = 2
STREAM_CENTERS = 3
STREAM_REPLICAS = 4
STREAM_DRAWS = 5


def _spawn_key(keys: Tuple[int, ...]) -> Tuple[int, ...]:
    spawn_key = []
    for key in keys:
        key = int(key)
        if key < 0:
            raise ValueError(f"RNG keys must be non-negative, got {key}")
        spawn_key.append(key)
    return tuple(spawn_key)


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    """Return the generator for stream (seed, *keys)"""
    sequence = np.random.SeedSequence(int(seed), spawn_key=_spawn_key(keys))
    return np.random.Generator(np.random.PCG64(sequence))


def derive_seed(seed: int, *keys: int) -> int:
    """Derive a child integer seed for stream (seed, *keys)"""
    sequence = np.random.SeedSequence(int(seed), spawn_key=_spawn_key(keys))
    return int(sequence.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
