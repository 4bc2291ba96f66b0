"""Counter-based random streams shared by the simulation kernels.

Every Monte Carlo draw in this package comes from a splitmix64 stream keyed by
(seed, stream id, trial index).  Draw k of a stream is a pure function of the
key and k, so trials can be run in any order, split across any number of
workers, or replayed individually, and always produce the same numbers.  The
compiled kernel implements the same mixing in C; results are bit-identical
across backends.
"""

from __future__ import annotations

import numpy as np

GAMMA = 0x9E3779B97F4A7C15
_MASK = 0xFFFFFFFFFFFFFFFF
_MUL1 = 0xBF58476D1CE4E5B9
_MUL2 = 0x94D049BB133111EB
_INV53 = 2.0**-53


def mix64(z: int) -> int:
    """splitmix64 output mixing of a 64-bit integer (scalar, pure Python)."""
    z = (z + GAMMA) & _MASK
    z = ((z ^ (z >> 30)) * _MUL1) & _MASK
    z = ((z ^ (z >> 27)) * _MUL2) & _MASK
    return z ^ (z >> 31)


def stream_key(seed: int, stream: int, trial: int) -> int:
    """64-bit stream key for (seed, stream id, trial index)."""
    return mix64(mix64(mix64(seed & _MASK) ^ stream & _MASK) ^ trial & _MASK)


def stream_keys(seed: int, stream: int, trials: np.ndarray) -> np.ndarray:
    """Vectorized stream_key over an array of trial indices (uint64)."""
    base = mix64(mix64(seed & _MASK) ^ stream & _MASK)
    return mix64_vec(np.uint64(base) ^ trials.astype(np.uint64))


def mix64_vec(z: np.ndarray) -> np.ndarray:
    """Vectorized splitmix64 output mixing over a uint64 array."""
    z = (z + np.uint64(GAMMA)) & np.uint64(_MASK)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MUL1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MUL2)
    return z ^ (z >> np.uint64(31))


def uniform(key: int, k: int) -> float:
    """Draw k of the stream with the given key, as a float in [0, 1)."""
    return (mix64((key + (k + 1) * GAMMA) & _MASK) >> 11) * _INV53


def uniform_vec(keys: np.ndarray, k: int) -> np.ndarray:
    """Draw k for many streams at once (keys uint64) -> float64 in [0, 1)."""
    z = keys + np.uint64((k + 1) * GAMMA & _MASK)
    return (mix64_vec(z) >> np.uint64(11)).astype(np.float64) * _INV53
