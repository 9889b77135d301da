"""Counter-based splitmix64 streams shared by both kernel backends.

Draw ``c`` of a stream with key ``k`` is ``mix(k + (c + 1) * GOLDEN)`` (mod 2**64),
so any draw can be computed independently. The compiled kernels use the same
arithmetic, which makes the two backends bit-identical for a given seed.
"""

from __future__ import annotations

import numpy as np

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
DERIVE = 0xD1B54A32D192ED03
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_INV53 = 1.0 / (1 << 53)


def mix(z: int) -> int:
    z &= MASK
    z = ((z ^ (z >> 30)) * _M1) & MASK
    z = ((z ^ (z >> 27)) * _M2) & MASK
    return z ^ (z >> 31)


def seed_key(seed: int) -> int:
    """Map an arbitrary integer seed to a 64-bit stream key."""
    return mix((seed & MASK) + GOLDEN)


def derive(key: int, index: int) -> int:
    """Key of the ``index``-th child stream (one per trial, per miner, ...)."""
    return mix(key ^ mix(((index + 1) * DERIVE) & MASK))


def draw(key: int, counter: int) -> int:
    return mix(key + (counter + 1) * GOLDEN)


def uniform(key: int, counter: int) -> float:
    return (draw(key, counter) >> 11) * _INV53


# numpy versions; uint64 arithmetic wraps modulo 2**64 as required.

_GOLDEN64 = np.uint64(GOLDEN)
_DERIVE64 = np.uint64(DERIVE)
_M1_64 = np.uint64(_M1)
_M2_64 = np.uint64(_M2)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)


def mix_array(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _S30)) * _M1_64
    z = (z ^ (z >> _S27)) * _M2_64
    return z ^ (z >> _S31)


def derive_array(key: int, indices: np.ndarray) -> np.ndarray:
    idx = (indices.astype(np.uint64) + np.uint64(1)) * _DERIVE64
    return mix_array(np.uint64(key) ^ mix_array(idx))


def uniform_array(keys, counters: np.ndarray) -> np.ndarray:
    """Uniform doubles in [0, 1) for draws ``counters`` of stream(s) ``keys``.

    ``keys`` may be a scalar key or an array broadcastable against ``counters``.
    """
    keys = np.asarray(keys, dtype=np.uint64)
    z = keys + (counters.astype(np.uint64) + np.uint64(1)) * _GOLDEN64
    return (mix_array(z) >> _S11).astype(np.float64) * _INV53


class Stream:
    """Sequential view over one counter-based stream."""

    def __init__(self, key: int, counter: int = 0):
        self.key = key & MASK
        self.counter = counter

    @classmethod
    def from_seed(cls, seed: int, *path: int) -> "Stream":
        key = seed_key(seed)
        for index in path:
            key = derive(key, index)
        return cls(key)

    def uniforms(self, count: int) -> np.ndarray:
        out = uniform_array(self.key, np.arange(self.counter, self.counter + count, dtype=np.uint64))
        self.counter += count
        return out

    def random(self) -> float:
        u = uniform(self.key, self.counter)
        self.counter += 1
        return u
