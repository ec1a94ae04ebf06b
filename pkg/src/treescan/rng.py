"""Cross-platform deterministic random streams (SplitMix64).

Benchmarks and the CLI derive every pseudo-random input from this generator
so that identical seeds reproduce identical maps, parameters, and checksums
on any platform. The k-th raw output is mix(seed + k * GAMMA) with the usual
SplitMix64 finalizer, which makes the stream trivially vectorizable.
"""

from __future__ import annotations

import numpy as np

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_MASK = 0xFFFFFFFFFFFFFFFF


def splitmix64(seed: int, count: int) -> np.ndarray:
    """Return the first `count` raw 64-bit outputs for `seed` as uint64."""
    steps = np.arange(1, count + 1, dtype=np.uint64)
    z = np.uint64(seed & _MASK) + steps * _GAMMA
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def uniform01(seed: int, count: int) -> np.ndarray:
    """Uniform doubles in [0, 1): the top 53 bits of each raw output."""
    return (splitmix64(seed, count) >> np.uint64(11)).astype(np.float64) * 2.0**-53


def uniform_signed(seed: int, count: int) -> np.ndarray:
    """Uniform doubles in [-1, 1)."""
    return 2.0 * uniform01(seed, count) - 1.0


def random_grid(seed: int, height: int, width: int, channels: int) -> np.ndarray:
    """Seeded (H, W, C) float64 grid with values in [0, 1)."""
    n = height * width * channels
    return uniform01(seed, n).reshape(height, width, channels)
