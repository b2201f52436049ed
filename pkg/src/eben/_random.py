"""Portable seeded Gaussian noise: SplitMix64 counter stream + Box-Muller.

Word ``i`` of stream ``seed`` is ``mix(seed + (i + 1) * 0x9E3779B97F4A7C15)``
with the SplitMix64 finalizer, all arithmetic modulo 2**64. Words come in
pairs ``(w0, w1)``; ``u1 = ((w0 >> 11) + 1) / 2**53`` lies in (0, 1],
``u2 = (w1 >> 11) / 2**53`` in [0, 1), and the pair yields
``sqrt(-2 ln u1) * cos(2 pi u2)`` and ``sqrt(-2 ln u1) * sin(2 pi u2)``.
Any implementation following these lines reproduces the same samples.
"""
import numpy as np

GAMMA = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
MASK64 = (1 << 64) - 1


def splitmix64(seed, count):
    """First ``count`` outputs of the SplitMix64 stream for ``seed``."""
    if not 0 <= int(seed) <= MASK64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    counter = np.arange(1, count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(seed) + counter * GAMMA
        z = (z ^ (z >> np.uint64(30))) * MIX1
        z = (z ^ (z >> np.uint64(27))) * MIX2
    return z ^ (z >> np.uint64(31))


def standard_normal(seed, count):
    """``count`` standard Gaussian samples from the documented stream."""
    pairs = (count + 1) // 2
    words = splitmix64(seed, 2 * pairs).reshape(pairs, 2) >> np.uint64(11)
    u1 = (words[:, 0].astype(np.float64) + 1.0) * 2.0 ** -53
    u2 = words[:, 1].astype(np.float64) * 2.0 ** -53
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * np.pi * u2
    out = np.empty((pairs, 2))
    out[:, 0] = radius * np.cos(angle)
    out[:, 1] = radius * np.sin(angle)
    return out.reshape(-1)[:count]
