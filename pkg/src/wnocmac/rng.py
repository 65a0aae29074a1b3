"""Seeded random streams.

Every consumer of randomness gets its own stream keyed by ``(purpose, index)``
under the run's master seed. Streams come from ``numpy.random.SeedSequence``
spawn keys, so they are stable across platforms and independent of the order
in which they are requested.

The MAC layer draws from :class:`SplitMix64`, a tiny counter-based generator
that the compiled kernel reimplements bit-for-bit.
"""
from __future__ import annotations

import zlib

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def _label_key(label: tuple) -> tuple[int, ...]:
    purpose, *rest = label
    key = [zlib.crc32(str(purpose).encode())]
    for part in rest:
        if not isinstance(part, (int, np.integer)) or part < 0:
            raise ValueError(f"stream label parts after the purpose must be non-negative ints: {label!r}")
        key.append(int(part))
    return tuple(key)


def derive_stream(seed: int, label: tuple) -> np.random.Generator:
    """Independent Philox-backed generator for ``label`` under ``seed``."""
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=_label_key(label))
    return np.random.Generator(np.random.Philox(seq))


def derive_seed64(seed: int, label: tuple) -> int:
    """64-bit seed for ``label`` under ``seed``, for SplitMix64 streams."""
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=_label_key(label))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


class StreamRegistry:
    """Hands out streams for one run and refuses to issue a label twice."""

    def __init__(self, seed: int) -> None:
        self.seed = seed
        self._issued: set[tuple] = set()

    def _claim(self, label: tuple) -> None:
        if label in self._issued:
            raise ValueError(f"duplicate stream label {label!r}")
        self._issued.add(label)

    def stream(self, label: tuple) -> np.random.Generator:
        self._claim(label)
        return derive_stream(self.seed, label)

    def seed64(self, label: tuple) -> int:
        self._claim(label)
        return derive_seed64(self.seed, label)


class SplitMix64:
    """SplitMix64: output k is a fixed mix of ``seed + k * gamma``."""

    __slots__ = ("state",)

    def __init__(self, seed: int) -> None:
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        """Integer in ``[0, n)`` by multiply-shift on the high 32 bits."""
        return ((self.next_u64() >> 32) * n) >> 32
