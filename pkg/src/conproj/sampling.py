"""Deterministic 64-bit sampling (splitmix-style).

The generator is pure integer arithmetic masked to 64 bits, so a given
seed yields the same sample points on every platform.  Streams are split
per point index: drawing for point ``i`` never disturbs the draws for
point ``j``, which keeps reports reproducible under data-parallel
evaluation.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_STREAM_SALT = 0xD1B54A32D192ED03


def _mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class SplitMix64:
    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & MASK64
        return _mix64(self._state)

    def next_float(self) -> float:
        """Uniform double in [0, 1) built from the top 53 bits."""
        return (self.next_u64() >> 11) * 2.0**-53

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.next_float()


def point_stream(seed: int, index: int) -> SplitMix64:
    """Independent deterministic stream for sample point ``index``."""
    return SplitMix64(_mix64((seed + (index + 1) * _STREAM_SALT) & MASK64))


def draw_point(stream: SplitMix64, box_min, box_max) -> tuple[float, ...]:
    return tuple(stream.uniform(lo, hi) for lo, hi in zip(box_min, box_max))
