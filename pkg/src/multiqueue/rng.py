"""Small-state deterministic pseudo-random generator.

SplitMix64: a single 64-bit word of state advanced by a fixed odd increment,
with outputs run through a finalizing mixer. Chosen over the stdlib Mersenne
Twister because the whole state is one word, per-thread streams are cheap to
derive, and the sequence is bit-for-bit reproducible across languages.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    """Finalizing mixer, bijective on 64-bit words."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def stream_seed(seed: int, stream: int) -> int:
    """Derive a decorrelated seed for a numbered stream from a master seed."""
    return mix64((seed & MASK64) ^ mix64(((stream + 1) * _GAMMA) & MASK64))


class SplitMix64:
    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n) via multiply-shift reduction.

        The reduction bias is O(n / 2^64), immaterial for queue picking.
        """
        return (self.next_u64() * n) >> 64
