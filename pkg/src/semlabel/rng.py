"""Deterministic cross-language PRNG for dataset splitting.

Dataset splits must reproduce bit-for-bit in any implementation, so instead
of a library RNG they use a fully specified generator: xoshiro256** 1.0 with
its state filled by the splitmix64 stream, exactly as the reference C
recommends.  Test vectors live in docs/formats.md and are asserted by the
test suite.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1


def splitmix64_next(state: int) -> tuple[int, int]:
    """One splitmix64 step; returns (output, new_state)."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return (z ^ (z >> 31)) & _MASK, state


def fnv1a64(data: bytes) -> int:
    """FNV-1a 64-bit hash; used to derive a per-scene seed from the scene id."""
    h = 0xCBF29CE484222325
    for byte in data:
        h ^= byte
        h = (h * 0x100000001B3) & _MASK
    return h


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK


class Xoshiro256StarStar:
    """xoshiro256** 1.0 seeded from splitmix64(seed)."""

    def __init__(self, seed: int):
        state = seed & _MASK
        self.s = []
        for _ in range(4):
            out, state = splitmix64_next(state)
            self.s.append(out)

    def next_uint64(self) -> int:
        s = self.s
        result = (_rotl((s[1] * 5) & _MASK, 7) * 9) & _MASK
        t = (s[1] << 17) & _MASK
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle: j = next_uint64() % (i + 1)."""
        for i in range(len(items) - 1, 0, -1):
            j = self.next_uint64() % (i + 1)
            items[i], items[j] = items[j], items[i]


def scene_rng(seed: int, scene_id: str) -> Xoshiro256StarStar:
    """Per-scene generator: seed XOR fnv1a64(utf8(scene_id))."""
    return Xoshiro256StarStar((seed ^ fnv1a64(scene_id.encode("utf-8"))) & _MASK)
