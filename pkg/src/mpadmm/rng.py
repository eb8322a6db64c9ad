"""Portable deterministic random number generation.

Generator: xoshiro256++ (Blackman & Vigna), seeded by expanding the user
seed through splitmix64.  Uniform variates use the top 53 bits of each
64-bit output; normal variates use the Box-Muller transform.  Any
implementation of these well-known algorithms reproduces the streams
bit-for-bit, independent of language or thread count.
"""

from __future__ import annotations

import math

import numpy as np

_MASK = (1 << 64) - 1


def _rotl(x: int, r: int) -> int:
    return ((x << r) | (x >> (64 - r))) & _MASK


class Xoshiro256pp:
    """xoshiro256++ with splitmix64 state expansion."""

    def __init__(self, seed: int):
        s = seed & _MASK
        state = []
        for _ in range(4):
            # splitmix64 step
            s = (s + 0x9E3779B97F4A7C15) & _MASK
            z = s
            z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
            z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
            state.append(z ^ (z >> 31))
        self._s = state
        self._spare_normal = None

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (_rotl((s0 + s3) & _MASK, 23) + s0) & _MASK
        t = (s1 << 17) & _MASK
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def uniform(self) -> float:
        """Uniform on [0, 1) with 53-bit resolution."""
        return (self.next_u64() >> 11) * (2.0 ** -53)

    def normal(self) -> float:
        """Standard normal via Box-Muller; one spare cached per pair."""
        if self._spare_normal is not None:
            z = self._spare_normal
            self._spare_normal = None
            return z
        u1 = self.uniform()
        while u1 == 0.0:  # log(0) guard
            u1 = self.uniform()
        u2 = self.uniform()
        r = math.sqrt(-2.0 * math.log(u1))
        self._spare_normal = r * math.sin(2.0 * math.pi * u2)
        return r * math.cos(2.0 * math.pi * u2)

    def below(self, bound: int) -> int:
        """Uniform integer in [0, bound) via unbiased rejection sampling."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        threshold = ((1 << 64) - bound) % bound
        while True:
            x = self.next_u64()
            if x >= threshold:
                return x % bound

    def uniform_matrix(self, rows: int, cols: int) -> np.ndarray:
        out = np.empty(rows * cols)
        for i in range(rows * cols):
            out[i] = self.uniform()
        return out.reshape(rows, cols)

    def normal_matrix(self, rows: int, cols: int, sigma: float = 1.0) -> np.ndarray:
        out = np.empty(rows * cols)
        for i in range(rows * cols):
            out[i] = self.normal()
        return sigma * out.reshape(rows, cols)

    def sample_without_replacement(self, population: int, count: int) -> list[int]:
        """First `count` entries of a partial Fisher-Yates shuffle of range(population)."""
        if count > population:
            raise ValueError("cannot sample more than the population")
        # sparse representation: only displaced slots are stored
        swapped: dict[int, int] = {}
        picks = []
        for i in range(count):
            j = i + self.below(population - i)
            vi = swapped.get(i, i)
            vj = swapped.get(j, j)
            picks.append(vj)
            swapped[j] = vi
        return picks
