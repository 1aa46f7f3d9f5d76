"""Seeded random stream used by every sampler in the package.

The generator is numpy's PCG64. Uniform doubles are drawn in fixed-size
blocks and consumed from a Python list, which keeps the per-draw cost of the
scalar-heavy simulation loop low. Results are reproducible for a given seed
on a given build; they are not meant to match any other implementation.
"""

from __future__ import annotations

import numpy as np

BLOCK = 1 << 15


class Stream:
    """Buffered uniform stream over a PCG64 generator."""

    __slots__ = ("seed", "_gen", "_buf", "_pos")

    def __init__(self, seed: int | None = None):
        self.seed = seed
        self._gen = np.random.Generator(np.random.PCG64(seed))
        self._buf: list[float] = []
        self._pos = 0

    def spawn(self, n: int) -> list["Stream"]:
        """Independent child streams (PCG64 jumped ahead, not reseeded)."""
        children = []
        for i in range(n):
            child = Stream.__new__(Stream)
            child.seed = self.seed
            child._gen = np.random.Generator(self._gen.bit_generator.jumped(i + 1))
            child._buf = []
            child._pos = 0
            children.append(child)
        return children

    def random(self) -> float:
        """Uniform double on [0, 1)."""
        pos = self._pos
        if pos == len(self._buf):
            self._buf = self._gen.random(BLOCK).tolist()
            pos = 0
        self._pos = pos + 1
        return self._buf[pos]

    def below(self, n: int) -> int:
        """Uniform integer on {0, ..., n-1}.

        Uses floor(u * n); the bias is of order n / 2**53.
        """
        k = int(self.random() * n)
        return k if k < n else n - 1

    def permutation(self, m: int) -> list[int]:
        """Uniform permutation of range(m) (Fisher-Yates)."""
        perm = list(range(m))
        for i in range(m - 1, 0, -1):
            j = self.below(i + 1)
            perm[i], perm[j] = perm[j], perm[i]
        return perm

    def sorted_sample(self, n: int, k: int) -> list[int]:
        """Uniform k-subset of range(n), sorted ascending (Floyd's algorithm)."""
        chosen: set[int] = set()
        for j in range(n - k, n):
            t = self.below(j + 1)
            chosen.add(j if t in chosen else t)
        return sorted(chosen)


def as_stream(rng: Stream | int | None) -> Stream:
    if isinstance(rng, Stream):
        return rng
    return Stream(rng)
