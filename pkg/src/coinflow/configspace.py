"""Coin configurations: compositions of L coins over N agents."""

from __future__ import annotations

from math import comb
from typing import Iterator, Sequence

import numpy as np

from .errors import BudgetError
from .rng import Stream

ENUMERATION_CAP = 10**7


class Configuration:
    """Coin counts per agent with the conserved total cached.

    ``counts`` is a plain list of ints; the dynamics mutate it in place.
    """

    __slots__ = ("counts", "total")

    def __init__(self, counts: Sequence[int], total: int | None = None):
        self.counts = [int(c) for c in counts]
        if any(c < 0 for c in self.counts):
            raise ValueError("coin counts must be nonnegative")
        s = sum(self.counts)
        if total is not None and total != s:
            raise ValueError(f"counts sum to {s}, expected total {total}")
        self.total = s

    @classmethod
    def near_constant(cls, N: int, L: int) -> "Configuration":
        """floor(L/N) coins each, the L mod N remainder one each to the first agents."""
        q, r = divmod(L, N)
        return cls([q + 1] * r + [q] * (N - r), L)

    @property
    def N(self) -> int:
        return len(self.counts)

    def copy(self) -> "Configuration":
        return Configuration(self.counts, self.total)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=np.int64)

    def is_consistent(self) -> bool:
        return sum(self.counts) == self.total and min(self.counts, default=0) >= 0

    def __eq__(self, other):
        if isinstance(other, Configuration):
            return self.counts == other.counts
        return NotImplemented

    def __repr__(self):
        return f"Configuration({self.counts})"


def omega_count(N: int, L: int) -> int:
    """|Omega_N(L)| = C(L + N - 1, N - 1)."""
    if N < 1:
        raise ValueError("N must be >= 1")
    return comb(L + N - 1, N - 1)


def enumerate_omega(N: int, L: int, cap: int = ENUMERATION_CAP) -> Iterator[tuple[int, ...]]:
    """Yield every composition of L into N parts, lexicographically ascending."""
    if omega_count(N, L) > cap:
        raise BudgetError(f"|Omega_{N}({L})| = {omega_count(N, L)} exceeds cap {cap}")
    return _compositions(N, L)


def _compositions(N: int, L: int) -> Iterator[tuple[int, ...]]:
    if N == 1:
        yield (L,)
        return
    for first in range(L + 1):
        for rest in _compositions(N - 1, L - first):
            yield (first,) + rest


def composition_rank(counts: Sequence[int]) -> int:
    """Position of ``counts`` in the lexicographic order of enumerate_omega."""
    remaining = sum(counts)
    parts = len(counts)
    rank = 0
    for i, c in enumerate(counts[:-1]):
        tail_parts = parts - i - 1
        # compositions whose i-th entry is smaller than c (hockey-stick sum)
        rank += comb(remaining + tail_parts, tail_parts) - comb(remaining - c + tail_parts, tail_parts)
        remaining -= c
    return rank


def sample_uniform_composition(parts: int, total: int, rng: Stream) -> list[int]:
    """Uniform element of Omega(A, total) with |A| = parts (divider method)."""
    if parts < 1:
        raise ValueError("parts must be >= 1")
    if parts == 1:
        return [total]
    if parts == 2:
        d = rng.below(total + 1)
        return [d, total - d]
    slots = total + parts - 1
    out = []
    prev = -1
    for p in rng.sorted_sample(slots, parts - 1):
        out.append(p - prev - 1)
        prev = p
    out.append(slots - 1 - prev)
    return out
