"""Distributions over interacting groups of agents.

Agents are indexed 0..N-1 in the Python API. Edge and custom files use
1-based indices, one subset per line.
"""

from __future__ import annotations

import bisect
import itertools
from math import comb
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ConfigError
from .rng import Stream

PAIR_COMPLETE = "pair_complete"
PAIR_EDGES = "pair_edges"
KSUBSETS = "ksubsets"
CUSTOM = "custom"


class GroupDistribution:
    """A probability distribution rho over subsets A of agents with |A| >= 2."""

    def __init__(self, kind: str, N: int, subsets: Sequence[Sequence[int]] = (),
                 weights: Sequence[float] | None = None, m: int = 2):
        if N < 2:
            raise ConfigError("need at least two agents")
        self.kind = kind
        self.N = N
        self.m = m
        if kind == PAIR_COMPLETE:
            self.m = 2
            self.subsets = None
            self.weights = None
        elif kind == KSUBSETS:
            if not 2 <= m <= N:
                raise ConfigError(f"ksubsets needs 2 <= m <= N, got m={m}, N={N}")
            self.subsets = None
            self.weights = None
        elif kind in (PAIR_EDGES, CUSTOM):
            if weights is None:
                weights = [1.0] * len(subsets)
            if len(weights) != len(subsets):
                raise ConfigError("one weight per subset required")
            merged: dict[tuple[int, ...], float] = {}
            for sub, w in zip(subsets, weights):
                key = tuple(sorted(set(int(x) for x in sub)))
                if len(key) < 2:
                    raise ConfigError(f"group {sub} has fewer than two agents")
                if key[0] < 0 or key[-1] >= N:
                    raise ConfigError(f"group {sub} has agents outside 0..{N - 1}")
                if kind == PAIR_EDGES and len(key) != 2:
                    raise ConfigError(f"edge {sub} is not a pair")
                if not w > 0:
                    raise ConfigError(f"group {sub} has nonpositive weight {w}")
                merged[key] = merged.get(key, 0.0) + float(w)
            if not merged:
                raise ConfigError("empty group list")
            total = sum(merged.values())
            self.subsets = list(merged)
            self.weights = [w / total for w in merged.values()]
            self._cum = list(itertools.accumulate(self.weights))
            self._uniform = len(set(self.weights)) == 1
        else:
            raise ConfigError(f"unknown group kind {kind!r}")

    @classmethod
    def pair_complete(cls, N: int) -> "GroupDistribution":
        return cls(PAIR_COMPLETE, N)

    @classmethod
    def pair_edges(cls, N: int, edges: Iterable[Sequence[int]]) -> "GroupDistribution":
        return cls(PAIR_EDGES, N, list(edges))

    @classmethod
    def path(cls, N: int) -> "GroupDistribution":
        return cls.pair_edges(N, [(i, i + 1) for i in range(N - 1)])

    @classmethod
    def ksubsets(cls, N: int, m: int) -> "GroupDistribution":
        return cls(KSUBSETS, N, m=m)

    @classmethod
    def custom(cls, N: int, subsets, weights) -> "GroupDistribution":
        return cls(CUSTOM, N, list(subsets), None if weights is None else list(weights))

    @property
    def max_size(self) -> int:
        if self.subsets is None:
            return self.m
        return max(len(s) for s in self.subsets)

    def support(self) -> list[tuple[tuple[int, ...], float]]:
        """All (subset, probability) pairs with positive probability."""
        if self.kind == PAIR_COMPLETE or self.kind == KSUBSETS:
            p = 1.0 / comb(self.N, self.m)
            return [(s, p) for s in itertools.combinations(range(self.N), self.m)]
        return list(zip(self.subsets, self.weights))

    def __repr__(self):
        return f"GroupDistribution({self.kind!r}, N={self.N})"


def sample_group(rho: GroupDistribution, rng: Stream) -> tuple[int, ...]:
    """Draw A ~ rho."""
    kind = rho.kind
    if kind == PAIR_COMPLETE:
        N = rho.N
        i = rng.below(N)
        j = rng.below(N - 1)
        if j >= i:
            j += 1
        return (i, j)
    if kind == KSUBSETS:
        # sparse partial Fisher-Yates over range(N)
        N = rho.N
        swapped: dict[int, int] = {}
        out = []
        for i in range(rho.m):
            j = i + rng.below(N - i)
            out.append(swapped.get(j, j))
            swapped[j] = swapped.get(i, i)
        return tuple(out)
    if rho._uniform:
        return rho.subsets[rng.below(len(rho.subsets))]
    idx = bisect.bisect_right(rho._cum, rng.random() * rho._cum[-1])
    return rho.subsets[min(idx, len(rho.subsets) - 1)]


def is_connected(rho: GroupDistribution) -> bool:
    """Whether the positive-probability groups connect all N agents."""
    if rho.kind in (PAIR_COMPLETE, KSUBSETS):
        return True
    parent = list(range(rho.N))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for sub, w in zip(rho.subsets, rho.weights):
        if w <= 0:
            continue
        root = find(sub[0])
        for x in sub[1:]:
            r = find(x)
            if r != root:
                parent[r] = root
    return len({find(x) for x in range(rho.N)}) == 1


def read_group_file(path: str | Path, weighted: bool) -> tuple[list[tuple[int, ...]], list[float]]:
    """Parse a subset file: 1-based indices per line, optional trailing weight."""
    subsets, weights = [], []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        w = 1.0
        if weighted and len(fields) >= 3 and not _is_int(fields[-1]):
            w = float(fields.pop())
        try:
            idx = [int(f) - 1 for f in fields]
        except ValueError:
            raise ConfigError(f"{path}:{lineno}: bad agent index in {raw!r}") from None
        subsets.append(tuple(idx))
        weights.append(w)
    return subsets, weights


def _is_int(s: str) -> bool:
    try:
        int(s)
    except ValueError:
        return False
    return True


def parse_groups(text: str, N: int) -> GroupDistribution:
    """Parse ``pair_complete | pair_edges:<file> | ksubsets:<m> | custom:<file>``."""
    head, _, rest = text.strip().partition(":")
    head = head.strip().lower()
    if head == PAIR_COMPLETE:
        return GroupDistribution.pair_complete(N)
    if head == KSUBSETS:
        try:
            return GroupDistribution.ksubsets(N, int(rest))
        except ValueError:
            raise ConfigError(f"bad ksubsets size {rest!r}") from None
    if head == PAIR_EDGES:
        subsets, _ = read_group_file(rest, weighted=False)
        return GroupDistribution.pair_edges(N, subsets)
    if head == CUSTOM:
        subsets, weights = read_group_file(rest, weighted=True)
        return GroupDistribution.custom(N, subsets, weights)
    raise ConfigError(f"unknown groups syntax {text!r}")
