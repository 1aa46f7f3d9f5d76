"""One-step transitions and multi-step runs of the coin exchange chains.

Every step draws a group A from rho and rearranges the coins of A only, so
the total number of coins is conserved. Steps mutate ``state.config.counts``
in place and return the same state object.
"""

from __future__ import annotations

import bisect
import enum
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .configspace import Configuration, sample_uniform_composition
from .groups import PAIR_COMPLETE, GroupDistribution, is_connected, sample_group
from .rng import Stream, as_stream
from .weights import WeightSpec


class ModelKind(enum.Enum):
    IMMEDIATE = "immediate"
    SAVING = "saving"
    SAVING_OFFER = "saving_offer"
    RESHUFFLE = "reshuffle"

    @classmethod
    def parse(cls, text: str) -> "ModelKind":
        aliases = {"immediate_exchange": "immediate", "random_saving": "saving",
                   "offer": "saving_offer", "uniform_reshuffling": "reshuffle"}
        key = text.strip().lower().replace("-", "_")
        return cls(aliases.get(key, key))


@dataclass
class ChainState:
    config: Configuration
    rng: Stream
    step_count: int = 0

    @classmethod
    def start(cls, config: Configuration, seed: int | Stream | None) -> "ChainState":
        return cls(config, as_stream(seed))


def is_ergodic(model: ModelKind, spec: WeightSpec, rho: GroupDistribution) -> bool:
    """Sufficient conditions for irreducibility and aperiodicity."""
    if not is_connected(rho):
        return False
    if model is ModelKind.IMMEDIATE:
        return spec.g(0) > 0 and spec.g(1) > 0
    return True


def sample_coin_count(spec: WeightSpec, holdings: int, rng: Stream) -> int:
    """Draw k in {0..holdings} with probability g(k) / G(holdings)."""
    G = spec.G_list(holdings)
    k = bisect.bisect_right(G, rng.random() * G[holdings], 0, holdings + 1)
    return k if k <= holdings else holdings


def step_immediate(state: ChainState, rho: GroupDistribution, spec: WeightSpec,
                   lazy: bool = True) -> ChainState:
    """Each agent of A passes a g-weighted number of its coins to sigma(agent).

    sigma is uniform over all permutations of A, the identity included. With
    ``lazy=False`` the identity is excluded (for pairs: always swap); this
    changes the holding probability but not the stationary law.
    """
    rng = state.rng
    counts = state.config.counts
    A = sample_group(rho, rng)
    G = spec.G_list(max(counts[x] for x in A))
    c = []
    for x in A:
        h = counts[x]
        k = bisect.bisect_right(G, rng.random() * G[h], 0, h + 1)
        c.append(k if k <= h else h)
    m = len(A)
    if m == 2:
        if lazy and rng.random() < 0.5:
            state.step_count += 1
            return state
        x, y = A
        d = c[1] - c[0]
        counts[x] += d
        counts[y] -= d
    else:
        perm = rng.permutation(m)
        if not lazy:
            while perm == sorted(perm):
                perm = rng.permutation(m)
        for i in range(m):
            counts[A[i]] -= c[i]
        for i in range(m):
            counts[A[perm[i]]] += c[i]
    state.step_count += 1
    return state


def step_saving(state: ChainState, rho: GroupDistribution, spec: WeightSpec,
                offer_variant: bool = False) -> ChainState:
    """Save (or offer) g-weighted coins, pool the rest, redistribute uniformly.

    Saving: new count c + d with d uniform on compositions of the unsaved pool.
    Offer variant: c is the offered amount; new count xi - c + d with d uniform
    on compositions of the offered pool.
    """
    rng = state.rng
    counts = state.config.counts
    A = sample_group(rho, rng)
    G = spec.G_list(max(counts[x] for x in A))
    kept = []
    pool = 0
    for x in A:
        h = counts[x]
        k = bisect.bisect_right(G, rng.random() * G[h], 0, h + 1)
        if k > h:
            k = h
        if offer_variant:
            kept.append(h - k)
            pool += k
        else:
            kept.append(k)
            pool += h - k
    if len(A) == 2:
        d = rng.below(pool + 1)
        counts[A[0]] = kept[0] + d
        counts[A[1]] = kept[1] + pool - d
    else:
        d = sample_uniform_composition(len(A), pool, rng)
        for x, keep, extra in zip(A, kept, d):
            counts[x] = keep + extra
    state.step_count += 1
    return state


def step_reshuffle(state: ChainState, rho: GroupDistribution) -> ChainState:
    """Pool all coins of A and redistribute them uniformly over compositions."""
    rng = state.rng
    counts = state.config.counts
    A = sample_group(rho, rng)
    pool = sum(counts[x] for x in A)
    if len(A) == 2:
        d = rng.below(pool + 1)
        counts[A[0]] = d
        counts[A[1]] = pool - d
    else:
        for x, v in zip(A, sample_uniform_composition(len(A), pool, rng)):
            counts[x] = v
    state.step_count += 1
    return state


def step(model: ModelKind, state: ChainState, rho: GroupDistribution,
         spec: WeightSpec | None, lazy: bool = True) -> ChainState:
    if model is ModelKind.IMMEDIATE:
        return step_immediate(state, rho, spec, lazy=lazy)
    if model is ModelKind.SAVING:
        return step_saving(state, rho, spec)
    if model is ModelKind.SAVING_OFFER:
        return step_saving(state, rho, spec, offer_variant=True)
    return step_reshuffle(state, rho)


Observer = Callable[[ChainState], object]


@dataclass
class RunResult:
    state: ChainState
    records: list[tuple[int, list]] = field(default_factory=list)


def run(model: ModelKind, state: ChainState, rho: GroupDistribution,
        spec: WeightSpec | None, n_steps: int, observers: Sequence[Observer] = (),
        every: int | None = None, lazy: bool = True) -> RunResult:
    """Apply n_steps transitions, calling observers every ``every`` steps.

    Observers are called once before the first step and after every
    ``every``-th step (default n_steps // 100); their return values are
    collected in ``RunResult.records`` as ``(step_count, [outputs])``.
    """
    if not is_connected(rho):
        warnings.warn("group hypergraph is disconnected; the chain is not ergodic",
                      RuntimeWarning, stacklevel=2)
    if every is None:
        every = max(1, n_steps // 100)
    result = RunResult(state)

    def observe():
        if observers:
            result.records.append((state.step_count, [obs(state) for obs in observers]))

    observe()
    if model is ModelKind.IMMEDIATE and rho.kind == PAIR_COMPLETE:
        advance = _pair_immediate_loop(state, rho.N, spec, lazy)
    else:
        def advance(n):
            for _ in range(n):
                step(model, state, rho, spec, lazy=lazy)

    done = 0
    while done < n_steps:
        chunk = min(every, n_steps - done)
        advance(chunk)
        done += chunk
        observe()
    return result


def _pair_immediate_loop(state: ChainState, N: int, spec: WeightSpec, lazy: bool):
    """Inlined pair-complete immediate exchange; same draws as step_immediate."""
    counts = state.config.counts
    rng = state.rng
    G = spec.G_list(state.config.total)
    rand = rng.random
    bisect_right = bisect.bisect_right

    def advance(n):
        for _ in range(n):
            x = int(rand() * N)
            if x >= N:
                x = N - 1
            y = int(rand() * (N - 1))
            if y >= N - 1:
                y = N - 2
            if y >= x:
                y += 1
            hx = counts[x]
            kx = bisect_right(G, rand() * G[hx], 0, hx + 1)
            if kx > hx:
                kx = hx
            hy = counts[y]
            ky = bisect_right(G, rand() * G[hy], 0, hy + 1)
            if ky > hy:
                ky = hy
            if lazy and rand() < 0.5:
                continue
            counts[x] = hx - kx + ky
            counts[y] = hy - ky + kx
        state.step_count += n

    return advance
