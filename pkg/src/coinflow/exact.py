"""Exact stationary law, partition functions, transition kernels.

This is the brute-force oracle layer for small state spaces. Partition
functions are kept in log domain because G(k) grows polynomially and the
products over N sites overflow quickly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from math import comb
from typing import Callable, Sequence

import numpy as np
from scipy.special import gammaln, logsumexp

from .configspace import composition_rank, enumerate_omega, omega_count
from .dynamics import ModelKind
from .errors import BudgetError
from .groups import GroupDistribution
from .weights import WeightSpec

PARTITION_BUDGET = 10**9
KERNEL_CAP = 5000
KERNEL_MAX_GROUP = 4
ROW_CHUNK = 256


@dataclass
class PartitionTable:
    """log Z_{n,l} for 1 <= n <= N_max, 0 <= l <= L_max (row 0 is unused)."""

    spec: WeightSpec
    N_max: int
    L_max: int
    logZ: np.ndarray
    logG: np.ndarray

    def log_Z(self, n: int, l: int) -> float:
        if not (1 <= n <= self.N_max and 0 <= l <= self.L_max):
            raise IndexError(f"(n={n}, l={l}) outside table {self.N_max}x{self.L_max}")
        return float(self.logZ[n, l])


def partition_table(spec: WeightSpec, N_max: int, L_max: int,
                    budget: float = PARTITION_BUDGET) -> PartitionTable:
    """Fill log Z by the convolution recursion Z_{n,l} = sum_k G(k) Z_{n-1,l-k}."""
    if N_max < 1 or L_max < 0:
        raise ValueError("need N_max >= 1 and L_max >= 0")
    if N_max * (L_max + 1) ** 2 > budget:
        raise BudgetError(f"partition table {N_max}x{L_max} exceeds budget {budget:g}")
    with np.errstate(divide="ignore"):
        logG = np.log(spec.G_array(L_max))
    logZ = np.full((N_max + 1, L_max + 1), -np.inf)
    logZ[1] = logG
    idx = np.arange(L_max + 1)
    for n in range(2, N_max + 1):
        prev = logZ[n - 1]
        for lo in range(0, L_max + 1, ROW_CHUNK):
            rows = idx[lo:lo + ROW_CHUNK]
            # terms[l, j] = log G(l - j) + log Z_{n-1, j} for j <= l
            diff = rows[:, None] - idx[None, : rows[-1] + 1]
            terms = np.where(diff >= 0, logG[np.clip(diff, 0, None)], -np.inf) + prev[: rows[-1] + 1]
            logZ[n, lo:lo + len(rows)] = logsumexp(terms, axis=1)
    return PartitionTable(spec, N_max, L_max, logZ, logG)


def stationary_prob(table: PartitionTable, xi: Sequence[int]) -> float:
    """mu_{N,L}(xi) = prod_x G(xi(x)) / Z_{N,L}."""
    N, L = len(xi), sum(xi)
    log_w = sum(table.logG[k] for k in xi)
    return math.exp(log_w - table.log_Z(N, L))


def marginal(table: PartitionTable, N: int, L: int, k: int) -> float:
    """mu_{N,L}(xi(x) = k) = Z_{N-1,L-k} G(k) / Z_{N,L}."""
    if N < 2 or not 0 <= k <= L:
        raise IndexError(f"marginal needs N >= 2 and 0 <= k <= L (got N={N}, L={L}, k={k})")
    return math.exp(table.log_Z(N - 1, L - k) + table.logG[k] - table.log_Z(N, L))


def marginal_pmf(table: PartitionTable, N: int, L: int) -> np.ndarray:
    """The full one-site marginal over k = 0..L."""
    if N < 2:
        raise IndexError("marginal needs N >= 2")
    k = np.arange(L + 1)
    return np.exp(table.logZ[N - 1, L - k] + table.logG[k] - table.log_Z(N, L))


def lr_marginal_constant_g(N: int, L: int, c: int) -> float:
    """Closed-form one-site marginal for constant g.

    (c+1) C(L-c+2N-3, 2N-3) / C(L+2N-1, 2N-1), evaluated with log-Gamma.
    """
    if N < 2 or not 0 <= c <= L:
        raise ValueError("need N >= 2 and 0 <= c <= L")

    def log_binom(n, k):
        return gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)

    return float(np.exp(np.log(c + 1) + log_binom(L - c + 2 * N - 3, 2 * N - 3)
                        - log_binom(L + 2 * N - 1, 2 * N - 1)))


# -- transition kernels ---------------------------------------------------


@dataclass
class Kernel:
    states: list[tuple[int, ...]]
    P: np.ndarray

    def index(self, xi: Sequence[int]) -> int:
        return composition_rank(xi)


def _coin_laws(spec: WeightSpec, holdings: Sequence[int]):
    """Per-site lists of (k, g(k)/G(h)) with positive probability."""
    laws = []
    for h in holdings:
        g = spec.g_array(h)
        Gh = spec.G(h)
        laws.append([(k, g[k] / Gh) for k in range(h + 1) if g[k] > 0])
    return laws


def _compositions_of(parts: int, total: int):
    return list(enumerate_omega(parts, total))


def kernel_row(model: ModelKind, spec: WeightSpec | None, rho: GroupDistribution,
               xi: Sequence[int]) -> dict[tuple[int, ...], float]:
    """Exact one-step law from xi as a {next_state: probability} mapping."""
    row: dict[tuple[int, ...], float] = {}
    comp_cache: dict[tuple[int, int], list] = {}

    def comps(parts, total):
        key = (parts, total)
        if key not in comp_cache:
            comp_cache[key] = _compositions_of(parts, total)
        return comp_cache[key]

    def add(A, values, p):
        nxt = list(xi)
        for x, v in zip(A, values):
            nxt[x] = v
        key = tuple(nxt)
        row[key] = row.get(key, 0.0) + p

    for A, pA in rho.support():
        if len(A) > KERNEL_MAX_GROUP:
            raise BudgetError(f"kernel building supports |A| <= {KERNEL_MAX_GROUP}")
        m = len(A)
        local = [xi[x] for x in A]
        if model is ModelKind.RESHUFFLE:
            targets = comps(m, sum(local))
            for d in targets:
                add(A, d, pA / len(targets))
            continue
        laws = _coin_laws(spec, local)
        for choice in itertools.product(*laws):
            t = [k for k, _ in choice]
            pt = pA * math.prod(p for _, p in choice)
            if model is ModelKind.IMMEDIATE:
                perms = list(itertools.permutations(range(m)))
                for sigma in perms:
                    new = [local[i] - t[i] for i in range(m)]
                    for i in range(m):
                        new[sigma[i]] += t[i]
                    add(A, new, pt / len(perms))
            elif model is ModelKind.SAVING:
                targets = comps(m, sum(local) - sum(t))
                for d in targets:
                    add(A, [t[i] + d[i] for i in range(m)], pt / len(targets))
            else:
                targets = comps(m, sum(t))
                for d in targets:
                    add(A, [local[i] - t[i] + d[i] for i in range(m)], pt / len(targets))
    return row


def build_kernel(model: ModelKind, spec: WeightSpec | None, rho: GroupDistribution,
                 N: int, L: int, cap: int = KERNEL_CAP) -> Kernel:
    """Dense transition matrix over enumerate_omega(N, L)."""
    if rho.N != N:
        raise ValueError(f"group distribution is over {rho.N} agents, not {N}")
    n_states = omega_count(N, L)
    if n_states > cap:
        raise BudgetError(f"|Omega_{N}({L})| = {n_states} exceeds kernel cap {cap}")
    states = list(enumerate_omega(N, L))
    P = np.zeros((n_states, n_states))
    for i, xi in enumerate(states):
        for eta, p in kernel_row(model, spec, rho, xi).items():
            P[i, composition_rank(eta)] += p
    return Kernel(states, P)


def stationary_vector_product(spec: WeightSpec, states: Sequence[Sequence[int]]) -> np.ndarray:
    """prod_x G(xi(x)) over the states, normalized."""
    L = max((sum(s) for s in states), default=0)
    logG = np.log(spec.G_array(L))
    logw = np.array([logG[list(s)].sum() for s in states])
    return np.exp(logw - logsumexp(logw))


def stationary_probs(model: ModelKind, spec: WeightSpec | None, states) -> np.ndarray:
    """The predicted stationary law over ``states`` for a model kind."""
    if model is ModelKind.RESHUFFLE:
        return np.full(len(states), 1.0 / len(states))
    return stationary_vector_product(spec, states)


def check_detailed_balance(kernel: Kernel | np.ndarray, probs: np.ndarray) -> float:
    """max over pairs of |mu(xi) P(xi, eta) - mu(eta) P(eta, xi)|."""
    P = kernel.P if isinstance(kernel, Kernel) else kernel
    flow = probs[:, None] * P
    return float(np.abs(flow - flow.T).max())


def stationarity_residual(kernel: Kernel | np.ndarray, probs: np.ndarray) -> float:
    """|| mu^T P - mu^T ||_inf."""
    P = kernel.P if isinstance(kernel, Kernel) else kernel
    return float(np.abs(probs @ P - probs).max())


def row_sum_error(kernel: Kernel | np.ndarray) -> float:
    P = kernel.P if isinstance(kernel, Kernel) else kernel
    return float(np.abs(P.sum(axis=1) - 1.0).max())


def stationary_vector(kernel: Kernel | np.ndarray) -> np.ndarray:
    """Left Perron vector of P, solved as a linear system."""
    P = kernel.P if isinstance(kernel, Kernel) else kernel
    n = P.shape[0]
    M = P.T - np.eye(n)
    M[-1, :] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    return np.linalg.solve(M, rhs)


# -- symmetry functionals -------------------------------------------------


def _weight_fn(g) -> Callable[[int], float]:
    if isinstance(g, WeightSpec):
        if g.is_integer_valued:
            return lambda k: int(g.g(k))
        return g.g
    if callable(g):
        return g
    table = list(g)
    return lambda k: table[k] if k < len(table) else 0


def symmetry_pair(a: Sequence[int], b: Sequence[int], g) -> float | int:
    """S(a, b) = sum over t of g(t1) g(t2) with t1 - t2 = a1 - b1, t2 - t1 = a2 - b2.

    ``g`` may be a WeightSpec, a callable or a finite table (zero beyond its
    end). Integer tables give exact integer results.
    """
    if len(a) != 2 or len(b) != 2:
        raise ValueError("symmetry_pair takes pairs")
    if a[0] + a[1] != b[0] + b[1]:
        raise ValueError("a and b must have the same sum")
    gf = _weight_fn(g)
    total = 0
    for t1 in range(a[0] + 1):
        t2 = t1 - a[0] + b[0]
        if 0 <= t2 <= a[1]:
            total += gf(t1) * gf(t2)
    return total


def _cycle_sum(a, b, gf, direction: int):
    # t_{i+1} = t_i - (a_i - b_i) for S+, t_{i-1} = t_i - (a_i - b_i) for S-
    n = len(a)
    total = 0
    for t0 in range(a[0] + 1):
        t = [0] * n
        t[0] = t0
        ok = True
        i = 0
        for _ in range(n - 1):
            j = (i + direction) % n
            t[j] = t[i] - (a[i] - b[i])
            if not 0 <= t[j] <= a[j]:
                ok = False
                break
            i = j
        # the closing constraint holds automatically since sum(a) == sum(b)
        if ok:
            total += math.prod(gf(v) for v in t)
    return total


def s_plus(a, b, g):
    """Cyclic sum with constraints t_i - t_{i+1} = a_i - b_i."""
    _check_cycle(a, b)
    return _cycle_sum(a, b, _weight_fn(g), +1)


def s_minus(a, b, g):
    """Cyclic sum with constraints t_i - t_{i-1} = a_i - b_i."""
    _check_cycle(a, b)
    return _cycle_sum(a, b, _weight_fn(g), -1)


def symmetry_cycle(a: Sequence[int], b: Sequence[int], g) -> float | int:
    """S+(a, b) + S-(a, b) for n >= 3."""
    return s_plus(a, b, g) + s_minus(a, b, g)


def _check_cycle(a, b):
    if len(a) != len(b) or len(a) < 3:
        raise ValueError("cycle sums need two vectors of equal length n >= 3")
    if sum(a) != sum(b):
        raise ValueError("a and b must have the same sum")


def brute_force_cycle(a, b, g, direction: int):
    """Literal product-space enumeration of S+ (direction=+1) or S- (-1)."""
    gf = _weight_fn(g)
    n = len(a)
    total = 0
    for t in itertools.product(*(range(x + 1) for x in a)):
        if all(t[i] - t[(i + direction) % n] == a[i] - b[i] for i in range(n)):
            total += math.prod(gf(v) for v in t)
    return total


def delta0_partition(N: int, L: int) -> int:
    """Z_{N,L} for g = delta_0 (G == 1): the number of configurations."""
    return comb(L + N - 1, N - 1)
