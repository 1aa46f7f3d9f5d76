"""Tilted exponential family, limit laws and local-limit checks.

The tilted law nu_s(k) = s**k G(k) / Q_0(s) is the canonical-ensemble
counterpart of the product-form stationary law: conditioning the i.i.d.
product of nu_s on the total recovers mu_{N,L} for every s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal, stats
from scipy.special import expit, logsumexp

from .configspace import enumerate_omega
from .errors import BudgetError
from .exact import marginal_pmf, partition_table
from .weights import WeightSpec

SERIES_CHUNK = 1 << 14
SERIES_MAX_TERMS = 1 << 26
CONV_BUDGET = 5 * 10**7


def _series_terms(spec: WeightSpec, s: float, start: int, stop: int, n: int) -> np.ndarray:
    k = np.arange(start, stop, dtype=float)
    G = spec.G_array(stop - 1)[start:stop]
    with np.errstate(divide="ignore", invalid="ignore"):
        logt = k * math.log(s) + np.log(G)
        if n:
            logt = logt + n * np.log(k)
    out = np.exp(logt)
    if n and start == 0:
        out[0] = 0.0
    return out


def q_moments(spec: WeightSpec, s: float, n_max: int = 2, rel_tol: float = 1e-12) -> np.ndarray:
    """Q_0(s), ..., Q_{n_max}(s) summed until the tail is negligible.

    Stops once the geometric tail bound on the highest-order series falls
    below rel_tol times its partial sum, using the largest term ratio seen in
    the last chunk as the ratio bound (terms are eventually log-concave for
    regular weights). The fallback requires 50 consecutive negligible terms.
    """
    if not 0 <= s < 1:
        raise ValueError(f"series needs 0 <= s < 1, got {s}")
    if s == 0:
        out = np.zeros(n_max + 1)
        out[0] = spec.G(0)
        return out
    sums = np.zeros(n_max + 1)
    start = 0
    chunk = max(SERIES_CHUNK, int(8 / (1 - s)))
    while start < SERIES_MAX_TERMS:
        stop = start + chunk
        top = None
        for n in range(n_max + 1):
            terms = _series_terms(spec, s, start, stop, n)
            sums[n] += math.fsum(terms)
            top = terms
        last = top[-1]
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = top[-64:][1:] / top[-64:][:-1]
        rho = float(np.nanmax(ratios)) if np.isfinite(ratios).any() else 0.0
        tail_small = np.all(top[-50:] < rel_tol * sums[n_max])
        if rho < 1 and last * rho / (1 - rho) < rel_tol * sums[n_max] and tail_small:
            return sums
        start = stop
    raise RuntimeError(f"series did not converge within {SERIES_MAX_TERMS} terms (s={s})")


def q_series(spec: WeightSpec, s: float, n: int = 0, rel_tol: float = 1e-12) -> float:
    """Q_n(s) = sum_k k**n s**k G(k)."""
    return float(q_moments(spec, s, n, rel_tol)[n])


def tilted_mean(spec: WeightSpec, s: float) -> float:
    q = q_moments(spec, s, 1)
    return q[1] / q[0]


def _asymptote_constant(spec: WeightSpec) -> float:
    alpha = spec.regularity.alpha
    return alpha + 2 if alpha > -1 else 1.0


def solve_s_star(spec: WeightSpec, K: float, tol: float = 1e-11, max_iter: int = 400) -> float:
    """The unique s in (0, 1) with E^{nu_s}[k] = K, by bisection.

    Bisection runs on v = logit(s), which keeps full resolution of 1 - s when
    s is close to 1. The initial bracket comes from the asymptote
    s* ~ 1 - c/K and is widened until it brackets K.
    """
    if not K > 0:
        raise ValueError("K must be positive")
    c = _asymptote_constant(spec)
    v0 = math.log(K / c - 1) if K > 2 * c else 0.0

    def mean_at(v):
        return tilted_mean(spec, float(expit(v)))

    lo, hi = v0 - 1.0, v0 + 1.0
    step = 1.0
    while mean_at(lo) > K:
        step *= 2
        lo -= step
        if lo < -700:
            raise RuntimeError(f"cannot bracket s* for K={K}")
    step = 1.0
    while mean_at(hi) < K:
        step *= 2
        hi += step
        if hi > 700:
            raise RuntimeError(f"cannot bracket s* for K={K}")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        m = mean_at(mid)
        if abs(m - K) <= tol * K:
            return float(expit(mid))
        if m < K:
            lo = mid
        else:
            hi = mid
        if mid in (lo, hi) and hi - lo <= 4 * np.spacing(abs(mid) + 1):
            break
    mid = 0.5 * (lo + hi)
    if abs(mean_at(mid) - K) <= max(tol, 1e-9) * K:
        return float(expit(mid))
    raise RuntimeError(f"s* bisection did not converge for K={K}")


def tilted_variance(spec: WeightSpec, s_star: float, K: float | None = None) -> float:
    """Var of nu_{s*}: Q_2/Q_0 - mean**2, using the realised mean.

    ``K`` is accepted for interface symmetry; the realised mean at s_star
    matches it to the solver tolerance.
    """
    q = q_moments(spec, s_star, 2)
    mean = q[1] / q[0]
    return q[2] / q[0] - mean * mean


@dataclass
class TiltedLaw:
    """nu_s restricted to 0..truncation_K with the full-series normaliser."""

    spec: WeightSpec
    s: float
    Q0: float = field(init=False)
    truncation_K: int = field(init=False)
    pmf: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.Q0 = q_series(self.spec, self.s, 0)
        K = 0
        total = 0.0
        block = max(256, int(4 / (1 - self.s)))
        parts = []
        while True:
            terms = _series_terms(self.spec, self.s, K, K + block, 0) / self.Q0
            parts.append(terms)
            total += math.fsum(terms)
            K += block
            if total >= 1 - 1e-13 or terms[-1] == 0:
                break
        self.pmf = np.concatenate(parts)
        self.truncation_K = len(self.pmf) - 1

    def pmf_upto(self, L_max: int) -> np.ndarray:
        if L_max <= self.truncation_K:
            return self.pmf[: L_max + 1].copy()
        return _series_terms(self.spec, self.s, 0, L_max + 1, 0) / self.Q0

    @property
    def mean(self) -> float:
        return float(np.dot(np.arange(len(self.pmf)), self.pmf))


@dataclass(frozen=True)
class LimitLaw:
    """Gamma(shape, rate) wealth law with mean T; shape 1 is the exponential."""

    shape: float
    T: float

    @classmethod
    def for_weight(cls, spec: WeightSpec, T: float) -> "LimitLaw":
        alpha = spec.regularity.alpha
        return cls(alpha + 2 if alpha > -1 else 1.0, T)

    @property
    def kind(self) -> str:
        return "exponential" if self.shape == 1.0 else "gamma"

    @property
    def rate(self) -> float:
        return self.shape / self.T

    @property
    def mean(self) -> float:
        return self.shape / self.rate

    @property
    def dist(self):
        return stats.gamma(self.shape, scale=1.0 / self.rate)

    def pdf(self, r):
        return self.dist.pdf(r)

    def cdf(self, r):
        return self.dist.cdf(r)


def limit_density(law: LimitLaw, r: float) -> float:
    if r < 0:
        raise ValueError("density is supported on r >= 0")
    return float(law.pdf(r))


def _tilted_pmf(spec: WeightSpec, s: float, L_max: int) -> np.ndarray:
    log_terms = np.arange(L_max + 1) * math.log(s) + np.log(spec.G_array(L_max))
    return np.exp(log_terms - math.log(q_series(spec, s, 0)))


@dataclass
class ConvolutionPmf:
    pmf: np.ndarray
    lost_mass: float


def _convolve(a: np.ndarray, b: np.ndarray, L_max: int) -> np.ndarray:
    out = signal.convolve(a, b, method="auto")[: L_max + 1]
    return np.clip(out, 0.0, None)


def conv_power_pmf(spec: WeightSpec, s: float, N: int, L_max: int,
                   budget: float = CONV_BUDGET) -> ConvolutionPmf:
    """Law of X_1 + ... + X_N (i.i.d. nu_s) on 0..L_max, by repeated squaring.

    Entries up to L_max are exact: truncating each factor at L_max does not
    affect them. The mass beyond L_max is reported as ``lost_mass``.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if N * (L_max + 1) > budget:
        raise BudgetError(f"convolution N={N}, L_max={L_max} exceeds budget {budget:g}")
    base = _tilted_pmf(spec, s, L_max)
    result = None
    power = base
    n = N
    while n:
        if n & 1:
            result = power if result is None else _convolve(result, power, L_max)
        n >>= 1
        if n:
            power = _convolve(power, power, L_max)
    return ConvolutionPmf(result, max(0.0, 1.0 - math.fsum(result)))


@dataclass
class LLTReport:
    N: int
    b_N: float
    s_star: float
    variance: float
    error: float
    lost_mass: float


def llt_error(spec: WeightSpec, N: int, b_N: float, z_max: float = 14.0) -> LLTReport:
    """sup_L | sqrt(N var) P(sum = L) - phi((L - N b_N) / sqrt(N var)) |."""
    s = solve_s_star(spec, b_N)
    var = tilted_variance(spec, s, b_N)
    sd = math.sqrt(N * var)
    L_max = int(math.ceil(N * b_N + z_max * sd + 10 * b_N))
    conv = conv_power_pmf(spec, s, N, L_max)
    L = np.arange(L_max + 1)
    gauss = np.exp(-((L - N * b_N) ** 2) / (2 * N * var)) / math.sqrt(2 * math.pi)
    err = float(np.abs(sd * conv.pmf - gauss).max())
    return LLTReport(N, b_N, s, var, err, conv.lost_mass)


def conditioned_product_law(spec: WeightSpec, s: float, N: int, L: int) -> np.ndarray:
    """nu_s^{(x)N}( . | sum = L) over enumerate_omega(N, L), by enumeration."""
    states = list(enumerate_omega(N, L))
    logp = np.log(_tilted_pmf(spec, s, L))
    logw = np.array([logp[list(xi)].sum() for xi in states])
    return np.exp(logw - logsumexp(logw))


def binned_limit_masses(law: LimitLaw, a_N: float, n_bins: int) -> np.ndarray:
    """Limit-law mass of cells [j/a_N, (j+1)/a_N), j < n_bins."""
    edges = np.arange(n_bins + 1) / a_N
    return np.diff(law.cdf(edges))


@dataclass
class EnsembleReport:
    N: int
    a_N: float
    T: float
    L: int
    tv: float


def ensemble_marginal_vs_limit(spec: WeightSpec, N: int, a_N: float, T: float,
                               law: LimitLaw | None = None) -> EnsembleReport:
    """TV distance between the exact scaled one-site marginal and the limit law.

    Cells have width 1/a_N, so each coin count k is its own cell; the limit
    mass beyond the last cell counts fully toward the distance.
    """
    L = int(round(N * a_N * T))
    law = law or LimitLaw.for_weight(spec, T)
    table = partition_table(spec, N, L)
    p = marginal_pmf(table, N, L)
    q = binned_limit_masses(law, a_N, L + 1)
    tail = max(0.0, 1.0 - float(law.cdf((L + 1) / a_N)))
    tv = 0.5 * (float(np.abs(p - q).sum()) + tail)
    return EnsembleReport(N, a_N, T, L, tv)
