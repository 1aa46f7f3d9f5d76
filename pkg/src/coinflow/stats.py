"""Empirical wealth statistics and fit distances against limit laws."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .configspace import Configuration
from .limits import LimitLaw

_SNAP = 1e-9


@dataclass
class WealthHistogram:
    """Counts of scaled wealth xi(x)/a_N in bins [j w, (j+1) w), j = 0, 1, ..."""

    bin_width: float
    counts: np.ndarray
    N: int
    a_N: float
    total: int

    @property
    def edges(self) -> np.ndarray:
        return np.arange(len(self.counts) + 1) * self.bin_width

    @property
    def mean(self) -> float:
        return self.total / (self.N * self.a_N)

    def density(self) -> np.ndarray:
        return self.counts / (self.N * self.bin_width)


def _counts_of(config) -> np.ndarray:
    if isinstance(config, Configuration):
        return config.as_array()
    return np.asarray(config, dtype=np.int64)


def histogram(config, a_N: float = 1.0, bin_width: float = 1.0) -> WealthHistogram:
    """Bin the scaled field xi(x)/a_N."""
    if not (a_N > 0 and bin_width > 0):
        raise ValueError("a_N and bin_width must be positive")
    xi = _counts_of(config)
    q = xi / (a_N * bin_width)
    # values landing within rounding of a bin edge belong to the upper bin
    nearest = np.rint(q)
    q = np.where(np.abs(q - nearest) < _SNAP, nearest, q)
    idx = np.floor(q).astype(np.int64)
    counts = np.bincount(idx, minlength=1) if idx.size else np.zeros(1, dtype=np.int64)
    return WealthHistogram(bin_width, counts, int(xi.size), a_N, int(xi.sum()))


def ks_distance(data, law: LimitLaw, a_N: float = 1.0) -> float:
    """Kolmogorov distance between empirical wealth and a limit law.

    For a :class:`WealthHistogram` the supremum runs over bin edges, with the
    empirical CDF at an edge equal to the fraction of agents strictly below
    it. For a raw sample (coin counts, scaled by ``a_N``) the exact two-sided
    supremum over the real line is returned.
    """
    if isinstance(data, WealthHistogram):
        edges = data.edges
        emp = np.concatenate([[0.0], np.cumsum(data.counts)]) / data.N
        return float(np.abs(emp - law.cdf(edges)).max())
    x = np.sort(_counts_of(data) / a_N)
    n = x.size
    F = law.cdf(x)
    # empirical CDF just after and just before each sample point
    upper = np.searchsorted(x, x, side="right") / n
    lower = np.searchsorted(x, x, side="left") / n
    return float(max(np.abs(upper - F).max(), np.abs(F - lower).max()))


def tv_distance(p: Sequence[float], q: Sequence[float]) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"support length mismatch: {p.shape} vs {q.shape}")
    return 0.5 * float(np.abs(p - q).sum())


def moments(config, a_N: float = 1.0, orders: int = 4) -> list[float]:
    """Scaled empirical moments m_r = mean((xi/a_N)**r), r = 1..orders.

    Power sums are accumulated in exact integer arithmetic.
    """
    xi = [int(v) for v in (config.counts if isinstance(config, Configuration) else config)]
    N = len(xi)
    out = []
    for r in range(1, orders + 1):
        out.append(sum(v**r for v in xi) / (N * a_N**r))
    return out


def histogram_csv(hist: WealthHistogram, law: LimitLaw | None, header: Sequence[str] = ()) -> str:
    """CSV text: bin_left,bin_right,count,density,limit_density.

    ``limit_density`` is the limit law's mean density over the bin.
    """
    buf = io.StringIO()
    for line in header:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["bin_left", "bin_right", "count", "density", "limit_density"])
    edges = hist.edges
    dens = hist.density()
    if law is not None:
        limit = np.diff(law.cdf(edges)) / hist.bin_width
    for j, count in enumerate(hist.counts):
        ld = f"{limit[j]:.10g}" if law is not None else ""
        writer.writerow([f"{edges[j]:.10g}", f"{edges[j + 1]:.10g}", int(count),
                         f"{dens[j]:.10g}", ld])
    return buf.getvalue()


def gamma_moment_ratio(shape: float) -> float:
    """m2 / m1**2 for a Gamma law: (shape + 1) / shape."""
    return (shape + 1) / shape


def empirical_pmf(samples: Sequence[int], L: int) -> np.ndarray:
    counts = np.bincount(np.asarray(samples, dtype=np.int64), minlength=L + 1)[: L + 1]
    return counts / max(1, len(samples))

