"""Monte Carlo checks of the branch-count and bifurcation-ratio limit laws.

Sampling is split into ``workers`` contiguous blocks of the sample index
range.  Block ``i`` draws from its own PCG64 stream spawned from
``SeedSequence(seed)``, and per-block moment accumulators are merged in
block order, so a summary depends only on ``(seed, workers, experiment)``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Literal, Optional

import numpy as np
from scipy.special import ndtr

from .errors import DomainError
from .sampling import branch_counts, max_order

Kind = Literal["count", "ratio"]


@dataclass(frozen=True)
class CltExperiment:
    """``sqrt(n) (S_{q+r}/S_q - 4^-r)``; ``count`` fixes ``q = 1`` so the denominator is ``n``."""

    kind: Kind
    r: int
    n: int
    samples: int
    seed: int
    q: int = 1
    workers: int = 1

    def __post_init__(self) -> None:
        if self.kind not in ("count", "ratio"):
            raise DomainError(f"unknown kind {self.kind!r}")
        if self.kind == "count" and self.q != 1:
            raise DomainError("count experiments have q = 1")
        if self.r < 1 or self.q < 1:
            raise DomainError("orders must be >= 1")
        if self.n < 2 or self.samples < 1 or self.workers < 1:
            raise DomainError("need n >= 2, samples >= 1, workers >= 1")

    @property
    def center(self) -> float:
        return 4.0 ** (-self.r)

    def statistic(self, counts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Per-sample statistic and the mask of samples with ``S_q = 0``."""
        num = counts[:, self.q + self.r].astype(np.float64)
        den = counts[:, self.q].astype(np.float64)
        zero = den == 0
        ratio = np.divide(num, den, out=np.zeros_like(num), where=~zero)
        return np.sqrt(self.n) * (ratio - self.center), zero


def predicted_variance(kind: Kind, r: int, q: int = 1) -> Fraction:
    """Variance of the limiting normal law.

    ``count(r)``: ``(4^r - 1) / (3 * 16^r)``; ``ratio(q, r)``:
    ``(4^r - 1) / (3 * 4^(2r - q + 1))``.
    """
    if r < 1 or q < 1:
        raise DomainError("orders must be >= 1")
    if kind == "count":
        q = 1
    elif kind != "ratio":
        raise DomainError(f"unknown kind {kind!r}")
    return Fraction(4**r - 1, 3) / Fraction(4) ** (2 * r - q + 1)


def gap_one_variance(r: int) -> Fraction:
    """Limit variance ``4^(r-3)`` of the order-``r`` bifurcation ratio."""
    return Fraction(4) ** (r - 3)


class StreamingMoments:
    """Count, mean and central sums of powers 2..4, mergeable in one pass."""

    def __init__(self) -> None:
        self.n = 0
        self.mean = 0.0
        self.m2 = 0.0
        self.m3 = 0.0
        self.m4 = 0.0

    def push(self, x: float) -> None:
        n1 = self.n
        self.n += 1
        n = self.n
        delta = x - self.mean
        dn = delta / n
        dn2 = dn * dn
        term1 = delta * dn * n1
        self.mean += dn
        self.m4 += term1 * dn2 * (n * n - 3 * n + 3) + 6 * dn2 * self.m2 - 4 * dn * self.m3
        self.m3 += term1 * dn * (n - 2) - 3 * dn * self.m2
        self.m2 += term1

    def push_batch(self, xs: np.ndarray) -> None:
        xs = np.asarray(xs, dtype=np.float64)
        if xs.size == 0:
            return
        other = StreamingMoments()
        other.n = int(xs.size)
        other.mean = float(xs.mean())
        d = xs - other.mean
        d2 = d * d
        other.m2 = float(d2.sum())
        other.m3 = float((d2 * d).sum())
        other.m4 = float((d2 * d2).sum())
        self.merge(other)

    def merge(self, other: "StreamingMoments") -> "StreamingMoments":
        if other.n == 0:
            return self
        if self.n == 0:
            self.n, self.mean, self.m2, self.m3, self.m4 = other.n, other.mean, other.m2, other.m3, other.m4
            return self
        na, nb = self.n, other.n
        n = na + nb
        delta = other.mean - self.mean
        d2 = delta * delta
        m2 = self.m2 + other.m2 + d2 * na * nb / n
        m3 = (self.m3 + other.m3 + d2 * delta * na * nb * (na - nb) / (n * n)
              + 3.0 * delta * (na * other.m2 - nb * self.m2) / n)
        m4 = (self.m4 + other.m4
              + d2 * d2 * na * nb * (na * na - na * nb + nb * nb) / (n**3)
              + 6.0 * d2 * (na * na * other.m2 + nb * nb * self.m2) / (n * n)
              + 4.0 * delta * (na * other.m3 - nb * self.m3) / n)
        self.n, self.m2, self.m3, self.m4 = n, m2, m3, m4
        self.mean = self.mean + delta * nb / n
        return self

    @property
    def variance(self) -> float:
        return self.m2 / (self.n - 1) if self.n > 1 else 0.0

    @property
    def third(self) -> float:
        return self.m3 / self.n if self.n else 0.0

    @property
    def fourth(self) -> float:
        return self.m4 / self.n if self.n else 0.0


def ks_distance(sorted_samples: np.ndarray, mu: float, sigma2: float) -> float:
    """Sup distance between the empirical CDF and ``Normal(mu, sigma2)``."""
    x = np.asarray(sorted_samples, dtype=np.float64)
    if x.size == 0:
        raise DomainError("no samples")
    if sigma2 <= 0:
        raise DomainError("variance must be positive")
    if np.any(np.diff(x) < 0):
        raise DomainError("samples must be sorted ascending")
    cdf = ndtr((x - mu) / np.sqrt(sigma2))
    n = x.size
    upper = np.arange(1, n + 1) / n
    d_plus = np.max(upper - cdf)
    d_minus = np.max(cdf - (upper - 1.0 / n))
    return float(min(1.0, max(d_plus, d_minus, 0.0)))


@dataclass
class McSummary:
    experiment: CltExperiment
    count: int
    mean: float
    variance: float
    m3: float
    m4: float
    ks: float
    zero_freq: float
    predicted_variance: Fraction
    histogram: Optional[tuple[list[float], list[int]]] = field(default=None, compare=False)

    CSV_COLUMNS = ("kind", "q", "r", "n", "samples", "mean", "variance",
                   "predicted_variance", "m3", "m4", "ks", "zero_freq")

    def row(self) -> dict:
        e = self.experiment
        return {
            "kind": e.kind, "q": e.q, "r": e.r, "n": e.n, "samples": e.samples,
            "mean": self.mean, "variance": self.variance,
            "predicted_variance": f"{self.predicted_variance.numerator}/{self.predicted_variance.denominator}",
            "m3": self.m3, "m4": self.m4, "ks": self.ks, "zero_freq": self.zero_freq,
        }

    def to_json_obj(self) -> dict:
        out = self.row()
        out["experiment"] = asdict(self.experiment)
        out["predicted_variance"] = {"num": self.predicted_variance.numerator,
                                     "den": self.predicted_variance.denominator}
        if self.histogram is not None:
            out["histogram"] = {"edges": self.histogram[0], "counts": self.histogram[1]}
        return out


def _block_sizes(total: int, workers: int) -> list[int]:
    base, extra = divmod(total, workers)
    return [base + (1 if i < extra else 0) for i in range(workers)]


def draw_counts(n: int, samples: int, seed: int, workers: int = 1, width: Optional[int] = None) -> np.ndarray:
    """Branch-count matrix for ``samples`` uniform trees, rows in block order."""
    seqs = np.random.SeedSequence(seed).spawn(workers)
    sizes = _block_sizes(samples, workers)
    width = max(width or 0, max_order(n) + 2)

    def block(i: int) -> np.ndarray:
        rng = np.random.Generator(np.random.PCG64(seqs[i]))
        return branch_counts(n, sizes[i], rng, width)

    if workers == 1:
        parts = [block(0)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(block, range(workers)))
    return np.concatenate(parts, axis=0)


def summarize(exp: CltExperiment, counts: np.ndarray, hist_bins: Optional[int] = None) -> McSummary:
    """Statistics of an experiment computed from a branch-count matrix."""
    if counts.shape[1] <= exp.q + exp.r:
        pad = np.zeros((counts.shape[0], exp.q + exp.r + 1 - counts.shape[1]), dtype=counts.dtype)
        counts = np.concatenate([counts, pad], axis=1)
    values, zero = exp.statistic(counts)
    acc = StreamingMoments()
    for part in np.array_split(np.arange(len(values)), exp.workers):
        block = StreamingMoments()
        block.push_batch(values[part])
        acc.merge(block)
    pv = predicted_variance(exp.kind, exp.r, exp.q)
    ordered = np.sort(values)
    hist = None
    if hist_bins:
        c, edges = np.histogram(values, bins=hist_bins)
        hist = (edges.tolist(), c.tolist())
    return McSummary(
        experiment=exp, count=acc.n, mean=acc.mean, variance=acc.variance,
        m3=acc.third, m4=acc.fourth, ks=ks_distance(ordered, 0.0, float(pv)),
        zero_freq=float(zero.mean()), predicted_variance=pv, histogram=hist,
    )


def run_experiment(exp: CltExperiment, hist_bins: Optional[int] = None,
                   counts: Optional[np.ndarray] = None) -> McSummary:
    """Sample ``exp.samples`` trees and summarize the experiment's statistic.

    A precomputed ``counts`` matrix (from :func:`draw_counts` with the same
    ``n``, seed and workers) may be passed to share trees between statistics.
    """
    if counts is None:
        counts = draw_counts(exp.n, exp.samples, exp.seed, exp.workers, exp.q + exp.r + 1)
    return summarize(exp, counts, hist_bins)


@dataclass
class HortonResult:
    r: int
    n: int
    samples: int
    eps: float
    exceed_freq: float
    zero_freq: float
    mean_ratio: float


def horton_check(r: int, n: int, samples: int, seed: int, eps: float = 0.05, workers: int = 1,
                 counts: Optional[np.ndarray] = None) -> HortonResult:
    """Frequency of ``|S_{r+1}/S_r - 1/4| > eps`` over sampled trees."""
    if counts is None:
        counts = draw_counts(n, samples, seed, workers, r + 2)
    num = counts[:, r + 1].astype(np.float64)
    den = counts[:, r].astype(np.float64)
    zero = den == 0
    ratio = np.divide(num, den, out=np.zeros_like(num), where=~zero)
    return HortonResult(r=r, n=n, samples=len(ratio), eps=eps,
                        exceed_freq=float(np.mean(np.abs(ratio - 0.25) > eps)),
                        zero_freq=float(zero.mean()), mean_ratio=float(ratio.mean()))
