"""Exact laws of branch counts and bifurcation ratios on uniform random trees.

Everything rests on one transition kernel: a uniform tree with ``n``
leaves has ``S_2 = m`` with probability ``w_n(m)``, and after pruning its
leaves it is a uniform tree with ``m`` leaves whose order-``k`` branches
are the original order-``k+1`` branches.  Laws at order ``r`` are therefore
mixtures of laws at order ``r - 1``.

Exact mode works with integer tree counts: ``N_n(S_r = j)`` satisfies

    N_n(S_r = j) = sum_m  C(n-2, 2m-2) 2^(n-2m) N_m(S_{r-1} = j)

where ``C(n-2, 2m-2) 2^(n-2m)`` is the number of ways to hang the extra
leaves on a fixed ``m``-leaf tree.  Probabilities are counts divided by
Catalan(n - 1), so no factorials are ever formed.

Float mode evaluates the same kernel from log-gamma values and propagates
distributions with dense matrix-vector products; it is meant for
asymptotic scans where exact numerators grow to thousands of digits.
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Callable, Mapping, Sequence, Union

import numpy as np
from scipy.special import gammaln

from .errors import DomainError
from .trees import catalan

Number = Union[int, Fraction]


# --------------------------------------------------------------------------
# kernel

def hang_count(n: int, m: int) -> int:
    """Ways to grow a fixed ``m``-leaf tree into an ``n``-leaf tree with ``S_2 = m``."""
    if n < 2 or m < 1 or 2 * m > n:
        return 0
    return comb(n - 2, 2 * m - 2) << (n - 2 * m)


def trees_with_s2(n: int, m: int) -> int:
    """Number of trees with ``n`` leaves and exactly ``m`` order-2 branches."""
    return hang_count(n, m) * catalan(m - 1) if m >= 1 else 0


def transition_prob(n: int, m: int) -> Fraction:
    """``P_n(S_2 = m)``; zero outside ``1 <= m <= n // 2``."""
    if n < 2:
        raise DomainError(f"transition kernel needs n >= 2, got {n}")
    return Fraction(trees_with_s2(n, m), catalan(n - 1))


@dataclass(frozen=True)
class Kernel:
    n: int
    weights: Mapping[int, Fraction]

    def __post_init__(self) -> None:
        if sum(self.weights.values()) != 1:
            raise AssertionError(f"kernel weights at n={self.n} do not sum to 1")


@lru_cache(maxsize=None)
def kernel(n: int) -> Kernel:
    if n < 2:
        raise DomainError(f"transition kernel needs n >= 2, got {n}")
    return Kernel(n, {m: transition_prob(n, m) for m in range(1, n // 2 + 1)})


# --------------------------------------------------------------------------
# exact distributions

@dataclass(frozen=True)
class ExactDist:
    """Finite law with exact rational support and probabilities."""

    atoms: Mapping[Fraction, Fraction]

    def __post_init__(self) -> None:
        if not self.atoms:
            raise ValueError("distribution has no atoms")
        if any(p <= 0 for p in self.atoms.values()):
            raise ValueError("all atom probabilities must be positive")
        if sum(self.atoms.values()) != 1:
            raise ValueError("probabilities must sum to exactly 1")

    @classmethod
    def from_counts(cls, counts: Mapping[Number, int]) -> "ExactDist":
        total = sum(counts.values())
        return cls({Fraction(v): Fraction(c, total) for v, c in sorted(counts.items()) if c})

    def support(self) -> list[Fraction]:
        return sorted(self.atoms)

    def items(self) -> list[tuple[Fraction, Fraction]]:
        return sorted(self.atoms.items())

    def __getitem__(self, value: Number) -> Fraction:
        return self.atoms.get(Fraction(value), Fraction(0))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ExactDist):
            return NotImplemented
        return dict(self.atoms) == dict(other.atoms)

    def __hash__(self) -> int:
        return hash(frozenset(self.atoms.items()))

    def mean(self) -> Fraction:
        return expect(self, 1)

    def variance(self) -> Fraction:
        mu = self.mean()
        return expect(self, lambda v: (v - mu) ** 2)

    def to_json_obj(self) -> dict:
        return {
            "support": [
                {"num": v.numerator, "den": v.denominator, "p_num": p.numerator, "p_den": p.denominator}
                for v, p in self.items()
            ]
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj())

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "ExactDist":
        return cls({Fraction(a["num"], a["den"]): Fraction(a["p_num"], a["p_den"]) for a in obj["support"]})


@lru_cache(maxsize=None)
def _count_S(r: int, n: int) -> tuple[tuple[int, int], ...]:
    """``(j, number of trees with S_r = j)`` pairs over all trees with ``n`` leaves."""
    if r == 1:
        return ((n, catalan(n - 1)),)
    if n == 1:
        return ((0, 1),)
    acc: dict[int, int] = defaultdict(int)
    for m in range(1, n // 2 + 1):
        h = hang_count(n, m)
        for j, c in _count_S(r - 1, m):
            acc[j] += h * c
    return tuple(sorted(acc.items()))


def count_S(r: int, n: int) -> dict[int, int]:
    """Histogram of ``S_r`` over all trees with ``n`` leaves, as integer counts."""
    if r < 1 or n < 1:
        raise DomainError(f"need r >= 1 and n >= 1, got r={r}, n={n}")
    return dict(_count_S(r, n))


def dist_S(r: int, n: int) -> ExactDist:
    """Exact law of the number of order-``r`` branches at magnitude ``n``."""
    return ExactDist.from_counts(count_S(r, n))


@lru_cache(maxsize=None)
def _count_ratio(q: int, r: int, n: int) -> tuple[tuple[Fraction, int], ...]:
    if n == 1:
        # a single leaf has S_2 = 0 and S_q = 0 for q > 1, so the ratio is 0
        return ((Fraction(0), 1),)
    if q == 1:
        return tuple((Fraction(j, n), c) for j, c in _count_S(1 + r, n))
    acc: dict[Fraction, int] = defaultdict(int)
    for m in range(1, n // 2 + 1):
        h = hang_count(n, m)
        for v, c in _count_ratio(q - 1, r, m):
            acc[v] += h * c
    return tuple(sorted(acc.items()))


def count_ratio(q: int, r: int, n: int) -> dict[Fraction, int]:
    """Histogram of ``S_{q+r} / S_q`` (zero when ``S_q = 0``) as tree counts."""
    if q < 1 or r < 1 or n < 1:
        raise DomainError(f"need q, r, n >= 1, got q={q}, r={r}, n={n}")
    return dict(_count_ratio(q, r, n))


def dist_ratio(q: int, r: int, n: int) -> ExactDist:
    """Exact law of ``S_{q+r,n} / S_{q,n}`` with the zero convention."""
    if n < 2:
        raise DomainError(f"ratio laws need n >= 2, got {n}")
    return ExactDist.from_counts(count_ratio(q, r, n))


# --------------------------------------------------------------------------
# expectations

Func = Union[int, Sequence[Number], Callable[[Fraction], Number]]


def expect(dist: ExactDist, f: Func) -> Fraction:
    """Exact expectation of ``f`` under ``dist``.

    ``f`` may be an integer power (negative powers need 0 outside the
    support), a sequence of polynomial coefficients in ascending degree, or
    any callable returning exact rationals.
    """
    if isinstance(f, int):
        if f < 0 and Fraction(0) in dist.atoms:
            raise DomainError("negative power of a law that charges 0")
        return sum((p * v**f for v, p in dist.atoms.items()), Fraction(0))
    if callable(f):
        return sum((p * Fraction(f(v)) for v, p in dist.atoms.items()), Fraction(0))
    coeffs = [Fraction(c) for c in f]

    def poly(v: Fraction) -> Fraction:
        acc = Fraction(0)
        for c in reversed(coeffs):
            acc = acc * v + c
        return acc

    return sum((p * poly(v) for v, p in dist.atoms.items()), Fraction(0))


def central_moment(dist: ExactDist, k: int, center: Number) -> Fraction:
    c = Fraction(center)
    return sum((p * (v - c) ** k for v, p in dist.atoms.items()), Fraction(0))


# --------------------------------------------------------------------------
# float backend

def kernel_row(n: int) -> np.ndarray:
    """``P_n(S_2 = m)`` for ``m = 0 .. n // 2`` in float64.

    By convention row 0 and row 1 are point masses at 0 (a single leaf has
    no order-2 branch), which lets repeated products carry the zero atom.
    """
    if n < 2:
        row = np.zeros(1)
        row[0] = 1.0
        return row
    m = np.arange(1, n // 2 + 1, dtype=np.float64)
    logw = (
        gammaln(n + 1.0) + gammaln(float(n)) + gammaln(n - 1.0) + (n - 2 * m) * math.log(2.0)
        - gammaln(2.0 * n - 1) - gammaln(n - 2 * m + 1) - gammaln(m + 1) - gammaln(m)
    )
    row = np.zeros(n // 2 + 1)
    row[1:] = np.exp(logw)
    return row / math.fsum(row)


_KMAT = np.ones((1, 1))


def kernel_matrix(top: int) -> np.ndarray:
    """Read-only view ``K[n, m] = P_n(S_2 = m)`` for ``n <= top``.

    Backed by one cached matrix that grows by doubling.
    """
    global _KMAT
    if _KMAT.shape[0] <= top:
        size = max(top, 2 * (_KMAT.shape[0] - 1), 16)
        mat = np.zeros((size + 1, size // 2 + 1))
        for n in range(size + 1):
            row = kernel_row(n)
            mat[n, : len(row)] = row
        mat.setflags(write=False)
        _KMAT = mat
    return _KMAT[: top + 1, : top // 2 + 1]


def _push(laws: np.ndarray, steps: int) -> np.ndarray:
    # each row is a law over magnitudes; one step maps magnitude -> S_2
    for _ in range(steps):
        laws = laws @ kernel_matrix(laws.shape[-1] - 1)
    return laws


def dist_S_float(r: int, n: int) -> np.ndarray:
    """Float law of ``S_{r,n}`` as an array indexed by the count ``j``."""
    if r < 1 or n < 1:
        raise DomainError(f"need r >= 1 and n >= 1, got r={r}, n={n}")
    if r == 1:
        vec = np.zeros(n + 1)
        vec[n] = 1.0
        return vec
    return _push(kernel_row(n), r - 2)


def ratio_expect_float(q: int, r: int, n: int, f: Callable[[np.ndarray], np.ndarray]) -> float:
    """``E f(S_{q+r,n} / S_{q,n})`` in float64, zero convention included.

    ``f`` is applied elementwise to arrays of ratio values.  Conditional on
    ``S_q = m`` the ratio is distributed as ``S_{1+r,m} / m``.
    """
    if q < 1 or r < 1 or n < 2:
        raise DomainError(f"need q, r >= 1 and n >= 2, got q={q}, r={r}, n={n}")
    if q == 1:
        law = dist_S_float(1 + r, n)
        vals = np.arange(len(law), dtype=np.float64) / n
        return math.fsum((law * f(vals)).tolist())
    mix = dist_S_float(q, n)
    top = len(mix) - 1
    inner = _push(kernel_matrix(top), r - 1)
    j = np.arange(inner.shape[1], dtype=np.float64)
    m = np.arange(top + 1, dtype=np.float64)
    m[0] = np.inf  # S_q = 0 rows carry ratio 0
    g = (inner * f(j[None, :] / m[:, None])).sum(axis=1)
    return math.fsum((mix * g).tolist())


def dist_ratio_float(q: int, r: int, n: int) -> dict[Fraction, float]:
    """Float law of ``S_{q+r,n} / S_{q,n}`` keyed by the exact ratio value."""
    if q < 1 or r < 1 or n < 2:
        raise DomainError(f"need q, r >= 1 and n >= 2, got q={q}, r={r}, n={n}")
    out: dict[Fraction, float] = defaultdict(float)
    if q == 1:
        for j, p in enumerate(dist_S_float(1 + r, n)):
            if p > 0:
                out[Fraction(j, n)] += p
        return dict(sorted(out.items()))
    mix = dist_S_float(q, n)
    inner = _push(kernel_matrix(len(mix) - 1), r - 1)
    if mix[0] > 0:
        out[Fraction(0)] += mix[0]
    for m in np.nonzero(mix[1:])[0] + 1:
        for j in np.nonzero(inner[m])[0]:
            out[Fraction(int(j), int(m))] += mix[m] * inner[m, j]
    return dict(sorted(out.items()))


def moment_float(law: np.ndarray, k: int, center: float = 0.0) -> float:
    """``E (X - center)^k`` for a law indexed by the integer value of ``X``."""
    j = np.arange(len(law), dtype=np.float64)
    mask = law > 0
    return math.fsum((law[mask] * (j[mask] - center) ** k).tolist())
