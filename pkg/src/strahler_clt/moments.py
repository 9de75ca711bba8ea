"""Exact moments of S_2 and ratio checks against asymptotic moment formulas.

Raw moments of ``S_{2,n}`` come from the bottom-up recursion

    E[S_n^{k+1}] = (n/2) E[S_n^k] - n(n-2)/(2(2n-3)) E[S_{n-1}^k]

seeded with ``E[S^0] = 1`` and ``E[S_1^k] = 0`` for ``k >= 1`` (a single
leaf has no order-2 branch).  Negative and mixed moments are read off the
exact law instead, which also gives an independent route for the raw ones.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, prod
from typing import Literal, Optional, Sequence

import numpy as np

from . import exact
from .errors import DomainError

Backend = Literal["exact", "float", "auto"]

EXACT_MAX_N = 256


def double_factorial(k: int) -> int:
    """``k!!`` with ``(-1)!! = 0!! = 1``."""
    return prod(range(k, 0, -2)) if k > 0 else 1


class MomentTable:
    """Memoized exact moments of ``S_{2,n}`` keyed by ``(kind, k, n)``.

    ``kind`` is ``"raw"``, ``"central"``, ``"negative"`` or ``("mixed", l)``.
    """

    def __init__(self) -> None:
        self.entries: dict[tuple, Fraction] = {}

    def raw(self, k: int, n: int) -> Fraction:
        if k < 0 or n < 1:
            raise DomainError(f"need k >= 0 and n >= 1, got k={k}, n={n}")
        key = ("raw", k, n)
        if key in self.entries:
            return self.entries[key]
        if k == 0:
            return Fraction(1)
        if n == 1:
            return Fraction(0)
        # fill row by row; row kk needs rows kk - 1 at nn and nn - 1
        for kk in range(1, k + 1):
            for nn in range(2, n + 1):
                if ("raw", kk, nn) in self.entries:
                    continue
                coef = Fraction(nn * (nn - 2), 2 * (2 * nn - 3))
                self.entries[("raw", kk, nn)] = (
                    Fraction(nn, 2) * self._seeded(kk - 1, nn) - coef * self._seeded(kk - 1, nn - 1)
                )
        return self.entries[key]

    def _seeded(self, k: int, n: int) -> Fraction:
        if k == 0:
            return Fraction(1)
        if n == 1:
            return Fraction(0)
        return self.entries[("raw", k, n)]

    def central(self, k: int, n: int) -> Fraction:
        key = ("central", k, n)
        if key not in self.entries:
            c = Fraction(n, 4)
            self.entries[key] = sum(
                (comb(k, i) * self.raw(i, n) * (-c) ** (k - i) for i in range(k + 1)), Fraction(0)
            )
        return self.entries[key]

    def negative(self, k: int, n: int) -> Fraction:
        if n < 2:
            raise DomainError(f"negative moments need n >= 2, got {n}")
        key = ("negative", k, n)
        if key not in self.entries:
            self.entries[key] = exact.expect(exact.dist_S(2, n), -k)
        return self.entries[key]

    def mixed(self, l: int, k: int, n: int) -> Fraction:
        if n < 2:
            raise DomainError(f"mixed moments need n >= 2, got {n}")
        key = (("mixed", l), k, n)
        if key not in self.entries:
            c = Fraction(n, 4)
            self.entries[key] = exact.expect(exact.dist_S(2, n), lambda v: v**l * (v - c) ** k)
        return self.entries[key]


_TABLE = MomentTable()


def raw_moment_s2(k: int, n: int) -> Fraction:
    """``E[S_{2,n}^k]`` from the bottom-up recursion."""
    if n < 2:
        raise DomainError(f"need n >= 2, got {n}")
    return _TABLE.raw(k, n)


def central_moment_s2(k: int, n: int) -> Fraction:
    """``E[(S_{2,n} - n/4)^k]`` expanded over raw moments."""
    if n < 2:
        raise DomainError(f"need n >= 2, got {n}")
    return _TABLE.central(k, n)


def negative_moment_s2(k: int, n: int) -> Fraction:
    """``E[S_{2,n}^{-k}]``; finite because ``S_{2,n} >= 1`` when ``n >= 2``."""
    return _TABLE.negative(k, n)


def mixed_moment_s2(l: int, k: int, n: int) -> Fraction:
    """``E[S_{2,n}^l (S_{2,n} - n/4)^k]``."""
    return _TABLE.mixed(l, k, n)


def check_prop2_recurrence(k: int, n: int) -> Fraction:
    """Residual of the exact recurrence linking negative moments of orders k and k+1.

    ``E[S_n^{-(k+1)}] = E[S_n^{-k}] - (n-2)/2 E[S_n^{-(k+1)}]
    + n(n-2)/(2(2n-3)) E[S_{n-1}^{-(k+1)}]``; zero when it holds.
    """
    if n < 3:
        raise DomainError(f"need n >= 3, got {n}")
    lhs = negative_moment_s2(k + 1, n)
    rhs = (
        negative_moment_s2(k, n)
        - Fraction(n - 2, 2) * negative_moment_s2(k + 1, n)
        + Fraction(n * (n - 2), 2 * (2 * n - 3)) * negative_moment_s2(k + 1, n - 1)
    )
    return lhs - rhs


# --------------------------------------------------------------------------
# asymptotic forms

def _third(r: int) -> Fraction:
    # (4^r - 1) / 3, an integer for r >= 0
    return Fraction(4**r - 1, 3)


def lemma2_odd_constant(r: int, s: int, inner_order: Optional[int] = None) -> Fraction:
    """Coefficient of ``n^s`` in the odd central moment of ``S_{r+1,n}``.

    ``inner_order`` picks the exponent in the ``(4^x - 1)/3`` term of the
    bracket; the stated form uses ``r - 1``.
    """
    x = r - 1 if inner_order is None else inner_order
    bracket = Fraction(1, 5) * (_third(r + 1) + _third(x) * 4 * (2 * s + 1))
    return Fraction(double_factorial(2 * s + 1), 2 * 4 ** ((2 * s + 1) * r)) * _third(r) ** s * bracket


@dataclass(frozen=True)
class Target:
    """One asymptotic moment statement.

    ``name`` is one of lemma1, lemma2, lemma3, lemma4, lemma5, prop2.
    ``variant`` only matters for odd powers in lemma5: ``"statement"`` is
    the closed form with ``n^{-s}`` scaling, ``"derived"`` carries the odd
    constant of lemma2 through the magnitude mixture (``n^{-s-1}``).
    """

    name: str
    k: int
    l: int = 0
    q: int = 1
    r: int = 1
    variant: str = "statement"

    def describe(self) -> str:
        if self.name == "lemma3":
            return f"E[(S_2 - n/4)^{self.k}]"
        if self.name == "prop2":
            return f"E[S_2^-{self.k}]"
        if self.name == "lemma4":
            return f"E[S_2^{self.l} (S_2 - n/4)^{self.k}]"
        if self.name == "lemma1":
            return f"E[(S_{self.r + 1}/S_{self.r} - 1/4)^{self.k}]"
        if self.name == "lemma2":
            return f"E[(S_{self.r + 1} - n/4^{self.r})^{self.k}]"
        if self.name == "lemma5":
            return f"E[(S_{self.q + self.r}/S_{self.q} - 1/4^{self.r})^{self.k}] ({self.variant})"
        raise DomainError(f"unknown target {self.name}")

    def label(self) -> str:
        args = {"lemma3": f"k={self.k}", "prop2": f"k={self.k}", "lemma4": f"l={self.l},k={self.k}",
                "lemma1": f"r={self.r},k={self.k}", "lemma2": f"r={self.r},k={self.k}",
                "lemma5": f"q={self.q},r={self.r},k={self.k}"}[self.name]
        return f"{self.name}({args})"

    def predicted(self, n: int) -> Fraction:
        k, s = self.k, self.k // 2
        even = k % 2 == 0
        n = Fraction(n)
        if self.name == "lemma3":
            if even:
                return Fraction(double_factorial(2 * s - 1), 4 ** (2 * s)) * n**s
            return Fraction(double_factorial(2 * s + 1), 2 * 4 ** (2 * s + 1)) * n**s
        if self.name == "prop2":
            return (n / 4) ** (-k)
        if self.name == "lemma4":
            base = (n / 4) ** self.l
            if even:
                return base * Fraction(double_factorial(2 * s - 1), 4 ** (2 * s)) * n**s
            return base * Fraction(double_factorial(2 * s + 1), 2 * 4 ** (2 * s + 1)) * (2 * self.l + 1) * n**s
        if self.name == "lemma1":
            eff = n / 4 ** (self.r - 1)
            if even:
                return Fraction(double_factorial(2 * s - 1), 4 ** (2 * s)) * eff ** (-s)
            return Fraction(double_factorial(2 * s + 1), 2 * 4 ** (2 * s + 1)) * eff ** (-s - 1)
        if self.name == "lemma2":
            r = self.r
            if even:
                return Fraction(double_factorial(2 * s - 1), 4 ** (2 * s * r)) * _third(r) ** s * n**s
            return lemma2_odd_constant(r, s) * n**s
        if self.name == "lemma5":
            q, r = self.q, self.r
            if even:
                return (
                    Fraction(4 ** (s * (q - 1)) * double_factorial(2 * s - 1), 4 ** (2 * s * r))
                    * _third(r) ** s * n ** (-s)
                )
            if self.variant == "derived":
                return lemma2_odd_constant(r, s) * Fraction(4) ** ((s + 1) * (q - 1)) * n ** (-s - 1)
            bracket = Fraction(1, 5) * (_third(r + 1) + _third(r - 1) * 4 * (2 * s + 1))
            return (
                Fraction(4 ** (s * (q - 1)) * double_factorial(2 * s + 1), 4 ** ((2 * s + 1) * r))
                * _third(r) ** s * bracket * n ** (-s)
            )
        raise DomainError(f"unknown target {self.name}")

    def exact_value(self, n: int) -> Fraction:
        if self.name == "lemma3":
            return central_moment_s2(self.k, n)
        if self.name == "prop2":
            return negative_moment_s2(self.k, n)
        if self.name == "lemma4":
            return mixed_moment_s2(self.l, self.k, n)
        if self.name == "lemma2":
            return exact.central_moment(exact.dist_S(self.r + 1, n), self.k, Fraction(n, 4**self.r))
        q, r, center = self._ratio_params()
        return exact.central_moment(exact.dist_ratio(q, r, n), self.k, center)

    def float_value(self, n: int) -> float:
        k = self.k
        if self.name in ("lemma3", "prop2", "lemma4"):
            law = exact.dist_S_float(2, n)
            j = np.arange(len(law), dtype=np.float64)
            mask = law > 0
            if self.name == "lemma3":
                terms = law[mask] * (j[mask] - n / 4) ** k
            elif self.name == "prop2":
                terms = law[mask] * j[mask] ** (-float(k))
            else:
                terms = law[mask] * j[mask] ** self.l * (j[mask] - n / 4) ** k
            return math.fsum(terms.tolist())
        if self.name == "lemma2":
            law = exact.dist_S_float(self.r + 1, n)
            j = np.arange(len(law), dtype=np.float64)
            return math.fsum((law * (j - n / 4**self.r) ** k).tolist())
        q, r, center = self._ratio_params()
        c = float(center)
        return exact.ratio_expect_float(q, r, n, lambda x: (x - c) ** k)

    def _ratio_params(self) -> tuple[int, int, Fraction]:
        if self.name == "lemma1":
            return self.r, 1, Fraction(1, 4)
        if self.name == "lemma5":
            return self.q, self.r, Fraction(1, 4**self.r)
        raise DomainError(f"{self.name} is not a ratio target")


_TARGET_RE = re.compile(r"^\s*(\w+)\s*\((.*)\)\s*$")


def parse_target(text: str) -> Target:
    """Parse ``"lemma4(l=1,k=2)"``-style target descriptions."""
    m = _TARGET_RE.match(text)
    if not m:
        raise DomainError(f"cannot parse target {text!r}")
    kwargs: dict = {}
    for part in filter(None, (p.strip() for p in m.group(2).split(","))):
        key, _, val = part.partition("=")
        key = key.strip()
        kwargs[key] = val.strip() if key == "variant" else int(val)
    return Target(m.group(1), **kwargs)


@dataclass
class AsymptoticCheck:
    target: Target
    n_grid: list[int]
    backend: list[str]
    values: list[float]
    predicted: list[float]
    ratios: list[float] = field(default_factory=list)

    @property
    def target_description(self) -> str:
        return self.target.describe()

    @property
    def final_ratio(self) -> float:
        return self.ratios[-1]

    def in_band(self, lo: float, hi: float) -> bool:
        return lo <= self.final_ratio <= hi

    def monotone_tail(self, points: int = 3, slack: float = 1e-3) -> bool:
        """Distance to 1 is non-increasing over the last ``points`` grid points."""
        dist = [abs(x - 1.0) for x in self.ratios[-points:]]
        return all(b <= a + slack for a, b in zip(dist, dist[1:]))


def asymptotic_check(target: Target, n_grid: Sequence[int], backend: Backend = "auto",
                     exact_max_n: int = EXACT_MAX_N) -> AsymptoticCheck:
    """Ratio of the exact moment to its asymptotic form along ``n_grid``."""
    grid = list(n_grid)
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise DomainError("n_grid must be strictly increasing")
    out = AsymptoticCheck(target, grid, [], [], [])
    for n in grid:
        pred = target.predicted(n)
        if pred == 0:
            raise DomainError(f"predicted form of {target.label()} vanishes at n={n}")
        use_exact = backend == "exact" or (backend == "auto" and n <= exact_max_n)
        if use_exact:
            val = target.exact_value(n)
            ratio = float(val / pred)
            out.backend.append("exact")
            out.values.append(float(val))
        else:
            val_f = target.float_value(n)
            ratio = val_f / float(pred)
            out.backend.append("float")
            out.values.append(val_f)
        out.predicted.append(float(pred))
        out.ratios.append(ratio)
    return out


def odd_constant_report(r: int, s: int, n: int) -> dict:
    """Fitted odd-moment constant of ``S_{r+1,n}`` beside the two bracket readings.

    The fitted value is ``E[(S_{r+1,n} - n/4^r)^{2s+1}] / n^s`` (float
    backend); the candidates use ``(4^{r-1}-1)/3`` and ``(4^{r-2}-1)/3`` in
    the bracket.
    """
    t = Target("lemma2", 2 * s + 1, r=r)
    fitted = t.float_value(n) / n**s
    cand_a = float(lemma2_odd_constant(r, s, r - 1))
    cand_b = float(lemma2_odd_constant(r, s, r - 2)) if r >= 2 else cand_a
    return {
        "r": r, "s": s, "n": n, "fitted": fitted,
        "candidate_r_minus_1": cand_a, "candidate_r_minus_2": cand_b,
        "ratio_r_minus_1": fitted / cand_a, "ratio_r_minus_2": fitted / cand_b,
    }


def power_grid(lo: int = 64, hi: int = 4096) -> list[int]:
    out = []
    n = lo
    while n <= hi:
        out.append(n)
        n *= 2
    return out
