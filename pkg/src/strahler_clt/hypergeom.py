"""Terminating Gauss hypergeometric series and the S_2 generating function.

Only the polynomial case is supported: one upper parameter must be a
non-positive integer.  In exact mode ``e^t`` is treated as an
indeterminate ``x``; the identities checked here are polynomial in it.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Union

from .errors import DomainError
from .exact import transition_prob

Scalar = Union[int, Fraction, float]


def _nonpositive_int(v: Scalar) -> bool:
    return v <= 0 and Fraction(v).denominator == 1


@dataclass(frozen=True)
class HypParams:
    a: Fraction
    b: Fraction
    c: Fraction
    z: Scalar

    def __post_init__(self) -> None:
        if _nonpositive_int(self.c):
            raise DomainError(f"lower parameter {self.c} is a non-positive integer")
        if not (_nonpositive_int(self.a) or _nonpositive_int(self.b)):
            raise DomainError(f"series with a={self.a}, b={self.b} does not terminate")

    @property
    def degree(self) -> int:
        """Index of the last non-vanishing term."""
        return min(-int(v) for v in (self.a, self.b) if _nonpositive_int(v))


def coefficients(params: HypParams) -> list[Fraction]:
    """Exact coefficients ``(a)_j (b)_j / ((c)_j j!)`` for ``j = 0 .. degree``."""
    a, b, c = Fraction(params.a), Fraction(params.b), Fraction(params.c)
    out = [Fraction(1)]
    for j in range(params.degree):
        out.append(out[-1] * (a + j) * (b + j) / ((c + j) * (j + 1)))
    return out


def _horner(coeffs: list, z: Scalar) -> Scalar:
    acc: Scalar = 0
    for c in reversed(coeffs):
        acc = acc * z + c
    return acc


def hyp2f1_terminating(params: HypParams) -> Scalar:
    """Finite sum of the 2F1 series; exact when ``z`` is rational."""
    coeffs = coefficients(params)
    if isinstance(params.z, float):
        return _horner([float(c) for c in coeffs], params.z)
    return _horner(coeffs, Fraction(params.z))


def mgf_params(n: int, x: Scalar, shift: int = 0) -> HypParams:
    """Parameters ``((2-n)/2 + shift/2, (3-n)/2 + shift/2; 2; x)`` of the S_2 generating function."""
    return HypParams(Fraction(2 - n + shift, 2), Fraction(3 - n + shift, 2), Fraction(2), x)


def mgf_prefactor(n: int) -> Fraction:
    return Fraction(2 ** (n - 2) * factorial(n) * factorial(n - 1), factorial(2 * n - 2))


def mgf_s2(n: int, x: Scalar) -> Scalar:
    """``E[x^{S_{2,n}}]`` in hypergeometric form (``x = e^t`` gives the MGF)."""
    if n < 2:
        raise DomainError(f"generating function needs n >= 2, got {n}")
    f = hyp2f1_terminating(mgf_params(n, x))
    if isinstance(x, float):
        return float(mgf_prefactor(n)) * x * f
    return mgf_prefactor(n) * Fraction(x) * f


def mgf_s2_direct(n: int, x: Scalar) -> Scalar:
    """``sum_m P_n(S_2 = m) x^m`` summed term by term."""
    if n < 2:
        raise DomainError(f"generating function needs n >= 2, got {n}")
    if isinstance(x, float):
        return sum(float(transition_prob(n, m)) * x**m for m in range(1, n // 2 + 1))
    x = Fraction(x)
    return sum((transition_prob(n, m) * x**m for m in range(1, n // 2 + 1)), Fraction(0))


def check_derivative_identity(n: int, x: Scalar) -> Fraction:
    """Residual of the t-derivative identity for ``F((2-n)/2, (3-n)/2; 2; e^t)``.

    The left side differentiates the polynomial term by term in t
    (``d/dt x^j = j x^j``); the right side is
    ``(n-2)/2 * [F(a, b; 2; x) - F(a + 1/2, b + 1/2; 2; x)]``.
    """
    if n < 3:
        raise DomainError(f"derivative identity needs n >= 3, got {n}")
    if Fraction(x) <= 0:
        raise DomainError("x = e^t must be positive")
    x = Fraction(x)
    coeffs = coefficients(mgf_params(n, x))
    lhs = sum((j * c * x**j for j, c in enumerate(coeffs)), Fraction(0))
    rhs = Fraction(n - 2, 2) * (
        hyp2f1_terminating(mgf_params(n, x)) - hyp2f1_terminating(mgf_params(n, x, shift=1))
    )
    return lhs - rhs
