from fractions import Fraction
from math import exp

import pytest
from hypothesis import given
from hypothesis import strategies as st

from strahler_clt import exact, moments
from strahler_clt.errors import DomainError
from strahler_clt.hypergeom import (HypParams, check_derivative_identity, coefficients, hyp2f1_terminating,
                                    mgf_params, mgf_prefactor, mgf_s2, mgf_s2_direct)

rationals = st.fractions(min_value=Fraction(1, 20), max_value=20, max_denominator=50)


def test_two_term_series():
    assert hyp2f1_terminating(HypParams(Fraction(-1), Fraction(1), Fraction(2), Fraction(1))) == Fraction(1, 2)


@given(st.fractions(-5, 5, max_denominator=9), st.integers(1, 6), rationals)
def test_zero_upper_parameter(b, c, z):
    assert hyp2f1_terminating(HypParams(Fraction(0), b, Fraction(c), z)) == 1


def test_rejects_nonterminating_and_bad_lower():
    with pytest.raises(DomainError):
        HypParams(Fraction(1, 2), Fraction(3, 2), Fraction(2), Fraction(1))
    with pytest.raises(DomainError):
        HypParams(Fraction(-2), Fraction(1), Fraction(-1), Fraction(1))


@pytest.mark.parametrize("n", range(2, 12))
def test_mgf_params_terminate(n):
    p = mgf_params(n, Fraction(1))
    assert p.degree == (n - 2) // 2
    assert len(coefficients(p)) == p.degree + 1


def test_mgf_examples():
    assert mgf_s2(4, 1) == 1
    assert mgf_prefactor(4) * hyp2f1_terminating(mgf_params(4, Fraction(1))) == 1
    assert mgf_s2(4, 2) == Fraction(12, 5)
    assert mgf_s2(6, 3) == sum(exact.transition_prob(6, m) * 3**m for m in (1, 2, 3))


@pytest.mark.parametrize("n,x", [(4, 1), (5, 2), (3, 7)])
def test_derivative_identity_examples(n, x):
    assert check_derivative_identity(n, x) == 0


@given(st.integers(2, 40), rationals)
def test_mgf_pipelines_agree_exactly(n, x):
    assert mgf_s2(n, x) == mgf_s2_direct(n, x)


@given(st.integers(3, 40), rationals)
def test_derivative_identity_exact(n, x):
    assert check_derivative_identity(n, x) == 0


@pytest.mark.parametrize("n", [3, 10, 25])
def test_derivative_identity_domain(n):
    with pytest.raises(DomainError):
        check_derivative_identity(n, 0)
    with pytest.raises(DomainError):
        check_derivative_identity(2, 1)


@pytest.mark.parametrize("n", [5, 12, 30])
def test_float_mgf_derivatives_give_moments(n):
    h = 1e-4
    m = lambda t: mgf_s2(n, exp(t))  # noqa: E731
    first = (m(h) - m(-h)) / (2 * h)
    second = (m(h) - 2 * m(0.0) + m(-h)) / (h * h)
    assert first == pytest.approx(float(moments.raw_moment_s2(1, n)), rel=1e-6)
    assert second == pytest.approx(float(moments.raw_moment_s2(2, n)), rel=1e-4)


@pytest.mark.parametrize("n", [4, 16, 40])
def test_float_mode_matches_exact(n):
    assert mgf_s2(n, 1.5) == pytest.approx(float(mgf_s2(n, Fraction(3, 2))), rel=1e-12)
