from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strahler_clt import exact, moments
from strahler_clt.errors import DomainError
from strahler_clt.moments import Target, asymptotic_check, parse_target


def eq3_variance(n):
    return Fraction(n * (n - 1) * (n - 2) * (n - 3), 2 * (2 * n - 3) ** 2 * (2 * n - 5))


@pytest.mark.parametrize("k,n,v", [(1, 4, Fraction(6, 5)), (3, 4, Fraction(12, 5)), (0, 17, 1)])
def test_raw_examples(k, n, v):
    assert moments.raw_moment_s2(k, n) == v


def test_central_examples():
    assert moments.central_moment_s2(1, 4) == Fraction(1, 5)
    assert moments.central_moment_s2(0, 9) == 1
    # centered at n/4 = 1: S_2 is 1 w.p. 4/5 and 2 w.p. 1/5
    assert moments.central_moment_s2(2, 4) == Fraction(1, 5)
    assert exact.dist_S(2, 4).variance() == eq3_variance(4) == Fraction(4, 25)


def test_negative_and_mixed_examples():
    assert moments.negative_moment_s2(1, 4) == Fraction(9, 10)
    assert moments.negative_moment_s2(0, 30) == 1
    assert moments.negative_moment_s2(1, 2) == 1
    assert moments.mixed_moment_s2(0, 2, 4) == moments.central_moment_s2(2, 4)
    assert moments.mixed_moment_s2(1, 0, 4) == Fraction(6, 5)
    d6 = exact.dist_S(2, 6)
    assert moments.mixed_moment_s2(1, 1, 6) == exact.expect(d6, lambda v: v * (v - Fraction(6, 4)))
    with pytest.raises(DomainError):
        moments.negative_moment_s2(1, 1)


@pytest.mark.parametrize("k,n", [(0, 5), (2, 10), (0, 3), (4, 100)])
def test_prop2_residual_examples(k, n):
    assert moments.check_prop2_recurrence(k, n) == 0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 5), st.integers(2, 50))
def test_recursion_matches_law(k, n):
    assert moments.raw_moment_s2(k, n) == exact.expect(exact.dist_S(2, n), k)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 5), st.integers(2, 40))
def test_central_matches_law(k, n):
    assert moments.central_moment_s2(k, n) == exact.central_moment(exact.dist_S(2, n), k, Fraction(n, 4))


@given(st.integers(2, 200))
def test_mean_and_variance_closed_forms(n):
    mean = moments.raw_moment_s2(1, n)
    assert mean == Fraction(n * (n - 1), 2 * (2 * n - 3))
    if n >= 3:
        assert moments.raw_moment_s2(2, n) - mean**2 == eq3_variance(n)


@given(st.integers(4, 100))
def test_second_and_third_moment_closed_forms(n):
    assert moments.raw_moment_s2(2, n) == Fraction(n * (n - 1) * (n * n - n - 4), 4 * (2 * n - 3) * (2 * n - 5))
    assert moments.raw_moment_s2(3, n) == Fraction(
        n * (n - 1) * (n**4 - 2 * n**3 - 15 * n**2 + 32 * n + 8), 8 * (2 * n - 3) * (2 * n - 5) * (2 * n - 7))


def test_magnitude_below_two_rejected():
    with pytest.raises(DomainError):
        moments.raw_moment_s2(0, 1)


def test_lemma3_second_moment_ratio_closed_form():
    n = 4096
    chk = asymptotic_check(Target("lemma3", 2), [n], backend="float")
    expected = float(moments.central_moment_s2(2, n) / Fraction(n, 16))
    assert chk.ratios[0] == pytest.approx(expected, rel=1e-10)
    assert abs(chk.ratios[0] - 1) < 0.01


def test_trivial_targets():
    for n in (64, 100, 333):
        assert asymptotic_check(Target("lemma3", 0), [n]).ratios == [1.0]
    chk = asymptotic_check(Target("prop2", 1), moments.power_grid(64, 4096), backend="float")
    assert chk.in_band(0.99, 1.01)


@pytest.mark.parametrize("target", [
    Target("lemma3", 3), Target("lemma3", 6), Target("prop2", 4), Target("lemma4", 3, l=2),
    Target("lemma1", 2, r=2), Target("lemma2", 4, r=2), Target("lemma5", 2, q=2, r=2),
])
def test_float_and_exact_backends_agree(target):
    e = asymptotic_check(target, [128], backend="exact")
    f = asymptotic_check(target, [128], backend="float")
    assert f.ratios[0] == pytest.approx(e.ratios[0], rel=1e-9)


def test_auto_backend_switches_at_threshold():
    chk = asymptotic_check(Target("lemma3", 2), [128, 256, 512])
    assert chk.backend == ["exact", "exact", "float"]


def test_grid_must_increase_and_predicted_nonzero():
    with pytest.raises(DomainError):
        asymptotic_check(Target("lemma3", 2), [128, 64])
    with pytest.raises(DomainError):
        Target("nope", 1).predicted(10)


def test_odd_lemma2_constant_fits_inner_order_r_minus_1():
    rep = moments.odd_constant_report(2, 1, 4096)
    assert abs(rep["ratio_r_minus_1"] - 1) < 0.01
    assert abs(rep["ratio_r_minus_2"] - 1) > 0.3


def test_lemma5_odd_derived_form_in_sanity_rail():
    chk = asymptotic_check(Target("lemma5", 3, q=2, r=2, variant="derived"), moments.power_grid(256, 4096),
                           backend="float")
    assert chk.in_band(0.5, 2.0)


@pytest.mark.parametrize("text,target", [
    ("lemma4(l=1,k=2)", Target("lemma4", 2, l=1)),
    ("lemma5(q=2, r=1, k=3, variant=derived)", Target("lemma5", 3, q=2, r=1, variant="derived")),
    ("prop2(k=3)", Target("prop2", 3)),
])
def test_parse_target(text, target):
    assert parse_target(text) == target


def test_parse_target_rejects_garbage():
    with pytest.raises(DomainError):
        parse_target("lemma4")
