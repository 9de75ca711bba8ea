from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from strahler_clt import montecarlo as mc
from strahler_clt.errors import DomainError


@pytest.mark.parametrize("kind,q,r,v", [
    ("ratio", 1, 1, Fraction(1, 16)),
    ("ratio", 2, 1, Fraction(1, 4)),
    ("count", 1, 2, Fraction(5, 256)),
    ("count", 1, 1, Fraction(1, 16)),
])
def test_predicted_variance_examples(kind, q, r, v):
    assert mc.predicted_variance(kind, r, q) == v


@pytest.mark.parametrize("r", range(1, 8))
def test_gap_one_forms_agree(r):
    assert mc.gap_one_variance(r) == mc.predicted_variance("ratio", 1, q=r)


def test_experiment_validation():
    with pytest.raises(DomainError):
        mc.CltExperiment("count", r=1, n=64, samples=10, seed=0, q=2)
    with pytest.raises(DomainError):
        mc.CltExperiment("other", r=1, n=64, samples=10, seed=0)
    with pytest.raises(DomainError):
        mc.CltExperiment("ratio", r=1, n=1, samples=10, seed=0)


def test_ks_examples():
    assert mc.ks_distance(np.array([0.0]), 0.0, 1.0) == 0.5
    assert mc.ks_distance(np.full(50, 0.3), 0.0, 1.0) >= 0.5
    with pytest.raises(DomainError):
        mc.ks_distance(np.array([]), 0.0, 1.0)
    with pytest.raises(DomainError):
        mc.ks_distance(np.array([1.0, 0.0]), 0.0, 1.0)
    with pytest.raises(DomainError):
        mc.ks_distance(np.array([0.0]), 0.0, 0.0)


def test_ks_null_calibration():
    x = np.sort(np.random.default_rng(3).standard_normal(100_000))
    assert mc.ks_distance(x, 0.0, 1.0) <= 0.006


@given(arrays(np.float64, st.integers(1, 200), elements=st.floats(-1e3, 1e3)))
def test_ks_in_unit_interval(x):
    assert 0.0 <= mc.ks_distance(np.sort(x), 0.0, 2.0) <= 1.0


@given(arrays(np.float64, st.integers(2, 300), elements=st.floats(-100, 100)), st.integers(1, 299))
def test_streaming_moments_split_and_merge(x, cut):
    cut = cut % len(x)
    one = mc.StreamingMoments()
    for v in x:
        one.push(float(v))
    left, right = mc.StreamingMoments(), mc.StreamingMoments()
    left.push_batch(x[:cut])
    right.push_batch(x[cut:])
    left.merge(right)
    d = x - x.mean()
    scale = max(1.0, float(np.max(np.abs(d))))
    assert one.n == left.n == len(x)
    assert one.mean == pytest.approx(float(x.mean()), abs=1e-9 * scale)
    for acc in (one, left):
        assert acc.variance == pytest.approx(float(x.var(ddof=1)), rel=1e-7, abs=1e-7 * scale**2)
        assert acc.third == pytest.approx(float((d**3).mean()), rel=1e-6, abs=1e-6 * scale**3)
        assert acc.fourth == pytest.approx(float((d**4).mean()), rel=1e-6, abs=1e-6 * scale**4)
        assert acc.variance >= 0


def test_count_one_equals_ratio_one_sample_for_sample():
    a = mc.CltExperiment("count", r=1, n=512, samples=2000, seed=4)
    b = mc.CltExperiment("ratio", q=1, r=1, n=512, samples=2000, seed=4)
    counts = mc.draw_counts(512, 2000, 4)
    assert np.array_equal(a.statistic(counts)[0], b.statistic(counts)[0])
    ra, rb = mc.run_experiment(a).row(), mc.run_experiment(b).row()
    ra.pop("kind"), rb.pop("kind")
    assert ra == rb


@pytest.mark.parametrize("workers", [1, 3])
def test_runs_are_deterministic(workers):
    exp = mc.CltExperiment("ratio", q=2, r=1, n=300, samples=3000, seed=12, workers=workers)
    assert mc.run_experiment(exp).row() == mc.run_experiment(exp).row()


def test_worker_count_changes_streams_but_not_law():
    a = mc.run_experiment(mc.CltExperiment("count", r=1, n=1024, samples=20_000, seed=1, workers=1))
    b = mc.run_experiment(mc.CltExperiment("count", r=1, n=1024, samples=20_000, seed=1, workers=4))
    assert a.row() != b.row()
    assert abs(a.variance - b.variance) < 0.1 * a.variance


def test_summary_ranges_and_serialization():
    s = mc.run_experiment(mc.CltExperiment("ratio", q=3, r=1, n=8, samples=4000, seed=8), hist_bins=10)
    assert s.variance >= 0 and 0 <= s.ks <= 1 and 0 <= s.zero_freq <= 1
    # S_3 = 0 exactly when S_2 = 1, which has probability 64/429 at n = 8
    assert s.zero_freq == pytest.approx(64 / 429, abs=0.03)
    obj = s.to_json_obj()
    assert obj["predicted_variance"] == {"num": 1, "den": 1}
    assert sum(obj["histogram"]["counts"]) == 4000
    assert list(s.row()) == list(mc.McSummary.CSV_COLUMNS)
    assert s.row()["predicted_variance"] == "1/1"


def test_order_one_variance_near_limit():
    s = mc.run_experiment(mc.CltExperiment("count", r=1, n=2048, samples=20_000, seed=21))
    assert abs(s.variance - 1 / 16) / (1 / 16) < 0.05


def test_horton_small():
    h = mc.horton_check(1, 4096, 2000, seed=2)
    assert h.exceed_freq <= 0.02 and h.zero_freq == 0
    assert h.mean_ratio == pytest.approx(0.25, abs=0.005)
