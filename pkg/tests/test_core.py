import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from acfguard.core import CompressedSeries, FormatError, QualityMeasure, TimeSeries, measure, msmape_smoothing

from conftest import msmape_direct

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def test_mae_identical_is_zero():
    assert measure("mae", [1, 2, 3], [1, 2, 3]) == 0.0


def test_cheb_is_max_abs_component():
    assert measure("cheb", [0, 0, 0], [1, -2, 0.5]) == 2.0


def test_rmse_uses_mean_inside_root():
    assert measure("rmse", [0, 0, 0, 0], [2, 2, 2, 2]) == pytest.approx(2.0)


def test_nrmse_normalises_by_first_argument_range():
    a, b = [0.0, 4.0], [1.0, 4.0]
    assert measure("nrmse", a, b) == pytest.approx(np.sqrt(0.5) / 4)
    assert measure("nrmse", b, a) == pytest.approx(np.sqrt(0.5) / 3)


def test_msmape_matches_direct_formula():
    rng = np.random.default_rng(1)
    a, b = rng.normal(size=5), rng.normal(size=5)
    assert measure("msmape", a, b) == pytest.approx(msmape_direct(a, b), abs=1e-12)


def test_msmape_long_series_matches_direct():
    rng = np.random.default_rng(2)
    a = np.cumsum(rng.normal(size=300))
    b = a + rng.normal(scale=0.1, size=300)
    assert measure("msmape", a, b) == pytest.approx(msmape_direct(a, b), rel=1e-10)


def test_running_deviation_prefix():
    a = np.array([1.0, 3.0, 2.0, 10.0])
    s = msmape_smoothing(a)
    assert s[0] == 0.0
    assert s[2] == pytest.approx(1.0)
    assert s[3] == pytest.approx(np.mean(np.abs(a[:3] - a[:3].mean())))


@pytest.mark.parametrize(
    "kind,a,b,msg",
    [
        ("mae", [1, 2], [1], "length mismatch"),
        ("nrmse", [1, 1], [1, 2], "zero range"),
        ("mape", [0, 1], [1, 1], "zero reference"),
        ("msmape", [1.0], [2.0], "at least two"),
    ],
)
def test_measure_errors(kind, a, b, msg):
    with pytest.raises(ValueError, match=msg):
        measure(kind, a, b)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 30).flatmap(lambda n: st.tuples(*(arrays(np.float64, n, elements=finite) for _ in range(3)))))
def test_symmetry_and_triangle(abc):
    a, b, c = abc
    for kind in ("mae", "rmse", "cheb"):
        assert measure(kind, a, b) == pytest.approx(measure(kind, b, a))
    for kind in ("mae", "cheb"):
        assert measure(kind, a, b) <= measure(kind, a, c) + measure(kind, c, b) + 1e-9


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, 8, elements=finite), arrays(np.float64, 8, elements=finite), st.floats(-50, 50))
def test_mae_scaling(a, b, k):
    assert measure("mae", k * a, k * b) == pytest.approx(abs(k) * measure("mae", a, b), rel=1e-9, abs=1e-9)


def test_zero_iff_identical():
    a = np.array([1.0, 2.0, 5.0])
    for kind in ("mae", "rmse", "nrmse", "cheb"):
        assert measure(kind, a, a) == 0.0
        assert measure(kind, a, a + [0, 1e-9, 0]) > 0.0


def test_timeseries_rejects_bad_input():
    with pytest.raises(ValueError):
        TimeSeries([1.0])
    with pytest.raises(ValueError, match="non-finite"):
        TimeSeries([1.0, np.nan, 2.0])
    ts = TimeSeries([1.0, 2.0])
    with pytest.raises(ValueError):
        ts.values[0] = 5.0


def test_compressed_series_invariants():
    cs = CompressedSeries([0, 2, 4], [1.0, 2.0, 3.0], n=5)
    assert cs.n_kept == 3
    assert cs.compression_ratio == pytest.approx(5 / 3)
    with pytest.raises(FormatError):
        CompressedSeries([1, 4], [0.0, 1.0], n=5)
    with pytest.raises(FormatError):
        CompressedSeries([0, 3, 2, 4], [0.0] * 4, n=5)


def test_measure_catalogue_complete():
    assert {q.value for q in QualityMeasure} == {"mae", "rmse", "nrmse", "msmape", "mape", "cheb"}
