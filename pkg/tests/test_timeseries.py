import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from siabf import (
    StandardizationStats,
    TimeSeries,
    destandardize,
    ingest_csv,
    interpolate_gaps,
    standardize,
    write_csv,
)
from siabf.errors import BoundaryGap, MalformedFile, NonUniformSampling, TooShort, ZeroVariance


def _csv(tmp_path, text, name="s.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_ingest_plain(tmp_path):
    s = ingest_csv(_csv(tmp_path, "time,value\n0,1\n1,2\n2,3\n"))
    assert s.sample_interval == 1.0
    np.testing.assert_array_equal(s.values, [1, 2, 3])
    assert not s.has_gaps


def test_ingest_missing_row_becomes_gap(tmp_path):
    s = ingest_csv(_csv(tmp_path, "time,value\n0,1\n1,2\n3,4\n"))
    assert s.sample_interval == 1.0
    assert s.gap_mask.tolist() == [False, False, True, False]
    assert s.values[[0, 1, 3]].tolist() == [1, 2, 4]


def test_ingest_non_uniform(tmp_path):
    with pytest.raises(NonUniformSampling):
        ingest_csv(_csv(tmp_path, "time,value\n0,1\n1,2\n2.5,3\n"))


def test_ingest_not_increasing(tmp_path):
    with pytest.raises(NonUniformSampling):
        ingest_csv(_csv(tmp_path, "time,value\n0,1\n2,2\n1,3\n"))


@pytest.mark.parametrize(
    "text, err",
    [
        ("", MalformedFile),
        ("time,value\n0,1\n1,abc\n", MalformedFile),
        ("t,v\n0,1\n1,2\n", MalformedFile),
        ("time,value\n0,1\n", TooShort),
    ],
)
def test_ingest_errors(tmp_path, text, err):
    with pytest.raises(err):
        ingest_csv(_csv(tmp_path, text))


def test_ingest_custom_columns_and_dates(tmp_path):
    s = ingest_csv(_csv(tmp_path, "date,flow\n2020-01-01,1\n2020-01-02,2\n2020-01-04,4\n"), "date", "flow")
    assert s.sample_interval == pytest.approx(1.0)
    assert s.gap_mask.tolist() == [False, False, True, False]


def test_ingest_tolerates_tiny_jitter(tmp_path):
    s = ingest_csv(_csv(tmp_path, "time,value\n0,1\n1.0000001,2\n2,3\n"))
    assert len(s) == 3 and not s.has_gaps


def test_csv_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    values = rng.standard_normal(50)
    values[[7, 8, 30]] = np.nan
    s = TimeSeries(values, 3.5, 0.25)
    path = tmp_path / "rt.csv"
    write_csv(s, path)
    back = ingest_csv(path)
    np.testing.assert_array_equal(back.gap_mask, s.gap_mask)
    assert np.array_equal(back.values, s.values, equal_nan=True)
    assert back.start_time == s.start_time
    assert back.sample_interval == pytest.approx(s.sample_interval, rel=1e-12)


def test_timeseries_invariants():
    with pytest.raises(TooShort):
        TimeSeries([1.0])
    with pytest.raises(ValueError):
        TimeSeries([1.0, 2.0], sample_interval=0.0)
    with pytest.raises(ValueError):
        TimeSeries([1.0, np.inf])
    s = TimeSeries([1.0, 2.0, 3.0], start_time=10.0, sample_interval=0.5)
    np.testing.assert_array_equal(s.times, [10.0, 10.5, 11.0])
    with pytest.raises(ValueError):
        s.values[0] = 5.0


@pytest.mark.parametrize(
    "values, expected",
    [
        ([0, np.nan, 2], [0, 1, 2]),
        ([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]),
        ([5, np.nan, np.nan, 5], [5, 5, 5, 5]),
    ],
)
def test_interpolate(values, expected):
    out = interpolate_gaps(TimeSeries(values))
    np.testing.assert_allclose(out.values, expected, atol=0)
    assert not out.has_gaps


def test_interpolate_boundary_gap():
    with pytest.raises(BoundaryGap):
        interpolate_gaps(TimeSeries([np.nan, 1.0, 2.0]))
    with pytest.raises(BoundaryGap):
        interpolate_gaps(TimeSeries([1.0, 2.0, np.nan]))


@settings(max_examples=50, deadline=None)
@given(st.data())
def test_interpolate_idempotent_and_bracketed(data):
    n = data.draw(st.integers(3, 40))
    values = np.array(data.draw(st.lists(st.floats(-1e6, 1e6), min_size=n, max_size=n)))
    gaps = data.draw(st.lists(st.integers(1, n - 2), max_size=n // 2))
    values[gaps] = np.nan
    once = interpolate_gaps(TimeSeries(values))
    twice = interpolate_gaps(once)
    np.testing.assert_array_equal(once.values, twice.values)
    known = np.flatnonzero(~np.isnan(values))
    for g in set(gaps):
        left = values[known[known < g].max()]
        right = values[known[known > g].min()]
        assert min(left, right) - 1e-9 <= once.values[g] <= max(left, right) + 1e-9


def test_standardize_examples():
    with pytest.raises(ZeroVariance):
        standardize(TimeSeries([1.0, 1.0, 1.0]))
    z, stats = standardize(TimeSeries([0.0, 2.0]))
    np.testing.assert_array_equal(z.values, [-1.0, 1.0])
    assert stats == StandardizationStats(1.0, 1.0)


def test_standardize_already_standard():
    x = np.array([-1.0, 1.0, -1.0, 1.0])
    z, stats = standardize(TimeSeries(x))
    np.testing.assert_allclose(z.values, x, atol=1e-12)
    assert stats.mean == pytest.approx(0.0, abs=1e-12)
    assert stats.std == pytest.approx(1.0, abs=1e-12)


def test_destandardize_examples():
    np.testing.assert_array_equal(destandardize([0.0], StandardizationStats(3.0, 2.0)), [3.0])
    np.testing.assert_array_equal(destandardize([-1.0, 1.0], StandardizationStats(1.0, 1.0)), [0.0, 2.0])
    z, stats = standardize(TimeSeries([1.0, 5.0, 9.0]))
    np.testing.assert_allclose(destandardize(z.values, stats), [1.0, 5.0, 9.0], atol=1e-9)
    with pytest.raises(ZeroVariance):
        destandardize([1.0], StandardizationStats(0.0, 0.0))


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, st.integers(2, 200), elements=st.floats(-1e6, 1e6)))
def test_standardize_round_trip(x):
    if np.std(x) <= 1e-6 * max(1.0, np.max(np.abs(x))):
        return
    z, stats = standardize(TimeSeries(x))
    assert abs(np.mean(z.values)) < 1e-9
    assert abs(np.std(z.values) - 1.0) < 1e-9
    np.testing.assert_allclose(destandardize(z.values, stats), x, rtol=0, atol=1e-9 * max(1.0, np.max(np.abs(x))))
