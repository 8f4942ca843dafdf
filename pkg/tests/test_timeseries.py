import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from edgescale import timeseries as ts
from edgescale.timeseries import ConfigError, FilterConfig, MetricSeries, MetricStore


def polyfit_oracle(values, w, o):
    """Independent reference: numpy.polyfit per window, centre evaluated."""
    values = np.asarray(values, float)
    n, half = len(values), w // 2
    x = np.arange(w, dtype=float)
    out = np.empty(n)
    for i in range(n):
        lo = min(max(i - half, 0), n - w)
        coeffs = np.polyfit(x, values[lo:lo + w], o)
        out[i] = np.polyval(coeffs, i - lo)
    return out


# -- MetricSeries ------------------------------------------------------------

def test_series_rejects_non_increasing_ticks():
    with pytest.raises(ValueError):
        MetricSeries(np.array([0, 2, 2]), np.array([1.0, 2.0, 3.0]))


def test_series_rejects_non_finite():
    with pytest.raises(ValueError):
        MetricSeries.from_values([1.0, np.nan])


def test_series_rejects_negative_latency_and_cpu():
    with pytest.raises(ValueError):
        MetricSeries.from_values([1.0, -0.5], unit="ms")
    with pytest.raises(ValueError):
        MetricSeries.from_values([-1.0], unit="cpu_pct")
    MetricSeries.from_values([-1.0], unit="")   # unitless may be negative


def test_series_is_read_only():
    s = MetricSeries.from_values([1.0, 2.0])
    with pytest.raises(ValueError):
        s.values[0] = 5.0


def test_store_is_append_only():
    store = MetricStore()
    store.append(0, 1.0)
    store.append(3, 2.0)
    with pytest.raises(ValueError):
        store.append(3, 4.0)
    snap = store.snapshot()
    assert list(snap.ticks) == [0, 3]
    assert list(store.tail_series(1).values) == [2.0]


# -- Savitzky-Golay ----------------------------------------------------------

def test_filter_config_validation():
    with pytest.raises(ConfigError):
        FilterConfig(4, 2)
    with pytest.raises(ConfigError):
        FilterConfig(1, 0)
    with pytest.raises(ConfigError):
        FilterConfig(5, 5)
    FilterConfig(5, 4)


def test_constant_series_is_fixed_point():
    out = ts.savgol_smooth(np.full(5, 5.0), FilterConfig(5, 2))
    np.testing.assert_allclose(out, 5.0, rtol=1e-12)


def test_quadratic_series_reproduced():
    t = np.arange(12, dtype=float)
    np.testing.assert_allclose(ts.savgol_smooth(t ** 2, FilterConfig(5, 2)), t ** 2, rtol=1e-9, atol=1e-9)


def test_impulse_center_matches_polyfit_oracle():
    raw = [1.0, 2.0, 100.0, 4.0, 5.0]
    out = ts.savgol_smooth(raw, FilterConfig(5, 1))
    oracle = polyfit_oracle(raw, 5, 1)
    assert out[2] == pytest.approx(oracle[2], rel=1e-12)
    assert out[2] == pytest.approx(22.4, rel=1e-12)      # mean of the window, frozen from the oracle
    assert 2 < out[2] < 100
    trend = np.polyval(np.polyfit([0, 1, 3, 4], [1, 2, 4, 5], 1), 2)
    assert abs(out[2] - trend) < abs(out[2] - 100)


@pytest.mark.parametrize("w,o", [(5, 2), (7, 3), (11, 3), (11, 0), (9, 4)])
def test_matches_oracle_everywhere_including_edges(w, o):
    rng = np.random.default_rng(w * 10 + o)
    raw = rng.normal(size=40).cumsum()
    np.testing.assert_allclose(ts.savgol_smooth(raw, FilterConfig(w, o)),
                               polyfit_oracle(raw, w, o), rtol=1e-8, atol=1e-8)


def test_interior_matches_scipy_savgol():
    scipy_signal = pytest.importorskip("scipy.signal")
    rng = np.random.default_rng(3)
    raw = rng.normal(size=60)
    ours = ts.savgol_smooth(raw, FilterConfig(11, 3))
    ref = scipy_signal.savgol_filter(raw, 11, 3, mode="interp")
    # scipy's "interp" mode fits the first/last window too, so it matches end to end
    np.testing.assert_allclose(ours, ref, rtol=1e-9, atol=1e-9)


def test_short_series_is_config_error():
    with pytest.raises(ConfigError):
        ts.savgol_smooth(np.arange(4.0), FilterConfig(5, 2))


def test_smoothing_keeps_length_and_ticks():
    s = MetricSeries.from_values(np.arange(30.0), start_tick=7, unit="requests")
    out = ts.savgol_smooth(s, FilterConfig(11, 3))
    assert isinstance(out, MetricSeries)
    assert list(out.ticks) == list(s.ticks)
    assert out.tick_seconds == s.tick_seconds


@settings(max_examples=120, deadline=None)
@given(seed=st.integers(0, 10_000), half=st.integers(1, 6), data=st.data())
def test_polynomial_reproduction_property(seed, half, data):
    w = 2 * half + 1
    o = data.draw(st.integers(0, w - 1))
    rng = np.random.default_rng(seed)
    n = data.draw(st.integers(w, 4 * w))
    t = np.linspace(-1, 1, n)
    poly = np.polyval(rng.normal(size=o + 1), t)
    out = ts.savgol_smooth(poly, FilterConfig(w, o))
    np.testing.assert_allclose(out, poly, rtol=1e-9, atol=1e-9 * max(1.0, np.abs(poly).max()))


@settings(max_examples=120, deadline=None)
@given(seed=st.integers(0, 10_000), a=st.floats(-5, 5), b=st.floats(-5, 5))
def test_linearity_property(seed, a, b):
    rng = np.random.default_rng(seed)
    x, y = rng.normal(size=(2, 50))
    cfg = FilterConfig(11, 3)
    lhs = ts.savgol_smooth(a * x + b * y, cfg)
    rhs = a * ts.savgol_smooth(x, cfg) + b * ts.savgol_smooth(y, cfg)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-9, atol=1e-9)


def test_total_variation_drops_on_noisy_input():
    cfg = FilterConfig(11, 3)
    t = np.linspace(0, 4 * np.pi, 200)
    for seed in range(100):
        rng = np.random.default_rng(seed)
        raw = np.sin(t) + rng.normal(scale=0.3, size=t.size)
        smooth = ts.savgol_smooth(raw, cfg)
        assert np.abs(np.diff(smooth)).sum() <= np.abs(np.diff(raw)).sum()


# -- windowing ---------------------------------------------------------------

@pytest.mark.parametrize("n,count", [(600, 51), (549, 0), (550, 1)])
def test_window_slice_counts(n, count):
    X, Y = ts.window_slices(np.arange(float(n)), 10, 540)
    assert len(X) == len(Y) == count


def test_single_slice_contents():
    X, Y = ts.window_slices(np.arange(550.0), 10, 540)
    assert list(X[0]) == list(range(10))
    assert list(Y[0]) == list(range(10, 550))


@settings(max_examples=100, deadline=None)
@given(lookback=st.integers(1, 20), horizon=st.integers(1, 30), extra=st.integers(0, 40))
def test_window_count_formula(lookback, horizon, extra):
    n = lookback + horizon + extra
    X, Y = ts.window_slices(np.arange(float(n)), lookback, horizon)
    assert len(X) == n - lookback - horizon + 1
    assert X.shape[1] == lookback and Y.shape[1] == horizon
    # consecutive slices advance by one tick
    if len(X) > 1:
        assert X[1][0] == X[0][0] + 1


# -- scaling -----------------------------------------------------------------

def test_normalize_examples():
    scaled, params = ts.normalize([0.0, 50.0, 100.0])
    np.testing.assert_allclose(scaled, [0, 0.5, 1.0])
    scaled, params = ts.normalize([7.0, 7.0, 7.0])
    np.testing.assert_allclose(scaled, 0.0)
    assert params.offset == 7.0
    np.testing.assert_allclose(ts.denormalize(scaled, params), 7.0)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 100_000), n=st.integers(1, 200))
def test_normalize_round_trip(seed, n):
    rng = np.random.default_rng(seed)
    x = rng.normal(scale=rng.uniform(0.1, 1e4), size=n) + rng.uniform(-1e3, 1e3)
    scaled, params = ts.normalize(x)
    assert scaled.min() >= 0 and scaled.max() <= 1
    np.testing.assert_allclose(ts.denormalize(scaled, params), x, rtol=1e-9, atol=1e-9 * np.abs(x).max())


# -- CSV ---------------------------------------------------------------------

def test_csv_round_trip(tmp_path):
    s = MetricSeries.from_values([3.0, 4.5, 0.1], start_tick=2, unit="ms")
    text = s.to_csv(tmp_path / "s.csv")
    assert text.splitlines()[0] == "xtick,value"
    assert text.splitlines()[1] == "2,3"
    back = ts.series_from_csv(tmp_path / "s.csv", unit="ms")
    assert list(back.ticks) == [2, 3, 4]
    assert list(back.values) == [3.0, 4.5, 0.1]
    assert ts.series_from_csv(text).values.tolist() == [3.0, 4.5, 0.1]


def test_csv_rejects_wrong_header():
    with pytest.raises(ValueError):
        ts.series_from_csv("tick,val\n0,1\n")
