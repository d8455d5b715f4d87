import numpy as np
import pytest
from scipy import stats
from statsmodels.stats.diagnostic import acorr_ljungbox

from corrx.dcc import DccOptions, DccSpec
from corrx.diagnostics import ljung_box, rolling_correlation, rolling_dccx
from corrx.exceptions import DataError, SpecError, ZeroVarianceError
from corrx.simulate import default_config, simulate_panel


def direct_q(x, lags):
    T = x.size
    m = x.mean()
    c0 = sum((v - m) ** 2 for v in x)
    q = 0.0
    for k in range(1, lags + 1):
        ck = sum((x[t] - m) * (x[t - k] - m) for t in range(k, T))
        q += (ck / c0) ** 2 / (T - k)
    return T * (T + 2) * q


def test_against_direct_sum_and_statsmodels(rng):
    for _ in range(20):
        x = rng.normal(size=rng.integers(30, 200))
        lags = int(rng.integers(1, 5))
        res = ljung_box(x, lags)
        assert res.statistic == pytest.approx(direct_q(x, lags), rel=1e-12)
        sm = acorr_ljungbox(x, lags=[lags])
        assert res.statistic == pytest.approx(float(sm["lb_stat"].iloc[0]), rel=1e-10)
        assert res.pvalue == pytest.approx(float(sm["lb_pvalue"].iloc[0]), rel=1e-8)


def test_alternating():
    res = ljung_box(np.tile([1.0, -1.0], 50))
    assert res.statistic > 90 and res.pvalue < 1e-10


def test_zero_autocorrelation():
    x = np.array([0.0, 0.0, 0.0, 3.0, 1.0, 2.0])  # deviations give lag-1 cross sum 0
    d = x - x.mean()
    assert abs(d[1:] @ d[:-1]) < 1e-15
    res = ljung_box(x)
    assert res.statistic == pytest.approx(0.0, abs=1e-15) and res.pvalue == pytest.approx(1.0)


def test_hand_rho_pvalue():
    x = np.array([0.0, 1.0, 0.0, -1.0, 0.0, 1.0, 3.0, -2.0])
    d = x - x.mean()
    rho = (d[1:] @ d[:-1]) / (d @ d)
    T = x.size
    q = T * (T + 2) * rho**2 / (T - 1)
    res = ljung_box(x)
    assert res.pvalue == pytest.approx(stats.chi2.sf(q, 1), rel=1e-12)


def test_affine_invariance(rng):
    x = rng.normal(size=100)
    assert ljung_box(3 * x + 7, 3).statistic == pytest.approx(ljung_box(x, 3).statistic, rel=1e-10)


def test_ljung_box_errors():
    with pytest.raises(ZeroVarianceError):
        ljung_box(np.ones(20))
    with pytest.raises(DataError):
        ljung_box(np.arange(3.0), lags=2)


def test_squared_flag(rng):
    x = rng.normal(size=100)
    assert ljung_box(x, squared=True).statistic == pytest.approx(ljung_box(x**2).statistic)


def test_rolling_correlation(rng):
    x = rng.normal(size=300)
    assert np.allclose(rolling_correlation(x, x).values, 1.0)
    assert np.allclose(rolling_correlation(x, -x).values, -1.0)
    rc = rolling_correlation(rng.normal(size=1000), rng.normal(size=1000))
    assert abs(np.mean(rc.values)) < 0.1
    assert np.all(np.abs(rc.values) <= 1)
    assert rc.values.size == 1000 - 59
    np.testing.assert_array_equal(rc.exceed_flags, rc.values > rc.threshold)
    y = rng.normal(size=1000)
    a = rolling_correlation(x[:200], y[:200], 30).values
    b = rolling_correlation(x[:250], y[:250], 30).values
    np.testing.assert_allclose(a, b[:a.size])  # no look-ahead


def test_rolling_correlation_brute(rng):
    x, y = rng.normal(size=80), rng.normal(size=80)
    rc = rolling_correlation(x, y, 20)
    for k in range(rc.values.size):
        assert rc.values[k] == pytest.approx(np.corrcoef(x[k:k + 20], y[k:k + 20])[0, 1], abs=1e-12)


def test_rolling_zero_variance_window(rng):
    x = rng.normal(size=100)
    x[10:40] = 1.0
    rc = rolling_correlation(x, rng.normal(size=100), 20)
    assert np.isnan(rc.values[20]) and rc.exceed_flags[20]


def test_rolling_dccx_counts(small_dataset):
    ds = small_dataset.slice(0, 602)
    opts = DccOptions(compute_se=False)
    assert rolling_dccx(ds, DccSpec(("TPU",)), window=602, options=opts).theta3.size == 1
    re = rolling_dccx(ds, DccSpec(("TPU",)), window=600, step=1, options=opts)
    assert re.theta3.size == 3 and re.dates[-1] == ds.date_index[-1]
    with pytest.raises(SpecError):
        rolling_dccx(ds, DccSpec(()), window=600)
    with pytest.raises(DataError):
        rolling_dccx(ds, DccSpec(("TPU",)), window=700)


def test_rolling_dccx_jobs_order(small_dataset):
    ds = small_dataset.slice(0, 640)
    opts = DccOptions(compute_se=False)
    a = rolling_dccx(ds, DccSpec(("TPU",)), window=600, step=10, options=opts, jobs=1)
    b = rolling_dccx(ds, DccSpec(("TPU",)), window=600, step=10, options=opts, jobs=2)
    np.testing.assert_array_equal(a.dates, b.dates)
    np.testing.assert_allclose(a.theta3, b.theta3, atol=2e-4)


@pytest.mark.slow
def test_rolling_tracks_jump():
    cfg = default_config(T=3000, theta=(0.05, 0.9, 0.01), seed=21, break_index=1500, break_delta=0.03)
    ds = simulate_panel(cfg).dataset
    re = rolling_dccx(ds, DccSpec(("TPU",)), window=1000, step=250, options=DccOptions(compute_se=False))
    early = np.nanmean(re.theta3[re.dates <= ds.date_index[1500]])
    late = re.theta3[-1]
    assert late - early > 0.01
