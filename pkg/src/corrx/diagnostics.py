"""Residual autocorrelation tests, rolling correlations and rolling re-estimation."""
from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import stats

from corrx.data import AlignedDataset
from corrx.dcc import DccOptions, DccSpec, nested_start, two_step_fit
from corrx.exceptions import CorrxError, DataError, SpecError, ZeroVarianceError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LjungBoxResult:
    statistic: float
    lags: int
    pvalue: float


def ljung_box(series, lags: int = 1, squared: bool = False) -> LjungBoxResult:
    """Ljung-Box Q = T(T+2) sum_k rho_k^2 / (T-k), chi-square(lags) upper tail."""
    x = np.asarray(getattr(series, "values", series), dtype=float).ravel()
    if squared:
        x = x ** 2
    T = x.size
    if lags < 1 or T <= lags + 1:
        raise DataError(f"Ljung-Box needs T > lags + 1 (T={T}, lags={lags})")
    if not np.all(np.isfinite(x)):
        raise DataError("series contains non-finite values")
    d = x - x.mean()
    denom = float(d @ d)
    if denom <= 0.0:
        raise ZeroVarianceError("Ljung-Box on a zero-variance series")
    q = 0.0
    for k in range(1, lags + 1):
        rho = float(d[k:] @ d[:-k]) / denom
        q += rho * rho / (T - k)
    q *= T * (T + 2)
    return LjungBoxResult(q, int(lags), float(stats.chi2.sf(q, lags)))


@dataclass(frozen=True)
class RollingSeries:
    dates: np.ndarray
    values: np.ndarray
    threshold: float
    exceed_flags: np.ndarray

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["date", "value", "flag"])
            for d, v, f in zip(self.dates, self.values, self.exceed_flags):
                w.writerow([str(d), "" if np.isnan(v) else repr(float(v)), int(bool(f))])


def rolling_correlation(x, y, window: int = 60, dates=None) -> RollingSeries:
    """Trailing-window Pearson correlation.

    The threshold is one standard deviation of the whole rolling series.
    Windows with zero variance give NaN and are flagged.
    """
    x = np.asarray(getattr(x, "values", x), dtype=float)
    y = np.asarray(getattr(y, "values", y), dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DataError("x and y must be one-dimensional and of equal length")
    if window < 2 or x.size < window:
        raise DataError(f"need 2 <= window <= T (window={window}, T={x.size})")
    wx = sliding_window_view(x, window)
    wy = sliding_window_view(y, window)
    dx = wx - wx.mean(axis=1, keepdims=True)
    dy = wy - wy.mean(axis=1, keepdims=True)
    sxx = np.sum(dx * dx, axis=1)
    syy = np.sum(dy * dy, axis=1)
    sxy = np.sum(dx * dy, axis=1)
    ok = (sxx > 0) & (syy > 0)
    vals = np.full(sxx.size, np.nan)
    vals[ok] = np.clip(sxy[ok] / np.sqrt(sxx[ok] * syy[ok]), -1.0, 1.0)
    finite = vals[ok]
    threshold = float(np.std(finite, ddof=1)) if finite.size > 1 else float("nan")
    with np.errstate(invalid="ignore"):
        flags = ~ok | (vals > threshold)
    if dates is None:
        dates = np.arange(window - 1, x.size)
    else:
        dates = np.asarray(dates)[window - 1:]
    return RollingSeries(dates, vals, threshold, flags)


@dataclass(frozen=True)
class RollingEstimates:
    dates: np.ndarray
    theta3: np.ndarray
    converged: np.ndarray
    regressor: str = ""

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["date", "theta3", "converged"])
            for d, v, c in zip(self.dates, self.theta3, self.converged):
                w.writerow([str(d), "" if np.isnan(v) else repr(float(v)), int(bool(c))])


def _window_fits(args):
    """Sequential warm-started fits over a contiguous run of windows."""
    dataset, spec, options, starts_idx, window = args
    out = []
    prev = None
    for s in starts_idx:
        sub = dataset.slice(s, s + window)
        warm = [nested_start(prev, spec)] if prev is not None else []
        fit = None
        for attempt in (warm, []) if warm else ([],):
            try:
                fit = two_step_fit(sub, spec, options, starts=attempt).dcc_fit
                break
            except CorrxError as exc:
                logger.info("window ending %s: %s", sub.date_index[-1], exc)
        if fit is None or not fit.converged:
            out.append((np.nan, False))
            prev = fit if fit is not None else prev
            continue
        prev = fit
        out.append((float(fit.params.theta_x[0]), True))
    return out


def rolling_dccx(dataset: AlignedDataset, spec: DccSpec, window: int = 750, step: int = 1,
                 options: DccOptions | None = None, jobs: int = 1) -> RollingEstimates:
    """Re-estimate ``spec`` on each trailing window and record the first exogenous coefficient.

    Each window is warm-started from the previous window's optimum.  With
    ``jobs > 1`` the windows are split into contiguous runs fitted in parallel;
    results are ordered by window end date.
    """
    if spec.k == 0:
        raise SpecError("rolling re-estimation needs at least one regressor")
    if step < 1:
        raise DataError("step must be positive")
    T = dataset.nobs
    if T < window:
        raise DataError(f"sample of {T} observations shorter than window {window}")
    opts = options or DccOptions()
    opts = DccOptions(**{**opts.__dict__, "strict": False, "compute_se": False})
    starts = list(range(0, T - window + 1, step))
    if jobs > 1 and len(starts) > 1:
        chunks = [c.tolist() for c in np.array_split(starts, min(jobs, len(starts)))]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_window_fits, [(dataset, spec, opts, c, window) for c in chunks]))
        results = [r for part in parts for r in part]
    else:
        results = _window_fits((dataset, spec, opts, starts, window))
    dates = dataset.date_index[[s + window - 1 for s in starts]]
    theta = np.array([r[0] for r in results])
    conv = np.array([r[1] for r in results])
    return RollingEstimates(dates, theta, conv, spec.regressors[0])
