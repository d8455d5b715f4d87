"""One-step-ahead covariance forecasts and the out-of-sample loop.

Models are estimated once on the in-sample window.  Through the hold-out
period the GJR variances and the quasi-correlation state are carried forward
with realised returns and regressors, so each forecast for date t only uses
information up to t-1.
"""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from corrx.data import AlignedDataset, to_dates
from corrx.dcc import (
    DccOptions,
    DccSpec,
    Design,
    ModelFit,
    build_design,
    expand_break_spec,
    fit_garch_panel,
    nested_start,
    two_step_fit,
)
from corrx.exceptions import CorrxError, DataError, NotPositiveDefiniteError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ForecastState:
    """Information at date t: variances h2_t, quasi-correlation Q_t and returns r_t."""

    h2: np.ndarray
    q: np.ndarray
    returns: np.ndarray

    @property
    def residuals(self) -> np.ndarray:
        return self.returns / np.sqrt(self.h2)


@dataclass(frozen=True)
class CovarianceForecast:
    date: np.datetime64 | None
    H: np.ndarray
    h2: np.ndarray
    q: np.ndarray
    R: np.ndarray


@dataclass
class ForecastSet:
    model_name: str
    dates: np.ndarray
    H: np.ndarray
    asset_names: tuple[str, ...] = ()
    fit: ModelFit | None = field(default=None, repr=False)
    error: str | None = None

    def __len__(self) -> int:
        return 0 if self.H is None else self.H.shape[0]

    @property
    def forecasts(self) -> list[CovarianceForecast]:
        return [CovarianceForecast(d, h, np.diag(h).copy(), None, None)
                for d, h in zip(self.dates, self.H)]

    def write_csv(self, path) -> int:
        """Long form ``date,i,j,h_ij`` over i <= j; returns the row count."""
        n = self.H.shape[1]
        names = self.asset_names or tuple(str(i) for i in range(n))
        rows = 0
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["date", "i", "j", "h_ij"])
            for d, h in zip(self.dates, self.H):
                for i in range(n):
                    for j in range(i, n):
                        w.writerow([str(d), names[i], names[j], repr(float(h[i, j]))])
                        rows += 1
        return rows


def read_forecast_csv(path) -> tuple[np.ndarray, tuple[str, ...], np.ndarray]:
    """Inverse of :meth:`ForecastSet.write_csv`: dates, asset names, H array."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise DataError(f"{path}: no forecasts")
    names: list[str] = []
    for row in rows:
        for key in ("i", "j"):
            if row[key] not in names:
                names.append(row[key])
    dates = sorted({row["date"] for row in rows})
    didx = {d: k for k, d in enumerate(dates)}
    nidx = {n: k for k, n in enumerate(names)}
    H = np.full((len(dates), len(names), len(names)), np.nan)
    for row in rows:
        t, i, j = didx[row["date"]], nidx[row["i"]], nidx[row["j"]]
        H[t, i, j] = H[t, j, i] = float(row["h_ij"])
    if np.isnan(H).any():
        raise DataError(f"{path}: incomplete forecast matrices")
    return to_dates(dates), tuple(names), H


def initial_state(fit: ModelFit, returns: np.ndarray) -> ForecastState:
    """State at the last in-sample date of ``fit``."""
    h2 = np.array([g.variance_path[-1] for g in fit.garch_fits])
    return ForecastState(h2, fit.dcc_fit.q_path[-1].copy(), np.asarray(returns[-1], dtype=float))


def forecast_step(
    fit: ModelFit,
    state: ForecastState,
    next_exog: np.ndarray | None = None,
    next_centering: np.ndarray | None = None,
    date=None,
) -> CovarianceForecast:
    """H_{t+1} from the state at t and the regressors observed at t."""
    dcc = fit.dcc_fit
    n = dcc.qbar.shape[0]
    if state.h2.shape != (n,) or state.q.shape != (n, n) or state.returns.shape != (n,):
        raise DataError("forecast state does not match the model dimension")
    k = dcc.spec.k
    x = np.zeros(k) if next_exog is None else np.asarray(next_exog, dtype=float).reshape(k)
    m = dcc.exog_means if next_centering is None else np.asarray(next_centering, dtype=float)

    r = state.returns
    h2 = np.empty(n)
    for i, g in enumerate(fit.garch_fits):
        p = g.params
        h2[i] = p.omega + (p.alpha + p.gamma * (r[i] < 0)) * r[i] ** 2 + p.beta * state.h2[i]

    th = dcc.params
    u = np.sqrt(np.diag(state.q)) * state.residuals
    intercept = 1.0 - th.theta1 - th.theta2 - float(th.theta_x @ m)
    shift = float(th.theta_x @ x)
    add = dcc.qbar if dcc.exog_style == "qbar" else np.ones((n, n))
    q = intercept * dcc.qbar + th.theta1 * np.outer(u, u) + th.theta2 * state.q + shift * add
    d = np.diag(q)
    if not np.all(d > 0):
        raise NotPositiveDefiniteError(-1, "forecast quasi-correlation diagonal")
    sd = np.sqrt(d)
    R = q / np.outer(sd, sd)
    np.fill_diagonal(R, 1.0)
    s = np.sqrt(h2)
    H = R * np.outer(s, s)
    try:
        np.linalg.cholesky(H)
    except np.linalg.LinAlgError:
        raise NotPositiveDefiniteError(-1, "forecast covariance") from None
    return CovarianceForecast(date, H, h2, q, R)


def _forecast_path(fit: ModelFit, design: Design, returns: np.ndarray, dates: np.ndarray,
                   start: int, stop: int) -> tuple[np.ndarray, ForecastState]:
    """Forecasts for rows ``start..stop-1``; the fit must end at row ``start - 1``."""
    state = initial_state(fit, returns[:start])
    out = np.empty((stop - start, returns.shape[1], returns.shape[1]))
    for t in range(start, stop):
        fc = forecast_step(fit, state, design.x[t - 1], design.centering[t], dates[t])
        out[t - start] = fc.H
        state = ForecastState(fc.h2, fc.q, returns[t])
    return out, state


def oos_run(
    dataset: AlignedDataset,
    split_date,
    specs: Sequence[DccSpec],
    options: DccOptions | None = None,
    refit_every: int | None = None,
) -> list[ForecastSet]:
    """Estimate each spec on data up to ``split_date`` and forecast every later date.

    A spec that fails to estimate yields a :class:`ForecastSet` with ``error``
    set and no forecasts; the others proceed.  ``refit_every=k`` re-estimates
    on an expanding window every k hold-out dates.
    """
    opts = options or DccOptions()
    split = to_dates([split_date])[0]
    dates = dataset.date_index
    n_in = int(np.searchsorted(dates, split, side="right"))
    if n_in < 1 or n_in >= dataset.nobs:
        raise DataError(f"split date {split} leaves no in-sample or no hold-out observations")
    returns = dataset.returns.values
    insample = dataset.slice(0, n_in)
    garch_fits = fit_garch_panel(insample, opts.garch, opts.jobs)

    out: list[ForecastSet] = []
    base_fit = None
    for spec in specs:
        name = spec.name
        try:
            full_spec = expand_break_spec(spec, insample.date_index)
            starts = [nested_start(base_fit.dcc_fit, full_spec)] if base_fit is not None else []
            fit = two_step_fit(insample, spec, opts, garch_fits=garch_fits, starts=starts)
            if spec.k == 0 and base_fit is None:
                base_fit = fit
            H = _run_holdout(dataset, spec, fit, opts, n_in, refit_every, returns, dates)
        except CorrxError as exc:
            logger.error("%s: estimation or forecasting failed: %s", name, exc)
            out.append(ForecastSet(name, dates[n_in:n_in], np.empty((0, 0, 0)),
                                   dataset.returns.asset_names, None, str(exc)))
            continue
        out.append(ForecastSet(name, dates[n_in:], H, dataset.returns.asset_names, fit))
    return out


def _run_holdout(dataset, spec, fit, opts, n_in, refit_every, returns, dates):
    design = build_design(spec, dataset, means=fit.dcc_fit.exog_means, standardize=opts.standardize)
    if not refit_every:
        H, _ = _forecast_path(fit, design, returns, dates, n_in, dataset.nobs)
        return H
    chunks = []
    start = n_in
    while start < dataset.nobs:
        stop = min(start + refit_every, dataset.nobs)
        if start > n_in:
            window = dataset.slice(0, start)
            fit = two_step_fit(window, spec, opts)
            design = build_design(spec, dataset, means=fit.dcc_fit.exog_means,
                                  standardize=opts.standardize)
        H, _ = _forecast_path(fit, design, returns, dates, start, stop)
        chunks.append(H)
        start = stop
    return np.concatenate(chunks)


def write_manifest(path, sets: Sequence[ForecastSet], split_date, files: dict[str, str]) -> None:
    manifest = {
        "split": str(to_dates([split_date])[0]),
        "models": [s.model_name for s in sets],
        "rows": {s.model_name: len(s) for s in sets},
        "files": files,
        "failed": {s.model_name: s.error for s in sets if s.error},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
