"""Impulse responses of a conditional correlation to a one-period regressor shock.

Two deterministic recursions are run from the model's fixed point: a
baseline with every regressor at its mean and a shocked path where the
chosen regressor is raised by ``shock`` for one period.  The news term is
replaced by its conditional expectation, E[Qd e e' Qd | Q_{h-1}] = Q_{h-1},
so the Q-space response decays at exactly theta1 + theta2 and the baseline
stays at the fixed point.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from corrx.dcc import DccFit, ModelFit
from corrx.exceptions import NotPositiveDefiniteError, SpecError


@dataclass(frozen=True)
class IrfResult:
    horizons: np.ndarray
    delta_rho: np.ndarray
    delta_q: np.ndarray
    shock_size: float
    pair: tuple[str, str]
    regressor: str
    baseline_rho: float
    normalized_sensitivity: float | None
    method: str = "deterministic"

    @property
    def peak(self) -> float:
        return float(self.delta_rho[np.argmax(np.abs(self.delta_rho))])

    @property
    def peak_horizon(self) -> int:
        return int(self.horizons[np.argmax(np.abs(self.delta_rho))])

    @property
    def half_life(self) -> int | None:
        """Horizons from the peak until the response is at most half the peak."""
        a = np.abs(self.delta_rho)
        k = int(np.argmax(a))
        if a[k] == 0:
            return None
        below = np.nonzero(a[k:] <= 0.5 * a[k])[0]
        return int(below[0]) if below.size else None

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["horizon", "delta_rho_pp"])
            for h, v in zip(self.horizons, self.delta_rho):
                w.writerow([int(h), repr(float(v))])

    def to_dict(self) -> dict:
        ns = self.normalized_sensitivity
        return {
            "pair": list(self.pair),
            "regressor": self.regressor,
            "shock": float(f"{self.shock_size:.12g}"),
            "peak": float(f"{self.peak:.12g}"),
            "peak_horizon": self.peak_horizon,
            "half_life_days": self.half_life,
            "normalized_sensitivity": None if ns is None else float(f"{ns:.12g}"),
            "baseline_rho": float(f"{self.baseline_rho:.12g}"),
            "method": self.method,
        }

    def write_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _rho(q: np.ndarray, i: int, j: int) -> np.ndarray:
    return q[..., i, j] / np.sqrt(q[..., i, i] * q[..., j, j])


def impulse_response(
    fit: DccFit | ModelFit,
    regressor: str,
    pair: tuple[int | str, int | str] = (0, 1),
    horizon: int = 100,
    shock: float | None = None,
    stochastic: bool = False,
    n_paths: int = 2000,
    seed: int = 0,
    asset_names=None,
) -> IrfResult:
    """Response of correlation ``pair`` to a one-period shock in ``regressor``.

    ``delta_rho`` is in percentage points and ``delta_q`` is the Q-space
    response of the same entry.  ``shock`` defaults to the sample standard
    deviation of the regressor.  ``stochastic=True`` averages twin paths
    driven by common simulated residuals instead of the expected news term.
    """
    if isinstance(fit, ModelFit):
        asset_names = asset_names or fit.asset_names
        fit = fit.dcc_fit
    spec = fit.spec
    if regressor not in spec.regressors:
        raise SpecError(f"regressor {regressor!r} not in {spec.name}")
    n = fit.qbar.shape[0]
    names = tuple(asset_names) if asset_names else tuple(str(i) for i in range(n))
    i, j = (names.index(p) if isinstance(p, str) else int(p) for p in pair)
    if i == j or not (0 <= i < n and 0 <= j < n):
        raise SpecError(f"pair {pair} must name two different assets")
    if horizon < 1:
        raise SpecError("horizon must be positive")

    k = spec.regressors.index(regressor)
    th = fit.params
    tx = th.theta_x
    means = fit.exog_means
    if shock is None:
        if fit.design is None:
            raise SpecError("shock size needed when the fit carries no design")
        shock = float(np.std(fit.design.x[:, k], ddof=1))
    persist = th.theta1 + th.theta2
    add = fit.qbar if fit.exog_style == "qbar" else np.ones((n, n))
    intercept = (1.0 - persist - float(tx @ means)) * fit.qbar
    xbar_term = float(tx @ means) * add
    q_star = (intercept + xbar_term) / (1.0 - persist)

    impulse = tx[k] * shock * add
    if stochastic:
        base, shocked = _stochastic(fit, q_star, intercept + xbar_term, impulse, horizon,
                                    n_paths, seed)
        delta_q = shocked[..., i, j] - base[..., i, j]
    else:
        # the deviation obeys its own linear recursion; carrying it separately
        # keeps the Q-space response free of cancellation error
        base = np.empty((horizon + 1, n, n))
        dev = np.zeros_like(base)
        base[0] = q_star
        for h in range(1, horizon + 1):
            base[h] = intercept + xbar_term + persist * base[h - 1]
            dev[h] = impulse if h == 1 else persist * dev[h - 1]
        shocked = base + dev
        delta_q = dev[..., i, j]
    for path in (base, shocked):
        if not np.all(np.linalg.eigvalsh(path)[..., 0] > 0):
            raise NotPositiveDefiniteError(-1, "impulse-response path")
    delta_rho = 100.0 * (_rho(shocked, i, j) - _rho(base, i, j))
    peak = float(delta_rho[np.argmax(np.abs(delta_rho))])
    sens = peak / shock if shock != 0 else None
    return IrfResult(
        horizons=np.arange(horizon + 1),
        delta_rho=delta_rho,
        delta_q=delta_q,
        shock_size=float(shock),
        pair=(names[i], names[j]),
        regressor=regressor,
        baseline_rho=float(_rho(q_star, i, j)),
        normalized_sensitivity=sens,
        method="stochastic" if stochastic else "deterministic",
    )


def _stochastic(fit, q_star, const, impulse, horizon, n_paths, seed):
    """Mean Q paths over simulated residuals shared by both twins."""
    th = fit.params
    rng = np.random.default_rng(seed)
    n = q_star.shape[0]
    base = np.empty((horizon + 1, n, n))
    shocked = np.empty_like(base)
    base[0] = shocked[0] = q_star
    qb = np.broadcast_to(q_star, (n_paths, n, n)).copy()
    qs = qb.copy()
    for h in range(1, horizon + 1):
        z = rng.standard_normal((n_paths, n))
        nb = _news(qb, z)
        ns = _news(qs, z)
        qb = const + th.theta1 * nb + th.theta2 * qb
        qs = const + th.theta1 * ns + th.theta2 * qs + (impulse if h == 1 else 0.0)
        base[h] = qb.mean(axis=0)
        shocked[h] = qs.mean(axis=0)
    return base, shocked


def _news(q, z):
    d = np.sqrt(np.diagonal(q, axis1=1, axis2=2))
    r = q / (d[:, :, None] * d[:, None, :])
    try:
        L = np.linalg.cholesky(r)
    except np.linalg.LinAlgError:
        raise NotPositiveDefiniteError(-1, "stochastic impulse-response path") from None
    u = d * np.einsum("pij,pj->pi", L, z)
    return u[:, :, None] * u[:, None, :]
