"""Synthetic GJR-DCC-X panels for estimator validation.

Returns are drawn from N(0, H_t) with H_t = S_t R_t S_t, where S_t holds GJR
conditional standard deviations and R_t follows the DCC-X recursion driven
by simulated (or fixed) exogenous paths.  An optional break shifts the first
regressor's coefficient by ``delta`` from a given index onward, in both the
regressor term and its intercept centring.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from corrx.data import AlignedDataset, ReturnPanel, Series, to_dates
from corrx.dcc import DccParams
from corrx.exceptions import DataError, InvalidParameterError, NotPositiveDefiniteError
from corrx.garch import GjrParams

# Moments of the daily TPU index used to calibrate the default regressor.
TPU_MEAN = 0.1105
TPU_SD = 0.1541


@dataclass(frozen=True)
class ExogModel:
    """``x_t = exp(z_t)`` with ``z`` a Gaussian AR(1) around ``mean``, or a fixed path."""

    kind: str = "lognormal_ar1"
    mean: float = 0.0
    persistence: float = 0.95
    innovation_sd: float = 0.3
    path: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("lognormal_ar1", "fixed"):
            raise DataError(f"unknown exogenous model {self.kind!r}")
        if self.kind == "fixed" and self.path is None:
            raise DataError("a fixed exogenous model needs a path")
        if not 0.0 <= self.persistence < 1.0:
            raise InvalidParameterError("persistence must lie in [0, 1)")
        if self.innovation_sd < 0:
            raise InvalidParameterError("innovation sd must be non-negative")

    @classmethod
    def calibrated(cls, mean: float = TPU_MEAN, sd: float = TPU_SD,
                   persistence: float = 0.95) -> "ExogModel":
        """Lognormal AR(1) whose stationary mean and sd match ``mean`` and ``sd``."""
        var_z = np.log1p((sd / mean) ** 2)
        return cls(
            "lognormal_ar1",
            mean=float(np.log(mean) - 0.5 * var_z),
            persistence=persistence,
            innovation_sd=float(np.sqrt(var_z * (1.0 - persistence**2))),
        )

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "mean": self.mean, "persistence": self.persistence,
             "innovation_sd": self.innovation_sd}
        if self.path is not None:
            d["path"] = list(self.path)
        return d


@dataclass
class SimConfig:
    T: int
    N: int
    gjr: Sequence[GjrParams]
    dcc: DccParams
    qbar: np.ndarray
    regressors: tuple[str, ...] = ()
    exog_model: ExogModel | Sequence[ExogModel] = field(default_factory=ExogModel.calibrated)
    break_index: int | None = None
    break_delta: float = 0.0
    seed: int = 0
    burn_in: int = 500
    exog_style: str = "ones"
    start_date: str = "2000-01-03"
    asset_names: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        self.qbar = np.asarray(self.qbar, dtype=float)
        self.gjr = tuple(g if isinstance(g, GjrParams) else GjrParams(**g) for g in self.gjr)
        if len(self.gjr) != self.N:
            raise DataError(f"{len(self.gjr)} GJR parameter sets for N={self.N}")
        if self.qbar.shape != (self.N, self.N):
            raise DataError("qbar must be N x N")
        if (not np.allclose(self.qbar, self.qbar.T) or not np.allclose(np.diag(self.qbar), 1.0)
                or np.linalg.eigvalsh(self.qbar)[0] <= 0):
            raise DataError("qbar must be a valid correlation matrix")
        k = self.dcc.theta_x.size
        if not self.regressors:
            self.regressors = ("TPU",) if k == 1 else tuple(f"X{i + 1}" for i in range(k))
        self.regressors = tuple(self.regressors)
        if len(self.regressors) != k:
            raise DataError("one regressor name per exogenous coefficient")
        if self.break_index is not None:
            if k == 0:
                raise DataError("a break needs at least one regressor")
            if not 0 < self.break_index < self.T:
                raise DataError("break index must lie inside the sample")
        if self.T < 1 or self.N < 1:
            raise DataError("T and N must be positive")

    @property
    def exog_models(self) -> tuple[ExogModel, ...]:
        k = self.dcc.theta_x.size
        if isinstance(self.exog_model, ExogModel):
            return (self.exog_model,) * k
        models = tuple(self.exog_model)
        if len(models) != k:
            raise DataError("one exogenous model per regressor")
        return models

    @property
    def names(self) -> tuple[str, ...]:
        return self.asset_names or tuple(f"A{i + 1}" for i in range(self.N))

    def to_dict(self) -> dict:
        models = [m.to_dict() for m in self.exog_models]
        return {
            "T": self.T,
            "N": self.N,
            "gjr": [{"omega": g.omega, "alpha": g.alpha, "beta": g.beta, "gamma": g.gamma}
                    for g in self.gjr],
            "dcc": {"theta1": self.dcc.theta1, "theta2": self.dcc.theta2,
                    "theta_x": self.dcc.theta_x.tolist()},
            "qbar": self.qbar.tolist(),
            "regressors": list(self.regressors),
            "exog_model": models,
            "break": None if self.break_index is None else
            {"index": self.break_index, "delta": self.break_delta},
            "seed": self.seed,
            "burn_in": self.burn_in,
            "exog_style": self.exog_style,
            "start_date": self.start_date,
            "asset_names": list(self.names),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        dcc = d["dcc"]
        models = d.get("exog_model")
        if models is None:
            exog_model = ExogModel.calibrated()
        elif isinstance(models, dict):
            exog_model = ExogModel(**{**models, "path": tuple(models["path"]) if models.get("path") else None})
        else:
            exog_model = [ExogModel(**{**m, "path": tuple(m["path"]) if m.get("path") else None})
                          for m in models]
        brk = d.get("break") or {}
        return cls(
            T=int(d["T"]),
            N=int(d["N"]),
            gjr=[GjrParams(**g) for g in d["gjr"]],
            dcc=DccParams(dcc["theta1"], dcc["theta2"], dcc.get("theta_x", [])),
            qbar=np.asarray(d["qbar"], dtype=float),
            regressors=tuple(d.get("regressors", ())),
            exog_model=exog_model,
            break_index=brk.get("index"),
            break_delta=float(brk.get("delta", 0.0)),
            seed=int(d.get("seed", 0)),
            burn_in=int(d.get("burn_in", 500)),
            exog_style=d.get("exog_style", "ones"),
            start_date=d.get("start_date", "2000-01-03"),
            asset_names=tuple(d["asset_names"]) if d.get("asset_names") else None,
        )

    @classmethod
    def from_json(cls, path) -> "SimConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class SimResult:
    returns: ReturnPanel
    exog: tuple[Series, ...]
    variance: np.ndarray
    q_path: np.ndarray
    r_path: np.ndarray

    @property
    def dataset(self) -> AlignedDataset:
        return AlignedDataset(self.returns, self.exog)

    @property
    def residuals(self) -> np.ndarray:
        return self.returns.values / np.sqrt(self.variance)


def business_days(start: str, n: int) -> np.ndarray:
    """``n`` consecutive weekdays starting at (or after) ``start``."""
    first = to_dates([start])[0]
    return np.busday_offset(first, np.arange(n), roll="forward").astype("datetime64[D]")


def _exog_paths(config: SimConfig, rng: np.random.Generator, length: int) -> np.ndarray:
    k = config.dcc.theta_x.size
    out = np.empty((length, k))
    for j, m in enumerate(config.exog_models):
        if m.kind == "fixed":
            path = np.asarray(m.path, dtype=float)
            if path.size != length - config.burn_in and path.size != length:
                raise DataError(f"fixed path has {path.size} values, need {length - config.burn_in}")
            if path.size != length:
                path = np.concatenate([np.full(config.burn_in, path[0]), path])
            out[:, j] = path
            continue
        shocks = rng.standard_normal(length) * m.innovation_sd
        z = np.empty(length)
        sd0 = m.innovation_sd / np.sqrt(1.0 - m.persistence**2)
        z[0] = m.mean + sd0 * rng.standard_normal()
        for t in range(1, length):
            z[t] = m.mean + m.persistence * (z[t - 1] - m.mean) + shocks[t]
        out[:, j] = np.exp(z)
    return out


def simulate_exog(config: SimConfig) -> tuple[Series, ...]:
    """The regressor paths :func:`simulate_panel` uses for the same config."""
    exog_rng, _ = _streams(config.seed)
    x = _exog_paths(config, exog_rng, config.T + config.burn_in)[config.burn_in:]
    dates = business_days(config.start_date, config.T)
    return tuple(Series(name, dates, x[:, j], "continuous")
                 for j, name in enumerate(config.regressors))


def _streams(seed: int):
    ss = np.random.SeedSequence(seed)
    a, b = ss.spawn(2)
    return np.random.default_rng(a), np.random.default_rng(b)


def simulate_panel(config: SimConfig) -> SimResult:
    exog_rng, ret_rng = _streams(config.seed)
    burn, T, N = config.burn_in, config.T, config.N
    length = T + burn
    x = _exog_paths(config, exog_rng, length)
    xbar = x[burn:].mean(axis=0) if x.shape[1] else np.zeros(0)
    theta1, theta2, tx = config.dcc.theta1, config.dcc.theta2, config.dcc.theta_x
    qbar = config.qbar
    add = qbar if config.exog_style == "qbar" else np.ones((N, N))

    brk = np.zeros(length)
    if config.break_index is not None:
        brk[burn + config.break_index:] = config.break_delta

    gjr = np.array([g.as_array() for g in config.gjr])
    h = np.array([g.unconditional_variance for g in config.gjr])
    z = ret_rng.standard_normal((length, N))

    r = np.empty((length, N))
    var = np.empty((length, N))
    q_path = np.empty((length, N, N))
    r_path = np.empty((length, N, N))
    q = qbar.copy()
    eps_prev = np.zeros(N)
    for t in range(length):
        if t > 0:
            rp = r[t - 1]
            h = gjr[:, 0] + (gjr[:, 1] + gjr[:, 3] * (rp < 0)) * rp**2 + gjr[:, 2] * h
            u = np.sqrt(np.diag(q)) * eps_prev
            coef = tx.copy()
            if coef.size:
                coef[0] += brk[t]
            intercept = 1.0 - theta1 - theta2 - (coef @ xbar if coef.size else 0.0)
            if intercept <= 0:
                raise InvalidParameterError(f"non-positive intercept {intercept:.6g} at t={t - burn}")
            shift = coef @ x[t - 1] if coef.size else 0.0
            q = intercept * qbar + theta1 * np.outer(u, u) + theta2 * q + shift * add
        d = np.sqrt(np.diag(q))
        corr = q / np.outer(d, d)
        np.fill_diagonal(corr, 1.0)
        s = np.sqrt(h)
        cov = corr * np.outer(s, s)
        lam, vec = np.linalg.eigh(cov)
        if lam[0] <= 1e-12 * max(lam[-1], 1.0):
            raise NotPositiveDefiniteError(t - burn, "simulated covariance")
        r[t] = vec @ (np.sqrt(lam) * (vec.T @ z[t]))
        var[t] = h
        q_path[t] = q
        r_path[t] = corr
        eps_prev = r[t] / s

    dates = business_days(config.start_date, T)
    returns = ReturnPanel(dates, config.names, r[burn:])
    exog = tuple(Series(name, dates, x[burn:, j], "continuous")
                 for j, name in enumerate(config.regressors))
    return SimResult(returns, exog, var[burn:], q_path[burn:], r_path[burn:])


def default_config(
    T: int = 5000,
    N: int = 3,
    theta: tuple[float, ...] = (0.05, 0.93, 0.025),
    seed: int = 0,
    **kwargs,
) -> SimConfig:
    """A TPU-calibrated three-asset design used by the validation studies."""
    base = np.array([[1.0, 0.5, -0.1], [0.5, 1.0, -0.05], [-0.1, -0.05, 1.0]])
    if N <= 3:
        qbar = base[:N, :N]
    else:
        qbar = np.full((N, N), 0.3)
        np.fill_diagonal(qbar, 1.0)
    gjr = [GjrParams(0.05, 0.05, 0.85, 0.15)] * N
    dcc = DccParams(theta[0], theta[1], np.array(theta[2:]))
    return SimConfig(T=T, N=N, gjr=gjr, dcc=dcc, qbar=qbar, seed=seed, **kwargs)
