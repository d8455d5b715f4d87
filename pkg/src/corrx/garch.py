"""Univariate GJR-GARCH(1,1) filtering and quasi-maximum-likelihood estimation.

The conditional variance is

    h2[t] = omega + alpha * r[t-1]**2 + beta * h2[t-1] + gamma * r[t-1]**2 * (r[t-1] < 0)

with ``h2[0] = h0`` (sample variance by default).  Estimation maximises the
Gaussian log-likelihood over an unconstrained reparameterisation that keeps
omega > 0, alpha, beta, gamma >= 0 and alpha + beta + gamma / 2 < 1.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from corrx import kernels
from corrx.exceptions import DataError, EstimationError, InvalidParameterError
from corrx.robust import central_gradient, sandwich_covariance, standard_errors

logger = logging.getLogger(__name__)

VARIANCE_FLOOR = 1e-12
PARAM_NAMES = ("omega", "alpha", "beta", "gamma")


@dataclass(frozen=True)
class GjrParams:
    omega: float
    alpha: float
    beta: float
    gamma: float

    def __post_init__(self) -> None:
        vals = self.as_array()
        if not np.all(np.isfinite(vals)):
            raise InvalidParameterError(f"non-finite GJR parameters {vals}")
        if self.omega <= 0 or self.alpha < 0 or self.beta < 0 or self.gamma < 0:
            raise InvalidParameterError(
                f"GJR parameters violate positivity: {dict(zip(PARAM_NAMES, vals))}"
            )
        if self.persistence >= 1:
            raise InvalidParameterError(
                f"alpha + beta + gamma/2 = {self.persistence:.6g} must be < 1"
            )

    @property
    def persistence(self) -> float:
        return self.alpha + self.beta + 0.5 * self.gamma

    @property
    def unconditional_variance(self) -> float:
        return self.omega / (1.0 - self.persistence)

    def as_array(self) -> np.ndarray:
        return np.array([self.omega, self.alpha, self.beta, self.gamma], dtype=float)

    @classmethod
    def from_array(cls, values) -> "GjrParams":
        return cls(*(float(v) for v in values))


@dataclass(frozen=True)
class GarchFit:
    params: GjrParams
    se_robust: np.ndarray
    variance_path: np.ndarray
    residuals: np.ndarray
    loglik: float
    converged: bool
    iterations: int
    h0: float
    asset: str = ""
    floor_active: bool = False

    @property
    def nobs(self) -> int:
        return self.residuals.size

    def to_dict(self) -> dict:
        p = self.params
        return {
            "asset": self.asset,
            "omega": float(f"{p.omega:.12g}"),
            "alpha": float(f"{p.alpha:.12g}"),
            "beta": float(f"{p.beta:.12g}"),
            "gamma": float(f"{p.gamma:.12g}"),
            "se": [None if not np.isfinite(s) else float(f"{s:.12g}") for s in self.se_robust],
            "loglik": float(f"{self.loglik:.12g}"),
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
            "h0": float(f"{self.h0:.12g}"),
        }


@dataclass
class GarchOptions:
    """Settings for :func:`fit_gjr`.

    ``h0=None`` initialises the recursion at the sample variance of the input.
    ``starts`` overrides the deterministic multi-start triples (alpha, beta, gamma).
    """

    min_obs: int = 50
    h0: float | None = None
    demean: bool = False
    maxiter: int = 500
    gtol: float = 1e-7
    starts: tuple[tuple[float, float, float], ...] = (
        (0.05, 0.85, 0.10),
        (0.10, 0.80, 0.05),
        (0.03, 0.92, 0.06),
    )
    strict: bool = True
    compute_se: bool = True
    extra: dict = field(default_factory=dict)


def _check_returns(returns) -> np.ndarray:
    r = np.ascontiguousarray(np.asarray(getattr(returns, "values", returns), dtype=float))
    if r.ndim != 1:
        raise DataError("returns must be one-dimensional")
    if not np.all(np.isfinite(r)):
        raise DataError("returns contain non-finite values")
    return r


def gjr_filter(params: GjrParams, returns, h0: float) -> np.ndarray:
    """Conditional variance path; ``h2[0] = h0``."""
    r = _check_returns(returns)
    if not h0 > 0:
        raise InvalidParameterError("h0 must be positive")
    return kernels.gjr_variance(params.as_array(), r, float(h0))


def gjr_loglik(params: GjrParams, returns, h0: float) -> float:
    r = _check_returns(returns)
    if not h0 > 0:
        raise InvalidParameterError("h0 must be positive")
    return float(np.sum(kernels.gjr_loglik_terms(params.as_array(), r, float(h0), VARIANCE_FLOOR)))


def degarch(returns, fit: GarchFit) -> np.ndarray:
    """Returns divided by the fitted conditional standard deviation."""
    r = np.asarray(getattr(returns, "values", returns), dtype=float)
    if r.shape != fit.variance_path.shape:
        raise DataError("returns and fitted variance path differ in length")
    return r / np.sqrt(fit.variance_path)


# -- reparameterisation ------------------------------------------------------------


def _to_unconstrained(p: np.ndarray) -> np.ndarray:
    omega, alpha, beta, gamma = p
    shares = np.array([alpha, beta, gamma / 2.0])
    shares = np.maximum(shares, 1e-8)
    slack = max(1.0 - shares.sum(), 1e-8)
    return np.concatenate([[np.log(omega)], np.log(shares / slack)])


def _from_unconstrained(z: np.ndarray) -> np.ndarray:
    logits = np.clip(z[1:], -50.0, 50.0)
    m = max(logits.max(), 0.0)
    e = np.exp(logits - m)
    shares = e / (np.exp(-m) + e.sum())
    return np.array([np.exp(np.clip(z[0], -700.0, 700.0)), shares[0], shares[1], 2.0 * shares[2]])


def fit_gjr(returns, options: GarchOptions | None = None, asset: str = "") -> GarchFit:
    """Quasi-maximum-likelihood GJR-GARCH(1,1) fit with White robust standard errors."""
    opts = options or GarchOptions()
    r = _check_returns(returns)
    if r.size < opts.min_obs:
        raise DataError(f"{asset or 'series'}: {r.size} observations, need >= {opts.min_obs}")
    if opts.demean:
        r = r - r.mean()
    var = float(np.var(r))
    if var <= 0:
        raise DataError(f"{asset or 'series'}: zero sample variance")
    h0 = float(opts.h0) if opts.h0 is not None else var
    nobs = r.size

    def objective(z: np.ndarray) -> float:
        p = _from_unconstrained(z)
        val = -np.mean(kernels.gjr_loglik_terms(p, r, h0, VARIANCE_FLOOR))
        return float(val) if np.isfinite(val) else 1e10

    def gradient(z: np.ndarray) -> np.ndarray:
        return central_gradient(objective, z, np.full(z.size, 1e-6))

    candidates = []
    for alpha, beta, gamma in opts.starts:
        omega = var * max(1.0 - alpha - beta - gamma / 2.0, 1e-3)
        z0 = _to_unconstrained(np.array([omega, alpha, beta, gamma]))
        res = minimize(
            objective,
            z0,
            jac=gradient,
            method="L-BFGS-B",
            options={"maxiter": opts.maxiter, "gtol": opts.gtol, "ftol": 1e-13},
        )
        candidates.append(res)

    best = _select(candidates)
    if not best.success:
        logger.info("%s: retrying GJR fit from best candidate with Nelder-Mead", asset)
        nm = minimize(objective, best.x, method="Nelder-Mead",
                      options={"maxiter": 4000, "xatol": 1e-9, "fatol": 1e-13})
        polish = minimize(objective, nm.x, jac=gradient, method="L-BFGS-B",
                          options={"maxiter": opts.maxiter, "gtol": opts.gtol, "ftol": 1e-13})
        polish.nit = int(best.nit) + int(nm.nit) + int(polish.nit)
        best = _select([best, polish])
    if not np.isfinite(best.fun) or best.fun >= 1e10:
        raise EstimationError(f"{asset or 'series'}: GJR likelihood not finite at any start")
    if not best.success and opts.strict:
        raise EstimationError(f"{asset or 'series'}: GJR optimiser did not converge ({best.message})")

    theta = _from_unconstrained(best.x)
    params = GjrParams.from_array(theta)
    path = kernels.gjr_variance(theta, r, h0)
    loglik = float(np.sum(kernels.gjr_loglik_terms(theta, r, h0, VARIANCE_FLOOR)))

    se = np.full(4, np.nan)
    if opts.compute_se:
        def terms(p: np.ndarray) -> np.ndarray:
            return kernels.gjr_loglik_terms(p, r, h0, VARIANCE_FLOOR)

        se = standard_errors(sandwich_covariance(terms, theta))

    floor_active = bool(path.min() < VARIANCE_FLOOR)
    if floor_active:
        logger.warning("%s: variance floor active at the optimum", asset)
    return GarchFit(
        params=params,
        se_robust=se,
        variance_path=path,
        residuals=r / np.sqrt(np.maximum(path, VARIANCE_FLOOR)),
        loglik=loglik,
        converged=bool(best.success),
        iterations=int(best.nit),
        h0=h0,
        asset=asset,
        floor_active=floor_active,
    )


def _select(results):
    """Highest likelihood wins; exact ties go to the smallest parameter norm."""
    def key(res):
        return (res.fun, float(np.linalg.norm(_from_unconstrained(res.x))))

    finite = [res for res in results if np.isfinite(res.fun)]
    return min(finite or results, key=key)
