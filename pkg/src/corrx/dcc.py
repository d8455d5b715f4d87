"""Second-step correlation models: DCC and DCC-X with exogenous regressors.

The quasi-correlation recursion is

    Q_t = (1 - theta1 - theta2 - sum_k theta_k * m_k) Qbar
          + theta1 * Qd_{t-1} e_{t-1} e_{t-1}' Qd_{t-1}
          + theta2 * Q_{t-1}
          + sum_k theta_k * x_{k,t-1} * J

with ``Qd = diag(Q)**0.5``, ``J`` the all-ones matrix and ``m_k`` the sample
mean of regressor ``k``.  ``exog_style="qbar"`` replaces ``J`` by ``Qbar``.
A structural break in the coefficient of one regressor is realised as an
extra regressor ``D_t * x_{t-1}`` whose intercept centring is ``D_t * m``,
so ``(theta + delta * D_t)`` multiplies both the regressor and its mean.

Qbar is estimated from the sample correlation of the de-GARCHed residuals.
With ``targeting="sample"`` it is used as is.  With the default
``targeting="consistent"`` and additive regressors, the intercept matrix is
solved so that the model's unconditional Q equals the sample correlation;
otherwise a regressor with non-zero mean shifts the unconditional
correlation and biases the exogenous coefficients.  Without regressors the
two coincide.
"""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy import stats
from scipy.optimize import minimize

from corrx import kernels
from corrx.data import AlignedDataset, to_dates
from corrx.exceptions import (
    CorrxError,
    DataError,
    EstimationError,
    InvalidParameterError,
    NotPositiveDefiniteError,
    SpecError,
)
from corrx.garch import GarchFit, GarchOptions, degarch, fit_gjr
from corrx.robust import central_gradient, sandwich_covariance, standard_errors

logger = logging.getLogger(__name__)

EXOG_STYLES = ("ones", "qbar")
TARGETING = ("consistent", "sample")
PENALTY = 1e6


@dataclass(frozen=True)
class BreakTerm:
    """Regressor ``D_t * target_{t-1}`` with ``D_t = 1`` from ``date`` onward."""

    name: str
    target: str
    date: np.datetime64


@dataclass(frozen=True)
class DccSpec:
    regressors: tuple[str, ...] = ()
    break_date: object = None
    break_target: str | None = None
    break_terms: tuple[BreakTerm, ...] = ()
    label: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "regressors", tuple(self.regressors))
        object.__setattr__(self, "break_terms", tuple(self.break_terms))
        if self.break_date is not None:
            object.__setattr__(self, "break_date", to_dates([self.break_date])[0])
            target = self.break_target or (self.regressors[0] if self.regressors else None)
            if target is None or target not in self.regressors:
                raise SpecError("a break needs a target regressor that is part of the specification")
            object.__setattr__(self, "break_target", target)
        if len(set(self.regressors)) != len(self.regressors):
            raise SpecError(f"duplicate regressors in {self.regressors}")

    @property
    def k(self) -> int:
        return len(self.regressors)

    @property
    def name(self) -> str:
        if self.label:
            return self.label
        if not self.regressors:
            return "DCC"
        return "DCC-X_" + "+".join(self.regressors)

    @property
    def data_columns(self) -> tuple[str, ...]:
        """Dataset columns this specification reads (break terms derive from their target)."""
        derived = {b.name for b in self.break_terms}
        return tuple(r for r in self.regressors if r not in derived)

    def to_dict(self) -> dict:
        brk = None
        if self.break_terms:
            brk = [{"name": b.name, "target": b.target, "date": str(b.date)} for b in self.break_terms]
        elif self.break_date is not None:
            brk = [{"target": self.break_target, "date": str(self.break_date)}]
        return {"name": self.name, "regressors": list(self.regressors), "break": brk}


@dataclass(frozen=True)
class DccParams:
    theta1: float
    theta2: float
    theta_x: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self) -> None:
        object.__setattr__(self, "theta_x", np.atleast_1d(np.asarray(self.theta_x, dtype=float)))
        vals = self.as_array()
        if not np.all(np.isfinite(vals)):
            raise InvalidParameterError(f"non-finite DCC parameters {vals}")
        if self.theta1 < 0 or self.theta2 < 0 or self.theta1 + self.theta2 >= 1:
            raise InvalidParameterError(
                f"need theta1, theta2 >= 0 and theta1 + theta2 < 1, got {self.theta1}, {self.theta2}"
            )

    def as_array(self) -> np.ndarray:
        return np.concatenate([[self.theta1, self.theta2], self.theta_x])

    @classmethod
    def from_array(cls, values) -> "DccParams":
        v = np.asarray(values, dtype=float)
        return cls(float(v[0]), float(v[1]), v[2:].copy())


@dataclass(frozen=True)
class Design:
    """Regressor matrix and intercept centring aligned to the recursion.

    Row ``t`` of ``x`` enters ``Q_{t+1}``; row ``t`` of ``centering`` enters the
    intercept of ``Q_t``.  ``means`` holds the constant centring values.
    """

    names: tuple[str, ...]
    x: np.ndarray
    centering: np.ndarray
    means: np.ndarray

    @property
    def k(self) -> int:
        return len(self.names)

    def slice(self, start: int, stop: int) -> "Design":
        return Design(self.names, self.x[start:stop], self.centering[start:stop], self.means)

    @classmethod
    def constant(cls, x: np.ndarray, names: Sequence[str] | None = None,
                 means: np.ndarray | None = None) -> "Design":
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        means = x.mean(axis=0) if means is None else np.asarray(means, dtype=float)
        names = tuple(names) if names is not None else tuple(f"x{i + 1}" for i in range(x.shape[1]))
        return cls(names, x, np.broadcast_to(means, x.shape).copy(), means)


@dataclass(frozen=True)
class FilterResult:
    q_path: np.ndarray
    r_path: np.ndarray
    loglik_terms: np.ndarray

    @property
    def loglik(self) -> float:
        return float(np.sum(self.loglik_terms))


@dataclass(frozen=True)
class DccFit:
    spec: DccSpec
    params: DccParams
    se_robust: np.ndarray
    qbar: np.ndarray
    q_path: np.ndarray
    r_path: np.ndarray
    exog_means: np.ndarray
    loglik: float
    aic: float
    bic: float
    nobs: int
    converged: bool = True
    iterations: int = 0
    exog_style: str = "ones"
    fingerprint: str = ""
    design: Design | None = None
    sample_corr: np.ndarray | None = None
    targeting: str = "sample"

    @property
    def n_params(self) -> int:
        return 2 + self.spec.k

    @property
    def param_names(self) -> list[str]:
        return ["theta1", "theta2", *self.spec.regressors]

    def to_dict(self) -> dict:
        names = self.spec.regressors
        se = [None if not np.isfinite(s) else float(f"{s:.12g}") for s in self.se_robust]
        return {
            "spec": self.spec.to_dict(),
            "theta1": float(f"{self.params.theta1:.12g}"),
            "theta2": float(f"{self.params.theta2:.12g}"),
            "theta_x": {n: float(f"{v:.12g}") for n, v in zip(names, self.params.theta_x)},
            "se": dict(zip(self.param_names, se)),
            "loglik": float(f"{self.loglik:.12g}"),
            "aic": float(f"{self.aic:.12g}"),
            "bic": float(f"{self.bic:.12g}"),
            "nobs": int(self.nobs),
            "converged": bool(self.converged),
            "exog_style": self.exog_style,
            "targeting": self.targeting,
            "qbar": [[float(f"{v:.12g}") for v in row] for row in self.qbar],
            "exog_means": {n: float(f"{v:.12g}") for n, v in zip(names, self.exog_means)},
        }


@dataclass(frozen=True)
class ModelFit:
    garch_fits: tuple[GarchFit, ...]
    dcc_fit: DccFit
    fingerprint: str
    asset_names: tuple[str, ...]
    dates: np.ndarray

    def __post_init__(self) -> None:
        if len(self.garch_fits) != self.dcc_fit.qbar.shape[0]:
            raise DataError("number of GARCH fits does not match the correlation dimension")

    @property
    def residuals(self) -> np.ndarray:
        return np.column_stack([g.residuals for g in self.garch_fits])

    def covariance_path(self) -> np.ndarray:
        s = np.sqrt(np.column_stack([g.variance_path for g in self.garch_fits]))
        return self.dcc_fit.r_path * s[:, :, None] * s[:, None, :]


@dataclass(frozen=True)
class LrResult:
    stat: float
    df: int
    pvalue: float


@dataclass
class DccOptions:
    exog_style: str = "ones"
    targeting: str = "consistent"
    standardize: bool = False
    maxiter: int = 500
    gtol: float = 1e-7
    start: tuple[float, float] = (0.05, 0.90)
    perturbations: tuple[tuple[float, float], ...] = ((0.02, 0.95), (0.10, 0.80))
    strict: bool = True
    compute_se: bool = True
    garch: GarchOptions = field(default_factory=GarchOptions)
    jobs: int = 1

    def __post_init__(self) -> None:
        if self.exog_style not in EXOG_STYLES:
            raise SpecError(f"exog_style must be one of {EXOG_STYLES}")
        if self.targeting not in TARGETING:
            raise SpecError(f"targeting must be one of {TARGETING}")


# -- spec handling -------------------------------------------------------------------


def break_term_name(target: str, date) -> str:
    d = str(to_dates([date])[0]).replace("-", "")
    return f"{target}_post{d}"


def expand_break_spec(spec: DccSpec, dates) -> DccSpec:
    """Rewrite a raw break date as an extra regressor whose coefficient is the shift."""
    if spec.break_date is None:
        return spec
    dates = to_dates(dates)
    if dates.size == 0 or not (dates[0] < spec.break_date <= dates[-1]):
        raise SpecError(
            f"break date {spec.break_date} outside the sample span "
            f"({dates[0] if dates.size else '-'} .. {dates[-1] if dates.size else '-'})"
        )
    term = BreakTerm(break_term_name(spec.break_target, spec.break_date),
                     spec.break_target, spec.break_date)
    return DccSpec(
        regressors=(*spec.regressors, term.name),
        break_terms=(*spec.break_terms, term),
        label=spec.label,
    )


def build_design(
    spec: DccSpec,
    dataset: AlignedDataset,
    means: np.ndarray | None = None,
    standardize: bool = False,
    scales: np.ndarray | None = None,
) -> Design:
    """Regressor and centring matrices for ``spec`` on ``dataset``.

    ``means`` fixes the centring values (e.g. in-sample means when filtering
    through a hold-out period); by default they are the sample means.
    """
    spec = expand_break_spec(spec, dataset.date_index)
    dates = dataset.date_index
    nobs = dataset.nobs
    terms = {b.name: b for b in spec.break_terms}
    for name in spec.data_columns:
        if name not in dataset.exog_names:
            raise SpecError(f"regressor {name!r} not found; available: {list(dataset.exog_names)}")
    base = {}
    for name in spec.regressors:
        src = terms[name].target if name in terms else name
        if src not in dataset.exog_names:
            raise SpecError(f"regressor {src!r} not found; available: {list(dataset.exog_names)}")
        base[name] = dataset.exog_series(src).values.astype(float)
    if standardize:
        if scales is None:
            scales = np.array([np.std(base[terms[n].target if n in terms else n]) or 1.0
                               for n in spec.regressors])
        for n, s in zip(spec.regressors, scales):
            base[n] = base[n] / s

    k = spec.k
    x = np.empty((nobs, k))
    centering = np.empty((nobs, k))
    mean_vals = np.empty(k)
    for j, name in enumerate(spec.regressors):
        raw = base[name]
        if name in terms:
            brk = terms[name]
            # D_t for the Q_t that row t-1 of x feeds; the row after the last
            # date is treated as post-break.
            d_now = (dates >= brk.date).astype(float)
            d_next = np.append(d_now[1:], 1.0)
            m = raw.mean() if means is None else float(means[j])
            x[:, j] = d_next * raw
            centering[:, j] = d_now * m
            mean_vals[j] = m
        else:
            m = raw.mean() if means is None else float(means[j])
            x[:, j] = raw
            centering[:, j] = m
            mean_vals[j] = m
    return Design(spec.regressors, x, centering, mean_vals)


# -- filtering ------------------------------------------------------------------------


def _drivers(theta: np.ndarray, design_x: np.ndarray, centering: np.ndarray):
    nobs = design_x.shape[0]
    tx = theta[2:]
    intercept = 1.0 - theta[0] - theta[1] - (centering @ tx if tx.size else np.zeros(nobs))
    shift = np.zeros(nobs)
    if tx.size and nobs > 1:
        shift[1:] = design_x[:-1] @ tx
    return np.ascontiguousarray(intercept), shift


def _as_design(exog, exog_means, nobs: int) -> Design:
    if isinstance(exog, Design):
        return exog
    if exog is None:
        return Design((), np.empty((nobs, 0)), np.empty((nobs, 0)), np.empty(0))
    x = np.asarray(exog, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[1] == 0:
        return Design((), np.empty((nobs, 0)), np.empty((nobs, 0)), np.empty(0))
    return Design.constant(x, means=exog_means)


def target_matrix(theta: np.ndarray, sample_corr: np.ndarray, design: Design) -> np.ndarray:
    """Intercept matrix whose implied unconditional Q equals ``sample_corr``.

    With the exogenous term added to every entry, E[Q] = Qbar + m (J - Qbar) / (1 - theta1 - theta2)
    where m = sum_k theta_k mean_k, so the intercept matrix is solved for from
    the sample correlation.  The diagonal stays at one.
    """
    tx = theta[2:]
    if tx.size == 0:
        return sample_corr
    m = float(design.centering.mean(axis=0) @ tx)
    if m == 0.0:
        return sample_corr
    persist = 1.0 - theta[0] - theta[1]
    denom = persist - m
    if not denom > 0.0:
        raise InvalidParameterError("intercept 1 - theta1 - theta2 - sum(theta_k * mean_k) must be positive")
    out = (persist * sample_corr - m) / denom
    np.fill_diagonal(out, 1.0)
    try:
        np.linalg.cholesky(out)
    except np.linalg.LinAlgError:
        raise NotPositiveDefiniteError(0, "implied intercept matrix") from None
    return out


def _run(theta, eps, design: Design, qbar, exog_style, keep_paths, targeting="sample"):
    intercept, shift = _drivers(theta, design.x, design.centering)
    if intercept.size > 1 and not np.all(intercept[1:] > 0.0):
        raise InvalidParameterError(
            "intercept 1 - theta1 - theta2 - sum(theta_k * mean_k) must be positive"
        )
    if targeting == "consistent" and exog_style == "ones":
        qbar = target_matrix(theta, qbar, design)
    return kernels.dcc_recursion(
        float(theta[0]), float(theta[1]), intercept, shift, eps, qbar,
        exog_style == "qbar", keep_paths,
    )


def _check_inputs(residuals, qbar):
    eps = np.ascontiguousarray(np.asarray(residuals, dtype=float))
    if eps.ndim == 1:
        eps = eps[:, None]
    qbar = np.ascontiguousarray(np.asarray(qbar, dtype=float))
    n = eps.shape[1]
    if qbar.shape != (n, n):
        raise DataError(f"Qbar must be {n} x {n}")
    if not np.all(np.isfinite(eps)):
        raise DataError("residuals contain non-finite values")
    if not np.allclose(qbar, qbar.T, atol=1e-12) or not np.allclose(np.diag(qbar), 1.0, atol=1e-12):
        raise DataError("Qbar must be a symmetric matrix with unit diagonal")
    if np.linalg.eigvalsh(qbar)[0] <= 0:
        raise DataError("Qbar must be positive definite")
    return eps, qbar


def dcc_filter(
    params: DccParams,
    residuals,
    exog=None,
    qbar=None,
    exog_means=None,
    exog_style: str = "ones",
) -> FilterResult:
    """Filter Q_t and R_t.  ``exog`` is a T x K array (or a :class:`Design`)."""
    eps, qbar = _check_inputs(residuals, qbar if qbar is not None else np.corrcoef(residuals, rowvar=False))
    design = _as_design(exog, exog_means, eps.shape[0])
    if design.k != params.theta_x.size:
        raise SpecError(f"{params.theta_x.size} exogenous coefficients for {design.k} regressors")
    theta = params.as_array()
    try:
        ll, q, r = _run(theta, eps, design, qbar, exog_style, True)
    except NotPositiveDefiniteError as exc:
        raise NotPositiveDefiniteError(exc.t, f"{exc.detail}; params={theta.tolist()}") from None
    return FilterResult(q, r, ll)


def dcc_loglik(params: DccParams, residuals, exog=None, qbar=None, exog_means=None,
               exog_style: str = "ones") -> float:
    eps, qbar = _check_inputs(residuals, qbar if qbar is not None else np.corrcoef(residuals, rowvar=False))
    design = _as_design(exog, exog_means, eps.shape[0])
    theta = params.as_array()
    try:
        ll, _, _ = _run(theta, eps, design, qbar, exog_style, False)
    except NotPositiveDefiniteError as exc:
        raise NotPositiveDefiniteError(exc.t, f"{exc.detail}; params={theta.tolist()}") from None
    return float(np.sum(ll))


# -- estimation -----------------------------------------------------------------------


def _to_unconstrained(theta: np.ndarray) -> np.ndarray:
    t1, t2 = max(theta[0], 1e-8), max(theta[1], 1e-8)
    slack = max(1.0 - t1 - t2, 1e-8)
    return np.concatenate([[np.log(t1 / slack), np.log(t2 / slack)], theta[2:]])


def _from_unconstrained(z: np.ndarray) -> np.ndarray:
    logits = np.clip(z[:2], -50.0, 50.0)
    m = max(logits.max(), 0.0)
    e = np.exp(logits - m)
    shares = e / (np.exp(-m) + e.sum())
    return np.concatenate([shares, z[2:]])


def fit_dcc(
    residuals,
    exog=None,
    spec: DccSpec | None = None,
    options: DccOptions | None = None,
    qbar: np.ndarray | None = None,
    starts: Sequence[np.ndarray] = (),
    fingerprint: str = "",
) -> DccFit:
    """Maximise the second-step likelihood over (theta1, theta2, theta_x).

    ``starts`` adds warm starts (full parameter vectors) to the default
    multi-start set; each is also kept as a candidate, so a fit seeded from a
    nested model's optimum never reports a lower likelihood than that model.
    """
    opts = options or DccOptions()
    eps = np.asarray(residuals, dtype=float)
    qbar = np.corrcoef(eps, rowvar=False) if qbar is None else qbar
    qbar = np.atleast_2d(qbar)
    if eps.ndim == 1 or eps.shape[1] == 1:
        qbar = np.ones((1, 1))
    eps, qbar = _check_inputs(eps, qbar)
    nobs = eps.shape[0]
    design = _as_design(exog, None, nobs)
    if spec is None:
        spec = DccSpec(tuple(design.names))
    if spec.break_date is not None:
        raise SpecError("expand the break date before estimation (expand_break_spec)")
    if design.k != spec.k:
        raise SpecError(f"spec has {spec.k} regressors, design has {design.k}")
    k = design.k

    def neg_mean_ll(theta: np.ndarray) -> float:
        try:
            ll, _, _ = _run(theta, eps, design, qbar, opts.exog_style, False, opts.targeting)
        except (InvalidParameterError, NotPositiveDefiniteError):
            return PENALTY
        val = -float(np.mean(ll))
        return val if np.isfinite(val) else PENALTY

    def objective(z: np.ndarray) -> float:
        return neg_mean_ll(_from_unconstrained(z))

    def gradient(z: np.ndarray) -> np.ndarray:
        return central_gradient(objective, z, np.full(z.size, 1e-6))

    start_list = [np.array([*opts.start, *np.zeros(k)])]
    start_list += [np.array([*p, *np.zeros(k)]) for p in opts.perturbations]
    start_list += [np.asarray(s, dtype=float) for s in starts]

    results = []
    for theta0 in start_list:
        z0 = _to_unconstrained(theta0)
        f0 = objective(z0)
        if f0 >= PENALTY:
            continue
        res = minimize(objective, z0, jac=gradient, method="L-BFGS-B",
                       options={"maxiter": opts.maxiter, "gtol": opts.gtol, "ftol": 1e-14})
        if res.fun >= PENALTY:
            continue
        results.append((res.fun, _from_unconstrained(res.x), bool(res.success), int(res.nit)))
    # seeded parameter vectors and the constant-correlation point stay in play
    for theta0 in [np.zeros(2 + k)] + [np.asarray(s, dtype=float) for s in starts]:
        f0 = neg_mean_ll(theta0)
        if f0 < PENALTY:
            results.append((f0, theta0.copy(), True, 0))
    if not results:
        raise EstimationError(f"{spec.name}: no admissible starting value")

    best = min(results, key=lambda r: (r[0], float(np.linalg.norm(r[1]))))
    fun, theta, success, nit = best
    if not success:
        z = _to_unconstrained(theta)
        nm = minimize(objective, z, method="Nelder-Mead",
                      options={"maxiter": 4000, "xatol": 1e-10, "fatol": 1e-14})
        pol = minimize(objective, nm.x, jac=gradient, method="L-BFGS-B",
                       options={"maxiter": opts.maxiter, "gtol": opts.gtol, "ftol": 1e-14})
        if pol.fun <= fun:
            fun, theta, success, nit = pol.fun, _from_unconstrained(pol.x), bool(pol.success), nit + nm.nit + pol.nit
    if not success and opts.strict:
        raise EstimationError(f"{spec.name}: DCC optimiser did not converge")

    params = DccParams.from_array(theta)
    sample_corr = qbar
    if opts.targeting == "consistent" and opts.exog_style == "ones":
        qbar = target_matrix(theta, sample_corr, design)
    result = dcc_filter(params, eps, design, qbar, exog_style=opts.exog_style)
    loglik = result.loglik
    r_eigs = np.linalg.eigvalsh(result.r_path)
    if not np.all(r_eigs[:, 0] > 0):
        raise NotPositiveDefiniteError(int(np.argmin(r_eigs[:, 0])), f"{spec.name}: at the optimum")

    se = np.full(2 + k, np.nan)
    if opts.compute_se:
        def terms(v: np.ndarray) -> np.ndarray:
            ll, _, _ = _run(v, eps, design, sample_corr, opts.exog_style, False, opts.targeting)
            return ll

        try:
            se = standard_errors(sandwich_covariance(terms, theta))
        except (InvalidParameterError, NotPositiveDefiniteError):
            logger.warning("%s: robust standard errors unavailable at the boundary", spec.name)

    p = 2 + k
    return DccFit(
        spec=spec,
        params=params,
        se_robust=se,
        qbar=qbar,
        sample_corr=sample_corr,
        q_path=result.q_path,
        r_path=result.r_path,
        exog_means=design.means.copy(),
        loglik=loglik,
        aic=-2.0 * loglik + 2.0 * p,
        bic=-2.0 * loglik + p * np.log(nobs),
        nobs=nobs,
        converged=success,
        iterations=nit,
        exog_style=opts.exog_style,
        fingerprint=fingerprint,
        design=design,
        targeting=opts.targeting,
    )


def lr_test(restricted: DccFit, unrestricted: DccFit) -> LrResult:
    """Likelihood-ratio test of nested DCC specifications."""
    if not set(restricted.spec.regressors) <= set(unrestricted.spec.regressors):
        raise SpecError(
            f"{restricted.spec.name} is not nested in {unrestricted.spec.name}"
        )
    if restricted.fingerprint != unrestricted.fingerprint:
        raise SpecError("fits were estimated on different residuals")
    df = unrestricted.n_params - restricted.n_params
    stat = 2.0 * (unrestricted.loglik - restricted.loglik)
    pvalue = 1.0 if df == 0 else float(stats.chi2.sf(max(stat, 0.0), df))
    return LrResult(float(stat), int(df), pvalue)


def _residual_fingerprint(eps: np.ndarray) -> str:
    import hashlib

    return hashlib.sha256(np.ascontiguousarray(eps).tobytes()).hexdigest()


def _fit_one(args):
    values, opts, name = args
    return fit_gjr(values, opts, asset=name)


def fit_garch_panel(dataset: AlignedDataset, options: GarchOptions | None = None,
                    jobs: int = 1) -> tuple[GarchFit, ...]:
    """First step: one GJR fit per asset, in parallel when ``jobs > 1``."""
    r = dataset.returns
    tasks = [(r.values[:, i], options, name) for i, name in enumerate(r.asset_names)]
    try:
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                return tuple(pool.map(_fit_one, tasks))
        return tuple(_fit_one(t) for t in tasks)
    except CorrxError as exc:
        raise type(exc)(f"stage garch: {exc}") from exc


def two_step_fit(
    dataset: AlignedDataset,
    spec: DccSpec,
    options: DccOptions | None = None,
    garch_fits: Sequence[GarchFit] | None = None,
    starts: Sequence[np.ndarray] = (),
) -> ModelFit:
    """GJR-GARCH per asset, de-GARCHing, then the correlation step.

    Pass ``garch_fits`` to reuse first-step fits across several specs.
    """
    opts = options or DccOptions()
    spec = expand_break_spec(spec, dataset.date_index)
    for name in spec.data_columns:
        if name not in dataset.exog_names:
            raise SpecError(f"regressor {name!r} not in dataset; available: {list(dataset.exog_names)}")
    if garch_fits is None:
        garch_fits = fit_garch_panel(dataset, opts.garch, opts.jobs)
    eps = np.column_stack(
        [degarch(dataset.returns.values[:, i], g) for i, g in enumerate(garch_fits)]
    )
    qbar = np.corrcoef(eps, rowvar=False)
    qbar = 0.5 * (qbar + qbar.T)
    np.fill_diagonal(qbar, 1.0)
    design = build_design(spec, dataset, standardize=opts.standardize)
    try:
        dcc = fit_dcc(eps, design, spec, opts, qbar=qbar, starts=starts,
                      fingerprint=_residual_fingerprint(eps))
    except CorrxError as exc:
        raise type(exc)(f"stage dcc ({spec.name}): {exc}") if not isinstance(
            exc, NotPositiveDefiniteError) else exc
    return ModelFit(tuple(garch_fits), dcc, dataset.fingerprint(), dataset.returns.asset_names,
                    dataset.date_index)


def nested_start(base: DccFit, spec: DccSpec) -> np.ndarray:
    """Parameter vector for ``spec`` equal to ``base`` with new coefficients at zero."""
    theta = np.zeros(2 + spec.k)
    theta[:2] = base.params.theta1, base.params.theta2
    lookup = dict(zip(base.spec.regressors, base.params.theta_x))
    for j, name in enumerate(spec.regressors):
        theta[2 + j] = lookup.get(name, 0.0)
    return theta


def with_label(spec: DccSpec, label: str) -> DccSpec:
    return replace(spec, label=label)
