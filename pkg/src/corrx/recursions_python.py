"""Pure NumPy/SciPy versions of the recursions in ``corrx.recursions``.

These are used when the compiled extension is unavailable, and serve as the
reference the compiled code is tested against.  The GJR variance equation is
linear in the lagged variance once the leverage indicator is fixed by the
data, so it is evaluated with ``scipy.signal.lfilter``.  In the DCC-X
recursion only the diagonal of Q_t feeds back non-linearly; the diagonal is
iterated in Python and the full matrix path is then a linear filter.
"""
from __future__ import annotations

import numpy as np
from scipy.signal import lfilter

from corrx.exceptions import NotPositiveDefiniteError

LOG2PI = np.log(2.0 * np.pi)


def gjr_variance(params: np.ndarray, resids: np.ndarray, h0: float) -> np.ndarray:
    omega, alpha, beta, gamma = (float(v) for v in params)
    resids = np.asarray(resids, dtype=float)
    nobs = resids.shape[0]
    if nobs == 0:
        return np.empty(0)
    r2 = resids[:-1] ** 2
    drive = np.empty(nobs)
    drive[0] = h0
    drive[1:] = omega + (alpha + gamma * (resids[:-1] < 0)) * r2
    return lfilter([1.0], [1.0, -beta], drive)


def gjr_loglik_terms(
    params: np.ndarray, resids: np.ndarray, h0: float, floor: float
) -> np.ndarray:
    resids = np.asarray(resids, dtype=float)
    h = np.maximum(gjr_variance(params, resids, h0), floor)
    return -0.5 * (LOG2PI + np.log(h) + resids**2 / h)


def _diagonal_path(theta1, theta2, intercept, shift, eps, qbar, qbar_style):
    """Iterate diag(Q_t); returns the path and the first failing index (or None)."""
    nobs, n = eps.shape
    qd = np.empty((nobs, n))
    qbar_diag = np.diag(qbar)
    qd[0] = qbar_diag
    add_scale = qbar_diag if qbar_style else np.ones(n)
    eps2 = eps**2
    for t in range(1, nobs):
        cur = (
            intercept[t] * qbar_diag
            + (theta1 * eps2[t - 1] + theta2) * qd[t - 1]
            + shift[t] * add_scale
        )
        if not np.all(cur > 0.0):
            return qd[:t], t
        qd[t] = cur
    return qd, None


def dcc_recursion(
    theta1: float,
    theta2: float,
    intercept: np.ndarray,
    shift: np.ndarray,
    eps: np.ndarray,
    qbar: np.ndarray,
    qbar_style: bool,
    keep_paths: bool,
):
    eps = np.ascontiguousarray(eps, dtype=float)
    qbar = np.asarray(qbar, dtype=float)
    nobs, n = eps.shape
    intercept = np.asarray(intercept, dtype=float)
    shift = np.asarray(shift, dtype=float)
    if nobs == 0:
        return np.empty(0), None, None
    if not np.all(np.diag(qbar) > 0):
        raise NotPositiveDefiniteError(0, "non-positive diagonal")
    qd, diag_fail = _diagonal_path(theta1, theta2, intercept, shift, eps, qbar, qbar_style)
    m = qd.shape[0]

    # Off-diagonal recursion is linear given the diagonal path.
    u = np.sqrt(qd) * eps[:m]
    drive = np.empty((m, n, n))
    drive[0] = qbar
    add = qbar if qbar_style else np.ones((n, n))
    drive[1:] = (
        intercept[1:m, None, None] * qbar
        + theta1 * u[:-1, :, None] * u[:-1, None, :]
        + shift[1:m, None, None] * add
    )
    q = lfilter([1.0], [1.0, -theta2], drive, axis=0)
    # keep the diagonal identical to the iterated values
    idx = np.arange(n)
    q[:, idx, idx] = qd
    sd = np.sqrt(qd)
    r = q / (sd[:, :, None] * sd[:, None, :])
    r[:, idx, idx] = 1.0

    try:
        chol = np.linalg.cholesky(r)
    except np.linalg.LinAlgError:
        for t in range(m):
            try:
                np.linalg.cholesky(r[t])
            except np.linalg.LinAlgError:
                raise NotPositiveDefiniteError(t, "Cholesky pivot <= 0") from None
        raise
    if diag_fail is not None:
        raise NotPositiveDefiniteError(diag_fail, "non-positive diagonal")
    logdet = 2.0 * np.log(chol[:, idx, idx]).sum(axis=1)
    quad = np.einsum("ti,ti->t", eps, np.linalg.solve(r, eps[:, :, None])[:, :, 0])
    ll = -0.5 * (n * LOG2PI + logdet + quad)
    if keep_paths:
        return ll, q, r
    return ll, None, None
