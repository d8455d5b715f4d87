# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled GJR-GARCH and DCC-X recursions.

Signatures and results match ``corrx.recursions_python`` exactly.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport log, sqrt, M_PI

from corrx.exceptions import NotPositiveDefiniteError

cnp.import_array()

cdef double LOG2PI = log(2.0 * M_PI)


def gjr_variance(double[::1] params, double[::1] resids, double h0):
    """Conditional variance path of a GJR-GARCH(1,1) with ``sigma2[0] = h0``."""
    cdef Py_ssize_t t, nobs = resids.shape[0]
    cdef double omega = params[0], alpha = params[1], beta = params[2], gamma = params[3]
    cdef double r2
    out = np.empty(nobs, dtype=np.float64)
    cdef double[::1] sigma2 = out
    if nobs == 0:
        return out
    sigma2[0] = h0
    for t in range(1, nobs):
        r2 = resids[t - 1] * resids[t - 1]
        sigma2[t] = omega + beta * sigma2[t - 1] + alpha * r2
        if resids[t - 1] < 0:
            sigma2[t] += gamma * r2
    return out


def gjr_loglik_terms(double[::1] params, double[::1] resids, double h0, double floor):
    """Per-observation Gaussian log-likelihood contributions of a GJR-GARCH(1,1)."""
    cdef Py_ssize_t t, nobs = resids.shape[0]
    cdef double omega = params[0], alpha = params[1], beta = params[2], gamma = params[3]
    cdef double h = h0, hf, r2
    out = np.empty(nobs, dtype=np.float64)
    cdef double[::1] ll = out
    for t in range(nobs):
        if t > 0:
            r2 = resids[t - 1] * resids[t - 1]
            h = omega + beta * h + alpha * r2
            if resids[t - 1] < 0:
                h += gamma * r2
        hf = h if h > floor else floor
        ll[t] = -0.5 * (LOG2PI + log(hf) + resids[t] * resids[t] / hf)
    return out


def dcc_recursion(double theta1, double theta2, double[::1] intercept, double[::1] shift,
                  double[:, ::1] eps, double[:, ::1] qbar, bint qbar_style, bint keep_paths):
    """Filter the DCC-X quasi-correlation recursion and evaluate its likelihood.

    Q_0 = qbar and, for t >= 1,

        Q_t = intercept[t] * qbar + theta1 * u u' + theta2 * Q_{t-1} + shift[t] * J

    with u = sqrt(diag(Q_{t-1})) * eps[t-1].  With ``qbar_style`` the exogenous
    shift multiplies ``qbar`` instead of the all-ones matrix J.

    Returns
    -------
    ll : ndarray (T,)
        Per-observation log-likelihood contributions.
    Q, R : ndarray (T, N, N) or None
        Quasi-correlation and correlation paths when ``keep_paths``.
    """
    cdef Py_ssize_t nobs = eps.shape[0], n = eps.shape[1]
    cdef Py_ssize_t t, i, j, k
    cdef double a, s, piv, logdet, quad, y

    ll_arr = np.empty(nobs, dtype=np.float64)
    cdef double[::1] ll = ll_arr
    q_prev_arr = np.array(qbar, dtype=np.float64, copy=True)
    q_cur_arr = np.empty((n, n), dtype=np.float64)
    r_arr = np.empty((n, n), dtype=np.float64)
    chol_arr = np.zeros((n, n), dtype=np.float64)
    u_arr = np.empty(n, dtype=np.float64)
    sd_arr = np.empty(n, dtype=np.float64)
    cdef double[:, ::1] q_prev = q_prev_arr
    cdef double[:, ::1] q_cur = q_cur_arr
    cdef double[:, ::1] r = r_arr
    cdef double[:, ::1] chol = chol_arr
    cdef double[::1] u = u_arr
    cdef double[::1] sd = sd_arr
    cdef double[:, ::1] tmp
    cdef double[:, :, ::1] q_path
    cdef double[:, :, ::1] r_path

    q_path_arr = None
    r_path_arr = None
    if keep_paths:
        q_path_arr = np.empty((nobs, n, n), dtype=np.float64)
        r_path_arr = np.empty((nobs, n, n), dtype=np.float64)
        q_path = q_path_arr
        r_path = r_path_arr

    for t in range(nobs):
        if t == 0:
            for i in range(n):
                for j in range(n):
                    q_cur[i, j] = qbar[i, j]
        else:
            for i in range(n):
                u[i] = sqrt(q_prev[i, i]) * eps[t - 1, i]
            a = intercept[t]
            s = shift[t]
            for i in range(n):
                for j in range(i + 1):
                    if qbar_style:
                        q_cur[i, j] = (a + s) * qbar[i, j] + theta1 * u[i] * u[j] + theta2 * q_prev[i, j]
                    else:
                        q_cur[i, j] = a * qbar[i, j] + theta1 * u[i] * u[j] + theta2 * q_prev[i, j] + s
                    q_cur[j, i] = q_cur[i, j]
        for i in range(n):
            if not q_cur[i, i] > 0.0:
                raise NotPositiveDefiniteError(t, "non-positive diagonal")
            sd[i] = sqrt(q_cur[i, i])
        for i in range(n):
            r[i, i] = 1.0
            for j in range(i):
                r[i, j] = q_cur[i, j] / (sd[i] * sd[j])
                r[j, i] = r[i, j]
        # Cholesky R = L L'
        logdet = 0.0
        for j in range(n):
            piv = r[j, j]
            for k in range(j):
                piv -= chol[j, k] * chol[j, k]
            if not piv > 0.0:
                raise NotPositiveDefiniteError(t, "Cholesky pivot <= 0")
            chol[j, j] = sqrt(piv)
            logdet += log(piv)
            for i in range(j + 1, n):
                y = r[i, j]
                for k in range(j):
                    y -= chol[i, k] * chol[j, k]
                chol[i, j] = y / chol[j, j]
        quad = 0.0
        for i in range(n):
            y = eps[t, i]
            for k in range(i):
                y -= chol[i, k] * u[k]
            u[i] = y / chol[i, i]
            quad += u[i] * u[i]
        ll[t] = -0.5 * (n * LOG2PI + logdet + quad)
        if keep_paths:
            for i in range(n):
                for j in range(n):
                    q_path[t, i, j] = q_cur[i, j]
                    r_path[t, i, j] = r[i, j]
        tmp = q_prev
        q_prev = q_cur
        q_cur = tmp

    return ll_arr, q_path_arr, r_path_arr
