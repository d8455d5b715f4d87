"""Finite-difference derivatives and White sandwich covariance estimates."""
from __future__ import annotations

from typing import Callable

import numpy as np


def default_steps(x: np.ndarray, rel: float = 1e-5, floor: float = 1e-8) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return rel * np.maximum(np.abs(x), floor / rel)


def central_gradient(
    f: Callable[[np.ndarray], float], x: np.ndarray, steps: np.ndarray | None = None
) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    steps = default_steps(x) if steps is None else np.asarray(steps, dtype=float)
    grad = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = steps[i]
        grad[i] = (f(x + e) - f(x - e)) / (2.0 * steps[i])
    return grad


def richardson_gradient(
    f: Callable[[np.ndarray], float], x: np.ndarray, steps: np.ndarray | None = None
) -> np.ndarray:
    """Central differences at h and h/2 combined to cancel the O(h^2) term."""
    x = np.asarray(x, dtype=float)
    steps = default_steps(x, rel=1e-3) if steps is None else np.asarray(steps, dtype=float)
    coarse = central_gradient(f, x, steps)
    fine = central_gradient(f, x, steps / 2.0)
    return (4.0 * fine - coarse) / 3.0


def jacobian(
    fvec: Callable[[np.ndarray], np.ndarray],
    x: np.ndarray,
    steps: np.ndarray | None = None,
) -> np.ndarray:
    """Central-difference Jacobian of a vector function, shape (len(fvec(x)), len(x))."""
    x = np.asarray(x, dtype=float)
    steps = default_steps(x) if steps is None else np.asarray(steps, dtype=float)
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = steps[i]
        cols.append((fvec(x + e) - fvec(x - e)) / (2.0 * steps[i]))
    return np.column_stack(cols)


def hessian(
    f: Callable[[np.ndarray], float], x: np.ndarray, steps: np.ndarray | None = None
) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    p = x.size
    steps = default_steps(x, rel=1e-4) if steps is None else np.asarray(steps, dtype=float)
    f0 = f(x)
    hess = np.empty((p, p))
    for i in range(p):
        ei = np.zeros(p)
        ei[i] = steps[i]
        hess[i, i] = (f(x + ei) - 2.0 * f0 + f(x - ei)) / steps[i] ** 2
        for j in range(i):
            ej = np.zeros(p)
            ej[j] = steps[j]
            val = (
                f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)
            ) / (4.0 * steps[i] * steps[j])
            hess[i, j] = hess[j, i] = val
    return hess


def sandwich_covariance(
    loglik_terms: Callable[[np.ndarray], np.ndarray], x: np.ndarray
) -> np.ndarray:
    """Robust covariance A^-1 B A^-1 of a quasi-maximum-likelihood estimate.

    A is the numerical Hessian of the negative total log-likelihood and B the
    outer product of the per-observation scores.  A pseudo-inverse is used so
    that a flat direction yields large, not failing, standard errors.
    """
    x = np.asarray(x, dtype=float)
    scores = jacobian(loglik_terms, x)
    outer = scores.T @ scores
    info = -hessian(lambda v: float(np.sum(loglik_terms(v))), x)
    info_inv = np.linalg.pinv(info)
    return info_inv @ outer @ info_inv


def standard_errors(cov: np.ndarray) -> np.ndarray:
    d = np.diag(cov).copy()
    d[d < 0] = np.nan
    return np.sqrt(d)
