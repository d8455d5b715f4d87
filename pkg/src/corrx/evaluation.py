"""Forecast losses and the Model Confidence Set.

Losses compare a covariance forecast H with the rank-one proxy r r'.  The
MCS uses the range statistic T_R with a circular block bootstrap of the
per-date losses; p-values are running maxima over the elimination rounds.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from corrx.exceptions import DataError, InvalidParameterError, NotPositiveDefiniteError

LOSSES = ("frobenius", "qlike", "gmv", "rpv")
CHUNK = 1000  # bootstrap replications per seeded substream


def _chol(H: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(H)
    except np.linalg.LinAlgError:
        raise NotPositiveDefiniteError(-1, "loss evaluated at a non positive definite H") from None


def frobenius_loss(H, r) -> float:
    H = np.asarray(H, dtype=float)
    r = np.asarray(r, dtype=float)
    if H.shape != (r.size, r.size):
        raise DataError("H and r dimensions differ")
    return float(np.sum((H - np.outer(r, r)) ** 2))


def qlike_loss(H, r) -> float:
    """``log|H| + tr(H^{-1} C)`` with ``C = r r'``.

    ``r`` may also be an N x N proxy matrix C, used as is.
    """
    H = np.asarray(H, dtype=float)
    r = np.asarray(r, dtype=float)
    L = _chol(H)
    logdet = 2.0 * np.sum(np.log(np.diag(L)))
    if r.ndim == 2:
        if r.shape != H.shape:
            raise DataError("H and proxy dimensions differ")
        return float(logdet + np.trace(np.linalg.solve(H, r)))
    z = np.linalg.solve(L, r)
    return float(logdet + z @ z)


def gmv_weights(H) -> np.ndarray:
    """Minimum-variance weights scaled by sqrt(n), so they sum to sqrt(n)."""
    H = np.asarray(H, dtype=float)
    n = H.shape[0]
    L = _chol(H)
    a = np.linalg.solve(L.T, np.linalg.solve(L, np.ones(n)))
    return math.sqrt(n) * a / a.sum()


def gmv_loss(H) -> float:
    H = np.asarray(H, dtype=float)
    v = gmv_weights(H)
    return float(v @ H @ v)


def rpv_loss(H, r, rbar_p: float) -> float:
    v = gmv_weights(H)
    return float((v @ np.asarray(r, dtype=float) - rbar_p) ** 2)


# -- vectorised over dates -----------------------------------------------------------


def _batched_chol(H: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(H)
    except np.linalg.LinAlgError:
        bad = next(t for t in range(H.shape[0]) if np.any(np.linalg.eigvalsh(H[t]) <= 0))
        raise NotPositiveDefiniteError(bad, "forecast covariance") from None


def loss_series(name: str, H: np.ndarray, returns: np.ndarray) -> np.ndarray:
    """Per-date losses of forecasts ``H`` (T x N x N) against ``returns`` (T x N)."""
    H = np.asarray(H, dtype=float)
    r = np.asarray(returns, dtype=float)
    if H.ndim != 3 or r.shape != H.shape[:2] or H.shape[1] != H.shape[2]:
        raise DataError("forecast and return arrays do not align")
    if name == "frobenius":
        return np.sum((H - r[:, :, None] * r[:, None, :]) ** 2, axis=(1, 2))
    if name not in LOSSES:
        raise InvalidParameterError(f"unknown loss {name!r}; choose from {LOSSES}")
    L = _batched_chol(H)
    if name == "qlike":
        z = np.linalg.solve(L, r[:, :, None])[:, :, 0]
        return 2.0 * np.sum(np.log(np.diagonal(L, axis1=1, axis2=2)), axis=1) + np.sum(z * z, axis=1)
    n = H.shape[1]
    ones = np.ones((H.shape[0], n, 1))
    a = np.linalg.solve(np.swapaxes(L, 1, 2), np.linalg.solve(L, ones))[:, :, 0]
    v = math.sqrt(n) * a / a.sum(axis=1, keepdims=True)
    if name == "gmv":
        return np.einsum("ti,tij,tj->t", v, H, v)
    rp = np.sum(v * r, axis=1)
    return (rp - rp.mean()) ** 2


@dataclass(frozen=True)
class LossMatrix:
    model_names: tuple[str, ...]
    losses: np.ndarray
    loss_name: str = ""
    dates: np.ndarray | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "model_names", tuple(self.model_names))
        L = np.asarray(self.losses, dtype=float)
        if L.ndim != 2 or L.shape[1] != len(self.model_names):
            raise DataError("loss matrix must be T x M with one column per model")
        if not np.all(np.isfinite(L)):
            raise DataError("loss matrix contains non-finite values")
        if len(set(self.model_names)) != len(self.model_names):
            raise DataError("duplicate model names")
        object.__setattr__(self, "losses", L)

    @classmethod
    def from_forecasts(cls, name: str, forecasts: dict[str, np.ndarray], returns: np.ndarray,
                       dates=None) -> "LossMatrix":
        names = tuple(forecasts)
        cols = [loss_series(name, forecasts[m], returns) for m in names]
        return cls(names, np.column_stack(cols), name, dates)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["date", *self.model_names])
            dates = self.dates if self.dates is not None else range(self.losses.shape[0])
            for d, row in zip(dates, self.losses):
                w.writerow([str(d), *(repr(float(v)) for v in row)])


@dataclass(frozen=True)
class McsResult:
    model_names: tuple[str, ...]
    pvalues: np.ndarray
    alpha: float
    elimination_order: tuple[str, ...]
    block_length: int
    replications: int
    seed: int
    loss_name: str = ""

    @property
    def surviving_set(self) -> tuple[str, ...]:
        return tuple(m for m, p in zip(self.model_names, self.pvalues) if p >= self.alpha)

    def pvalue(self, name: str) -> float:
        return float(self.pvalues[self.model_names.index(name)])

    def to_dict(self) -> dict:
        return {
            "loss": self.loss_name,
            "alpha": self.alpha,
            "block": self.block_length,
            "reps": self.replications,
            "seed": self.seed,
            "pvalues": {m: float(f"{p:.12g}") for m, p in zip(self.model_names, self.pvalues)},
            "survivors": list(self.surviving_set),
            "elimination_order": list(self.elimination_order),
        }

    def write_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def bootstrap_means(losses: np.ndarray, replications: int, block_length: int,
                    seed: int) -> np.ndarray:
    """Circular block bootstrap means, ``replications x M``.

    Replications are drawn in fixed chunks, each from its own substream of
    ``SeedSequence(seed)``, so results do not depend on how work is split.
    """
    T, M = losses.shape
    b = int(block_length)
    n_blocks = -(-T // b)
    last = T - (n_blocks - 1) * b
    ext = np.concatenate([losses, losses[:b]], axis=0)
    cs = np.concatenate([np.zeros((1, M)), np.cumsum(ext, axis=0)], axis=0)
    n_chunks = -(-replications // CHUNK)
    seqs = np.random.SeedSequence(seed).spawn(n_chunks)
    out = np.empty((replications, M))
    for c, ss in enumerate(seqs):
        lo, hi = c * CHUNK, min((c + 1) * CHUNK, replications)
        starts = np.random.default_rng(ss).integers(0, T, size=(hi - lo, n_blocks))
        lens = np.full(n_blocks, b)
        lens[-1] = last
        sums = cs[starts + lens] - cs[starts]
        out[lo:hi] = sums.sum(axis=1) / T
    return out


def mcs(losses: LossMatrix, alpha: float = 0.05, replications: int = 5000,
        block_length: int | None = None, seed: int = 0) -> McsResult:
    """Model Confidence Set with the T_R range statistic."""
    if not 0 < alpha < 1:
        raise InvalidParameterError("alpha must lie in (0, 1)")
    L = losses.losses
    T, M = L.shape
    if T < 10:
        raise DataError(f"MCS needs at least 10 loss dates, got {T}")
    if M < 2:
        raise DataError("MCS needs at least two models")
    if replications < 1:
        raise InvalidParameterError("replications must be positive")
    b = int(block_length) if block_length else math.ceil(T ** (1.0 / 3.0))
    if not 1 <= b <= T:
        raise InvalidParameterError(f"block length {b} outside [1, {T}]")

    mean = L.mean(axis=0)
    dev = bootstrap_means(L, replications, b, seed) - mean
    # pairwise differential means and bootstrap deviations
    dbar = mean[:, None] - mean[None, :]
    dstar = dev[:, :, None] - dev[:, None, :]
    var = np.mean(dstar ** 2, axis=0)
    scale = np.sqrt(var)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(scale > 0, dbar / scale, np.sign(dbar) * np.inf)
        tstar = np.where(scale > 0, np.abs(dstar) / scale, 0.0)
    t = np.where(dbar == 0, 0.0, t)

    alive = list(range(M))
    pvals = np.ones(M)
    order: list[int] = []
    running = 0.0
    while len(alive) > 1:
        idx = np.ix_(alive, alive)
        tsub = t[idx]
        stat = float(np.max(np.abs(tsub)))
        if stat == 0.0:
            break
        boot = tstar[:, alive][:, :, alive].reshape(replications, -1).max(axis=1)
        p = float(np.mean(boot >= stat))
        running = max(running, p)
        worst = alive[int(np.argmax(tsub.max(axis=1)))]
        pvals[worst] = running
        order.append(worst)
        alive.remove(worst)
    return McsResult(losses.model_names, pvals, float(alpha),
                     tuple(losses.model_names[i] for i in order), b, int(replications),
                     int(seed), losses.loss_name)


def evaluate(forecasts: dict[str, np.ndarray], returns: np.ndarray,
             losses: Sequence[str] = LOSSES, alpha: float = 0.05, replications: int = 5000,
             block_length: int | None = None, seed: int = 0, dates=None):
    """Loss matrices and MCS results for each loss in ``losses``."""
    out = {}
    for name in losses:
        lm = LossMatrix.from_forecasts(name, forecasts, returns, dates)
        out[name] = (lm, mcs(lm, alpha, replications, block_length, seed))
    return out
