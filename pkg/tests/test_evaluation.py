import itertools
import math
import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import minimize_scalar

from conftest import random_pd
from corrx.evaluation import (
    LossMatrix,
    bootstrap_means,
    frobenius_loss,
    gmv_loss,
    gmv_weights,
    loss_series,
    mcs,
    qlike_loss,
    rpv_loss,
)
from corrx.exceptions import DataError, InvalidParameterError, NotPositiveDefiniteError


def test_frobenius_examples():
    r = np.array([1.0, -2.0])
    assert frobenius_loss(np.outer(r, r), r) == 0.0
    assert frobenius_loss([[2.0]], [1.0]) == 1.0
    assert frobenius_loss(np.eye(2), [1.0, 1.0]) == 2.0


def test_qlike_examples():
    assert qlike_loss(np.eye(2), np.zeros(2)) == 0.0
    assert qlike_loss(np.eye(2), np.ones(2)) == pytest.approx(2.0)
    with pytest.raises(NotPositiveDefiniteError):
        qlike_loss(np.zeros((2, 2)), np.ones(2))


def test_qlike_rank_one_minimiser(rng):
    """For H = cC and proxy rr', the minimiser is r'C^{-1}r / N."""
    r = rng.normal(size=3)
    C = np.outer(r, r) + 1e-3 * np.eye(3)
    res = minimize_scalar(lambda c: qlike_loss(c * C, r), bounds=(1e-3, 10), method="bounded",
                          options={"xatol": 1e-10})
    assert res.x == pytest.approx(r @ np.linalg.solve(C, r) / 3, rel=1e-6)


def test_gmv_examples():
    np.testing.assert_allclose(gmv_weights(np.eye(4)), 0.5)
    np.testing.assert_allclose(gmv_weights(np.diag([1.0, 4.0])), math.sqrt(2) * np.array([0.8, 0.2]))
    assert gmv_loss(np.eye(2)) == pytest.approx(1.0)
    assert gmv_loss(3.0 * np.eye(5)) == pytest.approx(3.0)


def test_gmv_homogeneity(rng):
    H = random_pd(rng, 4)
    assert gmv_loss(2 * H) == pytest.approx(2 * gmv_loss(H), rel=1e-12)


def test_rpv_examples():
    assert rpv_loss(np.eye(2), np.zeros(2), 0.0) == 0.0
    assert rpv_loss(np.eye(2), np.array([1.0, -1.0]), 0.0) == pytest.approx(0.0, abs=1e-15)
    assert rpv_loss(np.eye(2), np.ones(2), 0.0) == pytest.approx(2.0)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 6))
def test_loss_properties(seed, n):
    rng = np.random.default_rng(seed)
    H = random_pd(rng, n)
    r = rng.normal(size=n)
    assert frobenius_loss(H, r) >= 0
    assert abs(gmv_weights(H).sum() - math.sqrt(n)) < 1e-10


def test_vectorised_matches_scalar(rng):
    T, n = 40, 3
    H = np.stack([random_pd(rng, n) for _ in range(T)])
    r = rng.normal(size=(T, n))
    np.testing.assert_allclose(loss_series("frobenius", H, r), [frobenius_loss(h, x) for h, x in zip(H, r)])
    np.testing.assert_allclose(loss_series("qlike", H, r), [qlike_loss(h, x) for h, x in zip(H, r)])
    np.testing.assert_allclose(loss_series("gmv", H, r), [gmv_loss(h) for h in H])
    rp = np.array([gmv_weights(h) @ x for h, x in zip(H, r)])
    np.testing.assert_allclose(loss_series("rpv", H, r),
                               [rpv_loss(h, x, rp.mean()) for h, x in zip(H, r)])
    with pytest.raises(InvalidParameterError):
        loss_series("mse", H, r)


def test_loss_matrix_validation():
    with pytest.raises(DataError):
        LossMatrix(("a", "b"), np.array([[1.0, np.nan]] * 12))
    with pytest.raises(DataError):
        LossMatrix(("a",), np.ones((12, 2)))


def test_bootstrap_means_oracle(rng):
    """Cumulative-sum block means equal an explicit circular resample."""
    L = rng.normal(size=(23, 3))
    b = 4
    out = bootstrap_means(L, 7, b, seed=5)
    starts = np.random.default_rng(np.random.SeedSequence(5).spawn(1)[0]).integers(0, 23, size=(7, 6))
    for k in range(7):
        idx = np.concatenate([(s + np.arange(b)) % 23 for s in starts[k]])[:23]
        np.testing.assert_allclose(out[k], L[idx].mean(axis=0), rtol=1e-12)


def test_mcs_identical():
    a = np.random.default_rng(0).normal(size=100)
    res = mcs(LossMatrix(("A", "B"), np.column_stack([a, a])), replications=500)
    assert res.pvalues.tolist() == [1.0, 1.0] and res.surviving_set == ("A", "B")


def test_mcs_dominance():
    rng = np.random.default_rng(7)
    a = rng.normal(0, 1, 500)
    b = a + 10 + rng.normal(0, 0.1, 500)
    res = mcs(LossMatrix(("A", "B"), np.column_stack([a, b])), seed=1)
    assert res.pvalue("A") == 1.0 and res.pvalue("B") < 0.05
    assert res.elimination_order == ("B",)


def test_mcs_constant_shift_invariance(rng):
    L = rng.normal(size=(200, 4)) + np.array([0, 0.1, 0.2, 0.3])
    base = mcs(LossMatrix(tuple("abcd"), L), replications=1000, seed=3)
    shifted = mcs(LossMatrix(tuple("abcd"), L + rng.normal(size=(200, 1)) * 3), replications=1000, seed=3)
    np.testing.assert_allclose(base.pvalues, shifted.pvalues, atol=2e-3)
    assert base.elimination_order == shifted.elimination_order


def test_mcs_reproducible_and_valid(rng):
    L = rng.normal(size=(120, 5))
    a = mcs(LossMatrix(tuple("abcde"), L), replications=800, seed=9)
    b = mcs(LossMatrix(tuple("abcde"), L), replications=800, seed=9)
    assert np.array_equal(a.pvalues, b.pvalues)
    assert np.all((a.pvalues >= 0) & (a.pvalues <= 1)) and a.pvalues.max() == 1.0
    order = [a.pvalue(m) for m in a.elimination_order]
    assert order == sorted(order)
    assert len(a.surviving_set) >= 1
    assert a.block_length == math.ceil(120 ** (1 / 3))


def test_mcs_preconditions(rng):
    with pytest.raises(DataError):
        mcs(LossMatrix(("a", "b"), rng.normal(size=(5, 2))))
    with pytest.raises(DataError):
        mcs(LossMatrix(("a",), rng.normal(size=(50, 1))))
    with pytest.raises(InvalidParameterError):
        mcs(LossMatrix(("a", "b"), rng.normal(size=(50, 2))), alpha=1.5)


def test_mcs_timing(rng):
    L = rng.normal(size=(583, 5))
    t = time.perf_counter()
    mcs(LossMatrix(tuple("abcde"), L), replications=5000)
    assert time.perf_counter() - t < 30
