"""Squared-exponential kernel and study covariance."""

import math

import numpy as np
import pytest

from surrogate_resilience.errors import NotPositiveDefinite
from surrogate_resilience.kernel import KernelParams, cov_cholesky, cov_matrix, rbf


def test_rbf_values():
    p = KernelParams(1.0, 1.0, 0.0)
    assert rbf(2.0, 2.0, KernelParams(3.0, 1.0, 0.0)) == 3.0
    assert rbf(0.0, 1e3, p) == 0.0
    assert rbf(0.0, 1.0, p) == pytest.approx(0.60653, abs=1e-5)


def test_params_validation():
    with pytest.raises(ValueError):
        KernelParams(0.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        KernelParams(1.0, -1.0, 0.0)
    with pytest.raises(ValueError):
        KernelParams(1.0, 1.0, -0.1)
    with pytest.raises(ValueError):
        KernelParams(1.0, np.inf, 0.0)


def test_single_point():
    C = cov_matrix([0.3], KernelParams(2.0, 1.0, 0.5), jitter=0.25)
    np.testing.assert_array_equal(C, [[2.75]])


def test_brute_force_oracle():
    rng = np.random.default_rng(1)
    for _ in range(20):
        s = rng.normal(0, 2, 8)
        p = KernelParams(rng.uniform(0.1, 3), rng.uniform(0.2, 4), rng.uniform(0.1, 1))
        expect = np.empty((8, 8))
        for i in range(8):
            for j in range(8):
                d = s[i] - s[j]
                expect[i, j] = p.sigma2 * math.exp(-d * d / (2 * p.theta ** 2)) + p.v2 * (i == j)
        C = cov_matrix(s, p)
        assert np.max(np.abs(C - expect)) <= 1e-15 * max(1.0, np.abs(expect).max())
        np.testing.assert_array_equal(C, C.T)


def test_duplicates_eigenvalues_above_noise():
    s = np.array([1.0, 1.0, 1.0, 2.0, 2.0])
    p = KernelParams(1.0, 1.0, 0.3)
    assert np.linalg.eigvalsh(cov_matrix(s, p)).min() >= 0.3 - 1e-12


def test_cholesky_reconstructs():
    s = np.random.default_rng(2).normal(size=12)
    C, L = cov_cholesky(s, KernelParams(1.5, 0.7, 0.2))
    np.testing.assert_allclose(L @ L.T, C, atol=1e-12)
    assert np.all(np.triu(L, 1) == 0)


def test_jitter_rescues_duplicates_without_noise():
    s = np.repeat([0.0, 1.0], 4)
    C, L = cov_cholesky(s, KernelParams(1.0, 1.0, 0.0))
    np.testing.assert_allclose(L @ L.T, C, atol=1e-12)
    assert np.all(np.diag(C) > 1.0)


def test_jitter_ladder_exhausted(monkeypatch):
    import surrogate_resilience.kernel as kmod

    seen = []

    def always_fails(C, lower, check_finite):
        seen.append(C[0, 0])
        raise np.linalg.LinAlgError("forced")

    monkeypatch.setattr(kmod, "cho_factor", always_fails)
    with pytest.raises(NotPositiveDefinite):
        cov_cholesky([0.0, 1.0], KernelParams(2.0, 1.0, 0.0))
    # no jitter, then 1e-10 .. 1e-4 times sigma2
    expect = 2.0 + 2.0 * np.concatenate([[0.0], 10.0 ** np.arange(-10, -3)])
    np.testing.assert_allclose(seen, expect, rtol=1e-12)


def test_continuity_in_params():
    s = np.random.default_rng(3).normal(size=10)
    base = cov_matrix(s, KernelParams(1.0, 1.0, 0.1))
    for eps in (1e-3, 1e-4):
        moved = cov_matrix(s, KernelParams(1.0 + eps, 1.0 + eps, 0.1))
        assert np.linalg.norm(moved - base) < 50 * eps
