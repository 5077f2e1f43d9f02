"""Squared-exponential kernel and the per-study covariance ``C = K(S, S) + v2 I``."""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, LinAlgError

from .errors import NotPositiveDefinite

__all__ = ["KernelParams", "rbf", "cov_matrix", "cov_cholesky", "sq_dists",
           "JITTER_START", "JITTER_STOP"]

# extra diagonal ladder, relative to sigma2
JITTER_START = 1e-10
JITTER_STOP = 1e-4


@dataclass(frozen=True)
class KernelParams:
    """Signal variance, lengthscale and noise variance of one treatment group."""

    sigma2: float
    theta: float
    v2: float

    def __post_init__(self):
        for name in ("sigma2", "theta", "v2"):
            val = float(getattr(self, name))
            if not np.isfinite(val):
                raise ValueError(f"{name} must be finite, got {val}")
            object.__setattr__(self, name, val)
        if self.sigma2 <= 0 or self.theta <= 0:
            raise ValueError("sigma2 and theta must be strictly positive")
        if self.v2 < 0:
            raise ValueError("v2 must be non-negative")


def rbf(s, t, params):
    """``sigma2 * exp(-(s - t)**2 / (2 theta**2))``."""
    d = float(s) - float(t)
    return params.sigma2 * np.exp(-d * d / (2.0 * params.theta ** 2))


def sq_dists(s_vec):
    s = np.asarray(s_vec, dtype=float).ravel()
    d = s[:, None] - s[None, :]
    return d * d


def _kernel_from_sq(d2, params, jitter):
    C = params.sigma2 * np.exp(d2 * (-0.5 / params.theta ** 2))
    # exp is evaluated elementwise on an exactly symmetric d2, so C is symmetric
    idx = np.arange(C.shape[0])
    C[idx, idx] += params.v2 + jitter
    return C


def cov_matrix(s_vec, params, jitter=0.0):
    """Covariance of one study's outcomes at surrogate values ``s_vec``.

    ``C[i, j] = rbf(s_i, s_j) + (v2 + jitter) * [i == j]``. If the matrix does
    not admit a Cholesky factor, extra diagonal jitter is added starting at
    ``1e-10 * sigma2`` and growing tenfold up to ``1e-4 * sigma2``.

    Raises
    ------
    NotPositiveDefinite
        When the largest jitter still fails to make ``C`` factorizable.
    """
    return cov_cholesky(s_vec, params, jitter)[0]


def cov_cholesky(s_vec, params, jitter=0.0, d2=None):
    """``(C, L)`` with ``L`` the lower Cholesky factor of ``C`` (see ``cov_matrix``)."""
    if jitter < 0:
        raise ValueError("jitter must be non-negative")
    s = np.asarray(s_vec, dtype=float).ravel()
    if not np.all(np.isfinite(s)):
        raise ValueError("surrogate values must be finite")
    if d2 is None:
        d2 = sq_dists(s)
    C = _kernel_from_sq(d2, params, jitter)
    extra = 0.0
    step = JITTER_START * params.sigma2
    stop = JITTER_STOP * params.sigma2 * (1 + 1e-9)
    while True:
        try:
            Lc, _ = cho_factor(C, lower=True, check_finite=False)
            return C, np.tril(Lc)
        except LinAlgError:
            pass
        if step > stop:
            raise NotPositiveDefinite(
                f"covariance of {s.size} points not factorizable with diagonal jitter "
                f"up to {extra:.3g}")
        idx = np.arange(C.shape[0])
        C[idx, idx] += step - extra
        extra = step
        step *= 10.0
