"""Gaussian-process log-likelihood of the completed studies.

Each study's outcome vector in arm ``g`` is multivariate normal with mean
``B(s) @ beta`` and covariance ``cov_matrix(s, kernel)``; studies are
independent, so the pooled log-likelihood is a sum over studies.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular, LinAlgError
from scipy.linalg.lapack import dpotrf, dtrtrs

from .errors import RankDeficientDesign
from .kernel import KernelParams, cov_cholesky, sq_dists
from .spline_basis import design_matrix

__all__ = [
    "GroupParams",
    "study_loglik",
    "pooled_neg_loglik",
    "GroupObjective",
    "params_to_vector",
    "vector_to_params",
]

LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True, eq=False)
class GroupParams:
    """Mean coefficients and kernel parameters of one arm."""

    beta: np.ndarray
    kernel: KernelParams

    def __post_init__(self):
        b = np.array(self.beta, dtype=float).ravel()
        if not np.all(np.isfinite(b)):
            raise ValueError("beta must be finite")
        b.setflags(write=False)
        object.__setattr__(self, "beta", b)


def params_to_vector(params):
    """Stack as ``[beta, log sigma2, log theta, log v2]``.

    This is the coordinate system used by the optimizer, the Hessian and the
    p-hat gradient. ``v2`` must be positive here.
    """
    k = params.kernel
    return np.concatenate([params.beta, np.log([k.sigma2, k.theta, k.v2])])


def vector_to_params(x):
    x = np.asarray(x, dtype=float)
    return GroupParams(x[:-3], KernelParams(*np.exp(x[-3:])))


def study_loglik(s, y, spec, params):
    """Log-density of one study's outcomes in one arm.

    ``-0.5 log|C| - 0.5 r' C^-1 r - (n/2) log(2 pi)`` with ``r = y - B(s) beta``,
    evaluated through the Cholesky factor of ``C``.
    """
    s = np.asarray(s, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if s.shape != y.shape or s.size < 1:
        raise ValueError("s and y must be non-empty and of equal length")
    r = y - design_matrix(spec, s) @ params.beta
    _, L = cov_cholesky(s, params.kernel)
    w = solve_triangular(L, r, lower=True, check_finite=False)
    logdet = 2.0 * np.sum(np.log(np.diag(L)))
    return -0.5 * logdet - 0.5 * (w @ w) - 0.5 * s.size * LOG_2PI


def pooled_neg_loglik(studies, group, spec, params):
    """Negative log-likelihood of arm ``group`` summed over ``studies``."""
    if len(studies) == 0:
        raise ValueError("need at least one study")
    total = 0.0
    for st in studies:
        s, y = st.group(group)
        total -= study_loglik(s, y, spec, params)
    return total


class GroupObjective:
    """Pooled likelihood for one arm with per-study quantities cached.

    Studies of equal size are stacked so their covariances are factorized in
    one batched call. Besides the plain objective over ``[beta, log kernel]``
    this offers the profile over kernel parameters, with ``beta`` replaced by
    its generalized least-squares value; both have the same maximizer.
    """

    def __init__(self, studies, group, spec):
        if len(studies) == 0:
            raise ValueError("need at least one study")
        self.spec = spec
        self.group = group
        self.n_evals = 0
        # a study repeated in the list (bootstrap resamples) is factorized once
        # and weighted by its multiplicity
        counts = {}
        unique = []
        for st in studies:
            if id(st) not in counts:
                counts[id(st)] = 0
                unique.append(st)
            counts[id(st)] += 1
        by_size = {}
        for st in unique:
            s, y = st.group(group)
            by_size.setdefault(s.size, []).append((s, y, counts[id(st)]))
        self._blocks = []
        self.n_total = 0
        for n, members in sorted(by_size.items()):
            S = np.stack([m[0] for m in members])
            mult = np.array([m[2] for m in members], dtype=float)
            D2 = np.stack([sq_dists(s) for s in S])
            RHS = [np.asfortranarray(np.column_stack([design_matrix(spec, m[0]), m[1]]))
                   for m in members]
            diag = np.arange(n) * (n + 1)
            self._blocks.append((S, RHS, D2, diag, mult))
            self.n_total += int(n * mult.sum())
        self.n_params = spec.L + 3

    def _whitened(self, kernel):
        """``(weighted log|C| sum, [(weight, L^-1 [B | y]) per distinct study])``."""
        scale = -0.5 / kernel.theta ** 2
        logdet = 0.0
        out = []
        for S, RHS, D2, diag, mult in self._blocks:
            C = np.multiply(D2, scale)
            np.exp(C, out=C)
            C *= kernel.sigma2
            C.reshape(C.shape[0], -1)[:, diag] += kernel.v2
            for i in range(S.shape[0]):
                # C[i] is symmetric, so its transpose is an F-ordered view of the same matrix
                L, info = dpotrf(C[i].T, lower=1, clean=0, overwrite_a=1)
                if info != 0:
                    L = cov_cholesky(S[i], kernel, d2=D2[i])[1]
                W, info = dtrtrs(L, RHS[i], lower=1)
                logdet += mult[i] * 2.0 * np.sum(np.log(L.diagonal()))
                out.append((mult[i], W))
        return logdet, out

    def value(self, x):
        """Negative log-likelihood at ``x = [beta, log sigma2, log theta, log v2]``."""
        self.n_evals += 1
        x = np.asarray(x, dtype=float)
        beta = x[:-3]
        kernel = KernelParams(*np.exp(x[-3:]))
        logdet, ws = self._whitened(kernel)
        quad = 0.0
        for c, W in ws:
            r = W[:, -1] - W[:, :-1] @ beta
            quad += c * (r @ r)
        return 0.5 * logdet + 0.5 * quad + 0.5 * self.n_total * LOG_2PI

    def profile(self, log_kernel):
        """``(neg_loglik, beta_hat)`` with beta at its GLS value for this kernel."""
        self.n_evals += 1
        kernel = KernelParams(*np.exp(np.asarray(log_kernel, dtype=float)))
        logdet, ws = self._whitened(kernel)
        p = self.spec.L
        A = np.zeros((p, p))
        b = np.zeros(p)
        for c, W in ws:
            Bw = W[:, :-1]
            A += c * (Bw.T @ Bw)
            b += c * (Bw.T @ W[:, -1])
        try:
            beta = np.linalg.solve(A, b)
        except LinAlgError:
            raise RankDeficientDesign("pooled design matrix is rank deficient")
        quad = 0.0
        for c, W in ws:
            r = W[:, -1] - W[:, :-1] @ beta
            quad += c * (r @ r)
        return 0.5 * logdet + 0.5 * quad + 0.5 * self.n_total * LOG_2PI, beta

    def __call__(self, x):
        return self.value(x)

