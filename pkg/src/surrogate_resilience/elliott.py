"""Bivariate random-effects meta-analysis comparator.

Study-level treatment effects on the surrogate and the outcome are modeled as

    (dS_k, dY_k) ~ N((beta_s, beta_y), D + W_k)

with ``W_k`` the within-study sampling covariance (plugged in as known) and
``D`` the between-study covariance, fit by maximum likelihood. The comparator
probability is ``P(dY < 0 | dS = observed new-study effect)`` under the fitted
bivariate normal.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.stats import norm

from .errors import DegenerateConditional, OptimizationFailed, SingletonGroup

__all__ = ["StudyEffects", "MetaFit", "compute_study_effects", "fit_bivariate_meta",
           "elliott_prob", "new_study_delta_s"]

LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True, eq=False)
class StudyEffects:
    delta_s: float
    delta_y: float
    within_cov: np.ndarray


@dataclass(frozen=True)
class MetaFit:
    beta_s: float
    beta_y: float
    d_aa: float
    d_ab: float
    d_bb: float
    neg_loglik: float = float("nan")
    converged: bool = True

    @property
    def D(self):
        return np.array([[self.d_aa, self.d_ab], [self.d_ab, self.d_bb]])


def compute_study_effects(study):
    """Difference in arm means of (s, y) and its sampling covariance.

    The covariance is ``sum_g cov_g(s, y) / n_g`` using each arm's sample
    covariance (divisor ``n_g - 1``).
    """
    W = np.zeros((2, 2))
    means = []
    for g in (0, 1):
        s, y = study.group(g)
        if s.size < 2:
            raise SingletonGroup(
                f"study {study.study_id}: group {g} has {s.size} observation(s)")
        W += np.cov(s, y, ddof=1) / s.size
        means.append((s.mean(), y.mean()))
    return StudyEffects(
        delta_s=float(means[1][0] - means[0][0]),
        delta_y=float(means[1][1] - means[0][1]),
        within_cov=W,
    )


def new_study_delta_s(new):
    """Observed surrogate effect in the new study (difference of arm means)."""
    return float(new.s1.mean() - new.s0.mean())


def _chol_to_D(z):
    a, b, c = z
    return np.array([[a * a, a * b], [a * b, b * b + c * c]])


def _profile(z, E, W):
    """Negative log-likelihood with the mean profiled out by GLS."""
    V = _chol_to_D(z)[None] + W
    det = V[:, 0, 0] * V[:, 1, 1] - V[:, 0, 1] ** 2
    if np.any(det <= 0) or not np.all(np.isfinite(det)):
        return np.inf, None
    Vinv = np.empty_like(V)
    Vinv[:, 0, 0] = V[:, 1, 1] / det
    Vinv[:, 1, 1] = V[:, 0, 0] / det
    Vinv[:, 0, 1] = Vinv[:, 1, 0] = -V[:, 0, 1] / det
    A = Vinv.sum(axis=0)
    b = np.einsum("kij,kj->i", Vinv, E)
    beta = np.linalg.solve(A, b)
    r = E - beta
    quad = np.einsum("ki,kij,kj->", r, Vinv, r)
    return 0.5 * (np.sum(np.log(det)) + quad) + E.shape[0] * LOG_2PI, beta


def _start_from(S):
    w, U = np.linalg.eigh(0.5 * (S + S.T))
    scale = max(float(np.max(np.abs(w))), 1e-8)
    w = np.clip(w, 1e-6 * scale, None)
    L = np.linalg.cholesky(U @ np.diag(w) @ U.T)
    return np.array([L[0, 0], L[1, 0], L[1, 1]])


def fit_bivariate_meta(effects):
    """Maximum-likelihood (not REML) fit of the bivariate random-effects model.

    ``D`` is parametrized by its Cholesky factor, so every iterate is positive
    semidefinite; the mean is profiled out in closed form.
    """
    K = len(effects)
    if K < 3:
        raise ValueError("need at least 3 studies")
    E = np.array([[e.delta_s, e.delta_y] for e in effects], dtype=float)
    W = np.stack([np.asarray(e.within_cov, dtype=float) for e in effects])
    S_ml = np.cov(E.T, ddof=0)
    moment = S_ml - W.mean(axis=0)
    starts = [_start_from(moment), _start_from(S_ml),
              np.sqrt(max(np.trace(S_ml), 1e-8) / 2.0) * np.array([1.0, 0.0, 1.0])]

    def f(z):
        v = _profile(z, E, W)[0]
        return v if np.isfinite(v) else 1e300

    best = None
    for z0 in starts:
        res = minimize(f, z0, method="BFGS", options={"gtol": 1e-9, "maxiter": 2000})
        res2 = minimize(f, res.x, method="Nelder-Mead",
                        options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000})
        for cand in (res, res2):
            if best is None or cand.fun < best.fun:
                best = cand
    if best is None or not best.fun < 1e300:
        raise OptimizationFailed("bivariate meta-analysis likelihood is not finite anywhere")
    nll, beta = _profile(best.x, E, W)
    D = _chol_to_D(best.x)
    return MetaFit(
        beta_s=float(beta[0]), beta_y=float(beta[1]),
        d_aa=float(D[0, 0]), d_ab=float(D[0, 1]), d_bb=float(D[1, 1]),
        neg_loglik=float(nll), converged=bool(best.success),
    )


def elliott_prob(fit, delta_s_new):
    """``P(dY < 0 | dS = delta_s_new)`` under the fitted between-study normal.

    Raises
    ------
    DegenerateConditional
        If ``d_aa`` is zero or the conditional variance is below ``-1e-12``.
        A conditional variance in ``[-1e-12, 0]`` is treated as zero and the
        result is 1 or 0 by the sign of the conditional mean.
    """
    if not fit.d_aa > 0:
        raise DegenerateConditional("between-study surrogate variance d_aa is zero")
    slope = fit.d_ab / fit.d_aa
    mu = fit.beta_y + slope * (float(delta_s_new) - fit.beta_s)
    var = fit.d_bb - fit.d_ab * slope
    if var < -1e-12:
        raise DegenerateConditional(f"conditional variance is negative ({var:.3g})")
    if var <= 0:
        return 1.0 if mu < 0 else 0.0
    return float(norm.cdf(-mu / np.sqrt(var)))
