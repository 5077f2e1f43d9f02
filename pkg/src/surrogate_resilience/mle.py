"""Maximum-likelihood fit of one arm's mean coefficients and kernel parameters."""

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize
from scipy.spatial.distance import pdist

from . import _rng
from .data import group_arrays
from .errors import NotPositiveDefinite, OptimizationFailed, RankDeficientDesign
from .kernel import KernelParams
from .likelihood import GroupObjective, GroupParams
from .spline_basis import BasisSpec, design_matrix

__all__ = ["FitOptions", "FittedGroupModel", "initialize", "fit_group", "fit_both_groups"]

VARIANCE_FLOOR = 1e-4
LOG_HALF_WIDTH = 12.0
# median pairwise distance is computed on at most this many pooled points
_MEDIAN_POINTS = 3000
_PENALTY = 1e20


@dataclass(frozen=True)
class FitOptions:
    """Optimizer settings.

    ``bounds`` holds ``(lo, hi)`` pairs for ``log sigma2``, ``log theta`` and
    ``log v2``; ``None`` means ``+-12`` around the data-driven initialization.
    """

    max_iters: int = 500
    rel_tol: float = 1e-10
    n_restarts: int = 3
    bounds: tuple | None = None
    seed: int = 0

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.n_restarts < 1:
            raise ValueError("n_restarts must be at least 1")
        if self.bounds is not None:
            b = np.asarray(self.bounds, dtype=float)
            if b.shape != (3, 2) or not np.all(np.isfinite(b)) or np.any(b[:, 0] > b[:, 1]):
                raise ValueError("bounds must be three finite, ordered (lo, hi) pairs")


@dataclass(frozen=True, eq=False)
class FittedGroupModel:
    spec: BasisSpec
    params: GroupParams
    converged: bool
    final_neg_loglik: float
    n_evals: int
    log_bounds: np.ndarray = field(default=None, repr=False)

    def with_params(self, params):
        return replace(self, params=params)


def _median_pairwise_distance(s):
    s = np.sort(np.asarray(s, dtype=float))
    if s.size > _MEDIAN_POINTS:
        s = s[np.linspace(0, s.size - 1, _MEDIAN_POINTS).round().astype(int)]
    if s.size < 2:
        return 0.0
    return float(np.median(pdist(s[:, None])))


def initialize(studies, group, spec):
    """Starting values: pooled OLS for beta, residual variance split evenly.

    ``sigma2 = v2 = var(residuals) / 2`` (floored at 1e-4) and ``theta`` is the
    median absolute pairwise distance of the pooled surrogates, or 1 if that
    is zero.

    Raises
    ------
    RankDeficientDesign
        If the pooled design matrix lacks full column rank.
    """
    s, y = group_arrays(studies, group)
    B = design_matrix(spec, s)
    if B.shape[0] < B.shape[1] or np.linalg.matrix_rank(B) < B.shape[1]:
        raise RankDeficientDesign(
            f"group {group}: pooled design ({B.shape[0]} x {B.shape[1]}) is rank deficient")
    beta = np.linalg.lstsq(B, y, rcond=None)[0]
    r = y - B @ beta
    var_r = float(np.var(r, ddof=1)) if r.size > 1 else 0.0
    half = max(var_r / 2.0, VARIANCE_FLOOR)
    theta = _median_pairwise_distance(s)
    if not theta > 0:
        theta = 1.0
    return GroupParams(beta, KernelParams(half, theta, half))


def _log_kernel(kernel):
    return np.log([kernel.sigma2, kernel.theta, kernel.v2])


def fit_group(studies, group, spec, opts=None, init=None):
    """Maximize the pooled likelihood of arm ``group``.

    The search runs over the log kernel parameters with ``beta`` profiled out
    by generalized least squares, which reaches the same optimum as a joint
    search over all parameters. Restart 0 starts from ``init`` (a
    ``KernelParams``) or from ``initialize``; restart ``r > 0`` perturbs that
    start by a log-normal factor drawn from ``(opts.seed, group, r)``.

    Returns
    -------
    FittedGroupModel
        ``converged`` is true when the winning run stopped on the relative
        objective change criterion.
    """
    opts = opts or FitOptions()
    if len(studies) == 0:
        raise ValueError("need at least one study")
    p0 = initialize(studies, group, spec)
    obj = GroupObjective(studies, group, spec)
    center = _log_kernel(p0.kernel)
    if opts.bounds is None:
        bounds = np.column_stack([center - LOG_HALF_WIDTH, center + LOG_HALF_WIDTH])
    else:
        bounds = np.asarray(opts.bounds, dtype=float)
    start = _log_kernel(init) if init is not None else center
    start = np.clip(start, bounds[:, 0], bounds[:, 1])

    def f(z):
        try:
            val = obj.profile(z)[0]
        except (NotPositiveDefinite, FloatingPointError):
            return _PENALTY
        return val if np.isfinite(val) else _PENALTY

    runs = []
    for r in range(opts.n_restarts):
        z0 = start
        if r > 0:
            rng = _rng.stream(opts.seed, _rng.RESTART, group, r)
            z0 = np.clip(start + rng.normal(0.0, 1.0, 3), bounds[:, 0], bounds[:, 1])
        res = minimize(f, z0, method="L-BFGS-B", bounds=bounds,
                       options={"maxiter": opts.max_iters, "ftol": opts.rel_tol})
        runs.append((float(res.fun), r, res))
    finite = [run for run in runs if run[0] < _PENALTY]
    if not finite:
        raise OptimizationFailed(f"group {group}: every restart hit a non-finite objective")
    _, _, best = min(finite, key=lambda run: (run[0], run[1]))

    z = best.x
    start_val = f(start)
    if start_val < best.fun:
        z = start
    nll, beta = obj.profile(z)
    params = GroupParams(beta, KernelParams(*np.exp(z)))
    return FittedGroupModel(
        spec=spec,
        params=params,
        converged=bool(best.success),
        final_neg_loglik=float(nll),
        n_evals=obj.n_evals,
        log_bounds=bounds,
    )


def fit_both_groups(studies, spec0, spec1, opts=None, inits=(None, None)):
    """Fit control and treated arms independently; errors name the failing arm."""
    return tuple(fit_group(studies, g, spec, opts, init=inits[g])
                 for g, spec in ((0, spec0), (1, spec1)))
