"""Standard errors and confidence intervals for the resilience probability.

Two procedures:

* the fully nonparametric bootstrap, which resamples whole studies, refits
  both arms, resamples the new study's surrogates and recomputes ``p_hat``;
* the partially analytic bootstrap (PAB), which adds a delta-method term for
  parameter uncertainty (inverse numerical Hessian of the likelihood and a
  numerical gradient of ``p_hat``) to a bootstrap over the new study's
  surrogates with the fitted parameters held fixed. When the Hessian cannot
  be used it falls back to the full bootstrap.
"""

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import LinAlgError
from scipy.stats import norm

from . import _rng
from ._parallel import pmap
from .data import NewStudySurrogates, group_arrays
from .errors import InferenceFailed, NonFiniteEvaluation, ResilienceError
from .likelihood import GroupObjective, params_to_vector, vector_to_params
from .mle import FitOptions, fit_both_groups
from .resilience import DEFAULT_J, DeltaSampler, ResilienceEstimate, estimate_resilience

__all__ = [
    "BootstrapOptions",
    "PabDiagnostics",
    "bootstrap_inference",
    "pab_inference",
    "numerical_hessian",
    "numerical_gradient",
    "fit_models",
    "HESSIAN_STEP",
    "GRADIENT_STEP",
    "GRADIENT_J",
    "MAX_CONDITION",
    "MAX_FAILED_FRACTION",
]

log = logging.getLogger(__name__)

HESSIAN_STEP = 1e-4
GRADIENT_STEP = 5e-3
GRADIENT_J = 5000
MAX_CONDITION = 1e12
MAX_FAILED_FRACTION = 0.2


@dataclass(frozen=True)
class BootstrapOptions:
    """Replicate count, interval level, seed, and optimizer settings for refits.

    Refits start from the original fit's kernel parameters, so a single
    optimizer run per replicate is the default.
    """

    R: int = 200
    ci_level: float = 0.95
    seed: int = 0
    refit_options: FitOptions = field(default_factory=lambda: FitOptions(n_restarts=1))

    def __post_init__(self):
        if self.R < 2:
            raise ValueError("R must be at least 2")
        if not 0 < self.ci_level < 1:
            raise ValueError("ci_level must be in (0, 1)")


@dataclass(frozen=True)
class PabDiagnostics:
    hessian_cond: float
    grad_norm: float
    var_param: float
    var_sb: float
    fell_back: bool
    reason: str = ""


def _steps(x, h):
    return h * np.maximum(1.0, np.abs(x))


def _eval(f, x):
    v = float(f(x))
    if not np.isfinite(v):
        raise NonFiniteEvaluation(f"objective is not finite at {x}")
    return v


def numerical_hessian(f, at, h=HESSIAN_STEP):
    """Central second differences of ``f`` at ``at``.

    Coordinate ``i`` moves by ``h * max(1, |at_i|)``; the result is
    symmetrized as ``(H + H') / 2``.
    """
    x = np.array(at, dtype=float).ravel()
    n = x.size
    step = _steps(x, h)
    f0 = _eval(f, x)
    H = np.empty((n, n))

    def shifted(i, si, j=None, sj=0.0):
        z = x.copy()
        z[i] += si
        if j is not None:
            z[j] += sj
        return _eval(f, z)

    for i in range(n):
        hi = step[i]
        H[i, i] = (shifted(i, hi) - 2.0 * f0 + shifted(i, -hi)) / (hi * hi)
        for j in range(i + 1, n):
            hj = step[j]
            H[i, j] = H[j, i] = (shifted(i, hi, j, hj) - shifted(i, hi, j, -hj)
                                 - shifted(i, -hi, j, hj) + shifted(i, -hi, j, -hj)) / (4.0 * hi * hj)
    return 0.5 * (H + H.T)


def numerical_gradient(g, at, h=GRADIENT_STEP):
    """Central differences of ``g`` at ``at`` with steps ``h * max(1, |at_i|)``."""
    x = np.array(at, dtype=float).ravel()
    step = _steps(x, h)
    grad = np.empty(x.size)
    for i in range(x.size):
        up = x.copy()
        dn = x.copy()
        up[i] += step[i]
        dn[i] -= step[i]
        grad[i] = (_eval(g, up) - _eval(g, dn)) / (2.0 * step[i])
    return grad


def fit_models(studies, choice0, choice1, fit_options=None, inits=(None, None)):
    """Place knots from each arm's pooled surrogates and fit both arms."""
    spec0 = choice0.build(group_arrays(studies, 0)[0])
    spec1 = choice1.build(group_arrays(studies, 1)[0])
    return fit_both_groups(studies, spec0, spec1, fit_options, inits=inits)


def _resample_new(new, rng):
    return NewStudySurrogates(rng.choice(new.s0, new.s0.size, replace=True),
                              rng.choice(new.s1, new.s1.size, replace=True))


def _boot_replicate(task):
    studies, new, choice0, choice1, J, opts, inits, r = task
    seed = opts.seed
    rng = _rng.stream(seed, _rng.BOOT_STUDIES, r)
    idx = rng.integers(0, len(studies), len(studies))
    sample = [studies[i] for i in idx]
    try:
        models = fit_models(sample, choice0, choice1, opts.refit_options, inits)
        new_r = _resample_new(new, _rng.stream(seed, _rng.BOOT_SURROGATES, r))
        return estimate_resilience(models[0], models[1], new_r, J,
                                   _rng.derive_seed(seed, _rng.BOOT_DELTA, r)).p_hat
    except (ResilienceError, LinAlgError) as e:
        log.debug("bootstrap replicate %d failed: %s", r, e)
        return None


def bootstrap_inference(studies, new, choice0, choice1, J=DEFAULT_J, opts=None,
                        models=None, fit_options=None, workers=None):
    """Fully nonparametric bootstrap of the whole estimation procedure.

    Each replicate draws ``K`` studies with replacement, re-places knots and
    refits both arms, resamples the new study's surrogates within each arm,
    and recomputes ``p_hat``. The standard error is the standard deviation of
    the replicates and the interval is their percentile interval.

    ``models`` are the fits on the original data; they are computed when not
    supplied and give the reported point estimate. Replicates whose refit
    fails are skipped.

    Raises
    ------
    InferenceFailed
        If more than 20% of replicates fail.
    """
    opts = opts or BootstrapOptions()
    if len(studies) < 2:
        raise ValueError("the bootstrap needs at least 2 studies")
    if models is None:
        models = fit_models(studies, choice0, choice1, fit_options or FitOptions(seed=opts.seed))
    point = estimate_resilience(models[0], models[1], new, J, opts.seed)
    inits = (models[0].params.kernel, models[1].params.kernel)
    tasks = [(studies, new, choice0, choice1, J, opts, inits, r) for r in range(opts.R)]
    results = pmap(_boot_replicate, tasks, workers)
    reps = np.array([p for p in results if p is not None], dtype=float)
    n_failed = opts.R - reps.size
    if n_failed > MAX_FAILED_FRACTION * opts.R or reps.size < 2:
        raise InferenceFailed(f"{n_failed} of {opts.R} bootstrap replicates failed")
    if n_failed:
        log.warning("%d of %d bootstrap replicates failed and were skipped", n_failed, opts.R)
    alpha = (1.0 - opts.ci_level) / 2.0
    lo, hi = np.percentile(reps, [100 * alpha, 100 * (1 - alpha)])
    reps.setflags(write=False)
    return replace(point, se=float(np.std(reps, ddof=1)), ci=(float(lo), float(hi)),
                   method="nonparametric_bootstrap", replicates=reps, n_failed=n_failed)


def _pab_sb_replicate(task):
    models, new, J, seed, r = task
    new_r = _resample_new(new, _rng.stream(seed, _rng.PAB_SURROGATES, r))
    return estimate_resilience(models[0], models[1], new_r, J,
                               _rng.derive_seed(seed, _rng.PAB_DELTA, r)).p_hat


def _parameter_variance(studies, new, models, seed, hessian_step, gradient_step, gradient_J):
    """Delta-method variance of p_hat and the diagnostics behind it.

    Returns ``(var_param, hessian_cond, grad_norm, reason)``; ``reason`` is
    empty when the variance is usable.
    """
    x_hat = [params_to_vector(m.params) for m in models]
    hinvs = []
    conds = []
    for g, m in enumerate(models):
        obj = GroupObjective(studies, g, m.spec)
        try:
            H = numerical_hessian(obj.value, x_hat[g], hessian_step)
        except (NonFiniteEvaluation, ResilienceError, LinAlgError) as e:
            return np.nan, np.inf, np.nan, f"group {g}: hessian evaluation failed ({e})"
        cond = float(np.linalg.cond(H)) if np.all(np.isfinite(H)) else np.inf
        conds.append(cond)
        if not np.isfinite(cond) or cond > MAX_CONDITION:
            return np.nan, max(conds), np.nan, f"group {g}: hessian condition number {cond:.3g}"
        hinvs.append(np.linalg.inv(H))
    sizes = [x.size for x in x_hat]
    sampler = DeltaSampler(new, gradient_J, _rng.derive_seed(seed, _rng.PAB_GRADIENT))

    def p_of(x):
        m0 = models[0].with_params(vector_to_params(x[:sizes[0]]))
        m1 = models[1].with_params(vector_to_params(x[sizes[0]:]))
        return sampler.p_hat(m0, m1)

    try:
        grad = numerical_gradient(p_of, np.concatenate(x_hat), gradient_step)
    except (NonFiniteEvaluation, ResilienceError, LinAlgError) as e:
        return np.nan, max(conds), np.nan, f"p_hat gradient failed ({e})"
    parts = [grad[:sizes[0]], grad[sizes[0]:]]
    var_param = float(sum(gp @ Hi @ gp for gp, Hi in zip(parts, hinvs)))
    reason = ""
    if not np.isfinite(var_param) or var_param < 0:
        reason = f"delta-method variance is {var_param:.3g}"
    return var_param, max(conds), float(np.linalg.norm(grad)), reason


def pab_inference(studies, new, choice0, choice1, J=DEFAULT_J, opts=None, models=None,
                  fit_options=None, workers=None, hessian_step=HESSIAN_STEP,
                  gradient_step=GRADIENT_STEP, gradient_J=GRADIENT_J):
    """Partially analytic bootstrap.

    ``se**2 = var_param + var_sb`` where ``var_param = sum_g g_g' H_g^-1 g_g``
    (``H_g`` the numerical Hessian of arm ``g``'s negative log-likelihood at
    the fit, ``g_g`` the numerical gradient of ``p_hat`` in that arm's
    parameters, evaluated with common random numbers) and ``var_sb`` is the
    variance of ``p_hat`` over ``R`` resamples of the new study's surrogates
    with parameters fixed. The interval is ``p_hat -+ z * se`` clipped to
    ``[0, 1]``.

    If a Hessian is non-finite or has condition number above 1e12, or the
    delta-method variance comes out negative, the full bootstrap is run
    instead and the method is reported as ``pab_fallback_bootstrap``.

    Returns
    -------
    (ResilienceEstimate, PabDiagnostics)
    """
    opts = opts or BootstrapOptions()
    if len(studies) < 2:
        raise ValueError("PAB needs at least 2 studies")
    if models is None:
        models = fit_models(studies, choice0, choice1, fit_options or FitOptions(seed=opts.seed))
    var_param, cond, gnorm, reason = _parameter_variance(
        studies, new, models, opts.seed, hessian_step, gradient_step, gradient_J)
    if reason:
        log.info("PAB falling back to the nonparametric bootstrap: %s", reason)
        est = bootstrap_inference(studies, new, choice0, choice1, J, opts, models=models,
                                  workers=workers)
        diag = PabDiagnostics(cond, gnorm, np.nan, np.nan, fell_back=True, reason=reason)
        return replace(est, method="pab_fallback_bootstrap"), diag

    point = estimate_resilience(models[0], models[1], new, J, opts.seed)
    tasks = [(models, new, J, opts.seed, r) for r in range(opts.R)]
    reps = np.array(pmap(_pab_sb_replicate, tasks, workers), dtype=float)
    var_sb = float(np.var(reps, ddof=1))
    se = float(np.sqrt(var_param + var_sb))
    z = norm.ppf(1.0 - (1.0 - opts.ci_level) / 2.0)
    ci = (max(0.0, point.p_hat - z * se), min(1.0, point.p_hat + z * se))
    reps.setflags(write=False)
    est = replace(point, se=se, ci=ci, method="pab", replicates=reps)
    return est, PabDiagnostics(cond, gnorm, var_param, var_sb, fell_back=False)
