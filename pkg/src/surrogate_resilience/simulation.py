"""Simulation settings 1-6, data generation, Monte Carlo truth and study harness."""

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import _rng
from .data import NewStudySurrogates, StudyData
from .kernel import KernelParams, cov_cholesky

__all__ = [
    "SimSetting",
    "SETTINGS",
    "get_setting",
    "generate_dataset",
    "true_paradox_prob",
    "SimResult",
    "run_simulation",
    "write_results_csv",
    "ESTIMATORS",
]

log = logging.getLogger(__name__)


# Mean functions are module-level so settings pickle into worker processes.
def _lin_2s_m1(s):
    return 2.0 * s - 1.0


def _lin_s_p3(s):
    return s + 3.0


def _quad(s):
    return (s - 0.5) ** 2 - 1.0


def _lin_3s_p1(s):
    return 3.0 * s + 1.0


def _trig_a(s):
    return 0.2 + 0.4 * np.sin(s) + 0.4 * np.cos(s)


def _trig_b(s):
    return 0.6 + 0.85 * np.sin(s) + 0.85 * np.cos(s)


def _trig_c(s):
    return 0.2 + 0.4 * np.sin(s) + 0.5 * np.cos(s)


def _lin_15s_p1(s):
    return 1.5 * s + 1.0


def _lin_3s_m2(s):
    return 3.0 * s - 2.0


@dataclass(frozen=True)
class SimSetting:
    """A data-generating mechanism.

    Surrogate distributions are ``(mean, variance)`` pairs per arm, for the
    completed studies (``s_train``) and the new study (``s_new``).
    """

    id: int
    m0: object = field(repr=False)
    m1: object = field(repr=False)
    gp: KernelParams
    s_train: tuple
    s_new: tuple

    def __post_init__(self):
        for dist in (*self.s_train, *self.s_new):
            if not dist[1] > 0:
                raise ValueError("surrogate variances must be positive")

    def mean(self, g):
        return self.m1 if g else self.m0


_GP = KernelParams(sigma2=1.0, theta=5.0, v2=1.0)

SETTINGS = {
    1: SimSetting(1, _lin_2s_m1, _lin_s_p3, _GP,
                  s_train=((3.0, 3.0), (4.0, 3.0)), s_new=((4.75, 1.0), (5.25, 1.0))),
    2: SimSetting(2, _quad, _lin_3s_p1, _GP,
                  s_train=((0.9, 1.5), (2.2, 4.5)), s_new=((-0.7, 1.0), (-0.2, 2.0))),
    3: SimSetting(3, _trig_a, _trig_b, _GP,
                  s_train=((5.0, 1.0), (6.0, 2.0)), s_new=((4.1, 0.5), (4.1, 0.5))),
    4: SimSetting(4, _lin_15s_p1, _lin_3s_m2, _GP,
                  s_train=((2.0, 3.0), (3.0, 3.0)), s_new=((1.75, 1.0), (2.75, 1.0))),
    5: SimSetting(5, _quad, _lin_3s_p1, _GP,
                  s_train=((0.9, 1.5), (2.2, 4.5)), s_new=((-0.08, 1.0), (0.45, 2.0))),
    6: SimSetting(6, _trig_c, _trig_b, KernelParams(sigma2=0.1, theta=5.0, v2=0.5),
                  s_train=((5.0, 1.0), (6.0, 2.0)), s_new=((5.5, 0.5), (6.5, 0.5))),
}


def get_setting(setting):
    if isinstance(setting, SimSetting):
        return setting
    try:
        return SETTINGS[int(setting)]
    except (KeyError, ValueError):
        raise ValueError(f"unknown setting {setting!r}; expected 1..6")


def _draw_arm(setting, g, dist, n, rng):
    mean, var = dist
    s = rng.normal(mean, math.sqrt(var), n)
    _, L = cov_cholesky(s, setting.gp)
    y = setting.mean(g)(s) + L @ rng.standard_normal(n)
    return s, y


def generate_dataset(setting, K, n_per_group, seed, n_new=None):
    """Simulate ``K`` completed studies and a new study.

    Returns ``(studies, new, hidden)`` where ``hidden = (y0, y1)`` are the new
    study's outcomes, kept only for diagnostics. ``n_new`` defaults to
    ``n_per_group``.
    """
    setting = get_setting(setting)
    if K < 1 or n_per_group < 1:
        raise ValueError("K and n_per_group must be at least 1")
    n_new = n_per_group if n_new is None else n_new
    studies = []
    for k in range(K):
        arms = []
        for g in (0, 1):
            rng = _rng.stream(seed, _rng.GENERATE, 0, k, g)
            arms.append(_draw_arm(setting, g, setting.s_train[g], n_per_group, rng))
        studies.append(StudyData(f"study{k + 1}", arms[0][0], arms[0][1], arms[1][0], arms[1][1]))
    new_arms = [_draw_arm(setting, g, setting.s_new[g], n_new,
                          _rng.stream(seed, _rng.GENERATE, 1, 0, g)) for g in (0, 1)]
    new = NewStudySurrogates(new_arms[0][0], new_arms[1][0])
    hidden = (new_arms[0][1], new_arms[1][1])
    return studies, new, hidden


def true_paradox_prob(setting, n_new_per_group, n_mc=100_000, seed=0, chunk=250):
    """Monte Carlo probability that a freshly generated new study has a negative effect.

    Each replicate draws the new study's surrogates, then its difference in
    arm means of generated outcomes. Given the surrogates that difference is
    exactly normal, with mean ``mean(m1(S1)) - mean(m0(S0))`` and variance
    ``sum_g 1' C_g 1 / n**2``, so it is drawn directly from that law instead
    of through full outcome vectors.
    """
    setting = get_setting(setting)
    if n_mc < 1000:
        raise ValueError("n_mc must be at least 1000")
    n = int(n_new_per_group)
    gp = setting.gp
    rng = _rng.stream(seed, _rng.SIM_TRUTH)
    negative = 0
    done = 0
    while done < n_mc:
        c = min(chunk, n_mc - done)
        delta = np.zeros(c)
        for g, sign in ((0, -1.0), (1, 1.0)):
            mean, var = setting.s_new[g]
            s = rng.normal(mean, math.sqrt(var), (c, n))
            d = s[:, :, None] - s[:, None, :]
            ksum = gp.sigma2 * np.exp((d * d) * (-0.5 / gp.theta ** 2)).sum(axis=(1, 2))
            var_mean = (ksum + n * gp.v2) / n ** 2
            arm = setting.mean(g)(s).mean(axis=1) + np.sqrt(var_mean) * rng.standard_normal(c)
            delta += sign * arm
        negative += int(np.count_nonzero(delta < 0))
        done += c
    return negative / n_mc


ESTIMATORS = ("linear", "cubic", "cubic-spline")
INFERENCE_METHODS = ("none", "bootstrap", "pab")


@dataclass(frozen=True)
class SimResult:
    """Summary of one estimator over the iterations of one configuration.

    ``est_mean`` and ``ese`` are the mean and standard deviation of ``p_hat``;
    ``ase`` is the mean estimated standard error and ``coverage`` the fraction
    of intervals containing ``truth`` (both NaN without inference). ``mv_est``
    is the mean comparator probability.
    """

    setting_id: int
    estimator: str
    truth: float
    est_mean: float
    ese: float
    ase: float
    coverage: float
    mv_est: float
    iterations: int
    n_failed: int = 0
    inference: str = "none"
    K: int = 0
    n: int = 0
    p_hats: tuple = field(default=(), repr=False)
    ses: tuple = field(default=(), repr=False)
    notes: tuple = ()

    def __post_init__(self):
        if np.isfinite(self.coverage) and not 0.0 <= self.coverage <= 1.0:
            raise ValueError("coverage must lie in [0, 1]")


def _sim_iteration(task):
    # heavy imports are local so this module stays importable on its own
    from .elliott import compute_study_effects, elliott_prob, fit_bivariate_meta, new_study_delta_s
    from .errors import ResilienceError
    from .inference import BootstrapOptions, bootstrap_inference, fit_models, pab_inference
    from .mle import FitOptions
    from .resilience import estimate_resilience
    from .spline_basis import basis_choice

    setting_id, K, n, estimators, inference, J, R, seed, it, with_mv = task
    iseed = _rng.derive_seed(seed, _rng.SIM_ITERATION, it)
    studies, new, _ = generate_dataset(setting_id, K, n, iseed)
    out = {"iteration": it, "estimators": {}, "mv": float("nan")}
    for name in estimators:
        choice = basis_choice(name)
        try:
            models = fit_models(studies, choice, choice, FitOptions(seed=iseed))
            if inference == "none":
                est = estimate_resilience(models[0], models[1], new, J, iseed)
            else:
                opts = BootstrapOptions(R=R, seed=iseed)
                if inference == "bootstrap":
                    est = bootstrap_inference(studies, new, choice, choice, J, opts,
                                              models=models, workers=1)
                else:
                    est = pab_inference(studies, new, choice, choice, J, opts,
                                        models=models, workers=1)[0]
            out["estimators"][name] = (est.p_hat, est.se, est.ci, est.method)
        except (ResilienceError, np.linalg.LinAlgError) as e:
            out["estimators"][name] = None
            out.setdefault("errors", []).append(f"{name}: {e}")
    if with_mv:
        try:
            fit = fit_bivariate_meta([compute_study_effects(st) for st in studies])
            out["mv"] = elliott_prob(fit, new_study_delta_s(new))
        except ResilienceError as e:
            out.setdefault("errors", []).append(f"comparator: {e}")
    return out


def run_simulation(setting, K, n, iterations, estimators=("cubic-spline",), inference_method="none",
                   seed=0, J=500, R=100, n_mc=100_000, truth=None, with_mv=True, workers=None):
    """Repeat generate / fit / estimate over ``iterations`` simulated datasets.

    Returns one ``SimResult`` per estimator. Failed iterations are logged and
    excluded from that estimator's summaries. With a single iteration the
    empirical standard deviation is reported as 0 and flagged in ``notes``.
    ``truth`` defaults to ``true_paradox_prob`` for the configuration.
    """
    from ._parallel import pmap

    setting = get_setting(setting)
    if iterations < 1:
        raise ValueError("iterations must be at least 1")
    for name in estimators:
        if name not in ESTIMATORS:
            raise ValueError(f"unknown estimator {name!r}")
    if inference_method not in INFERENCE_METHODS:
        raise ValueError(f"unknown inference method {inference_method!r}")
    if truth is None:
        truth = true_paradox_prob(setting, n, n_mc, _rng.derive_seed(seed, _rng.SIM_TRUTH))
    tasks = [(setting.id, K, n, tuple(estimators), inference_method, J, R, seed, it, with_mv)
             for it in range(iterations)]
    rows = sorted(pmap(_sim_iteration, tasks, workers), key=lambda r: r["iteration"])
    for r in rows:
        for msg in r.get("errors", ()):
            log.warning("setting %d iteration %d failed: %s", setting.id, r["iteration"], msg)
    mv = np.array([r["mv"] for r in rows], dtype=float)
    mv_est = float(np.nanmean(mv)) if np.any(np.isfinite(mv)) else float("nan")
    results = []
    for name in estimators:
        ok = [r["estimators"][name] for r in rows if r["estimators"][name] is not None]
        notes = []
        p = np.array([o[0] for o in ok], dtype=float)
        if p.size == 0:
            est_mean = ese = float("nan")
            notes.append("every iteration failed")
        else:
            est_mean = float(p.mean())
            ese = float(p.std(ddof=1)) if p.size > 1 else 0.0
            if p.size == 1:
                notes.append("single iteration: ESE set to 0")
        if inference_method == "none" or not ok:
            ase = coverage = float("nan")
            ses = ()
        else:
            se = np.array([o[1] for o in ok], dtype=float)
            ase = float(se.mean())
            coverage = float(np.mean([o[2][0] <= truth <= o[2][1] for o in ok]))
            ses = tuple(se.tolist())
            n_fallback = sum(o[3] == "pab_fallback_bootstrap" for o in ok)
            if n_fallback:
                notes.append(f"{n_fallback} iterations used the bootstrap fallback")
        results.append(SimResult(
            setting_id=setting.id, estimator=name, truth=float(truth), est_mean=est_mean,
            ese=ese, ase=ase, coverage=coverage, mv_est=mv_est, iterations=iterations,
            n_failed=iterations - len(ok), inference=inference_method, K=K, n=n,
            p_hats=tuple(p.tolist()), ses=ses, notes=tuple(notes)))
    return results


RESULT_COLUMNS = ("setting", "estimator", "truth", "est", "ese", "ase", "cp", "mv")


def _fmt(x):
    return "" if x is None or not np.isfinite(x) else f"{x:.10g}"


def write_results_csv(results, path):
    """One row per (setting, estimator)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        for r in results:
            w.writerow([r.setting_id, r.estimator, _fmt(r.truth), _fmt(r.est_mean), _fmt(r.ese),
                        _fmt(r.ase), _fmt(r.coverage), _fmt(r.mv_est)])
