"""Resilience probability of a surrogate marker across completed studies."""

from .data import NewStudySurrogates, StudyData
from .elliott import compute_study_effects, elliott_prob, fit_bivariate_meta, new_study_delta_s
from .errors import ResilienceError
from .inference import BootstrapOptions, bootstrap_inference, fit_models, pab_inference
from .kernel import KernelParams
from .mle import FitOptions, fit_both_groups, fit_group
from .resilience import estimate_resilience, predict_mean
from .simulation import generate_dataset, run_simulation, true_paradox_prob
from .spline_basis import CUBIC, CUBIC_SPLINE, LINEAR, basis_choice, make_basis_spec

__all__ = [
    "StudyData",
    "NewStudySurrogates",
    "KernelParams",
    "ResilienceError",
    "LINEAR",
    "CUBIC",
    "CUBIC_SPLINE",
    "basis_choice",
    "make_basis_spec",
    "FitOptions",
    "fit_group",
    "fit_both_groups",
    "fit_models",
    "estimate_resilience",
    "predict_mean",
    "BootstrapOptions",
    "bootstrap_inference",
    "pab_inference",
    "compute_study_effects",
    "fit_bivariate_meta",
    "elliott_prob",
    "new_study_delta_s",
    "generate_dataset",
    "true_paradox_prob",
    "run_simulation",
]
