"""Synthetic treatment effects for the new study and the resilience probability.

For each arm the fitted model gives a mean vector and covariance at the new
study's observed surrogates. One synthetic outcome vector is drawn per arm
and per replicate ``j``; the replicate's treatment effect is the difference of
the two arms' synthetic means, and ``p_hat`` is the fraction of replicates
with a negative effect.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _rng
from .kernel import cov_cholesky
from .spline_basis import design_matrix

__all__ = [
    "SyntheticDeltaSample",
    "ResilienceEstimate",
    "METHODS",
    "DEFAULT_J",
    "predict_mean",
    "draw_synthetic_outcomes",
    "DeltaSampler",
    "estimate_resilience",
]

DEFAULT_J = 500
METHODS = ("point", "nonparametric_bootstrap", "pab", "pab_fallback_bootstrap")


@dataclass(frozen=True, eq=False)
class SyntheticDeltaSample:
    deltas: np.ndarray
    J: int
    seed: int


@dataclass(frozen=True, eq=False)
class ResilienceEstimate:
    """Point estimate of the paradox probability, with optional uncertainty."""

    p_hat: float
    delta_sample: SyntheticDeltaSample
    se: float | None = None
    ci: tuple | None = None
    method: str = "point"
    replicates: np.ndarray | None = field(default=None, repr=False)
    n_failed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.ci is not None and not self.ci[0] <= self.ci[1]:
            raise ValueError("ci lower bound exceeds upper bound")


def predict_mean(model, s_vec):
    """Fitted mean ``B(s) @ beta`` at the given surrogate values."""
    return design_matrix(model.spec, s_vec) @ model.params.beta


def draw_synthetic_outcomes(model, s_vec, rng, size=None):
    """One (or ``size``) outcome vectors from the fitted distribution at ``s_vec``.

    ``mean + L z`` where ``L`` is the Cholesky factor of the fitted covariance,
    noise variance included, and ``z`` is standard normal from ``rng``.
    """
    s = np.asarray(s_vec, dtype=float).ravel()
    m = predict_mean(model, s)
    _, L = cov_cholesky(s, model.params.kernel)
    if size is None:
        return m + L @ rng.standard_normal(s.size)
    z = rng.standard_normal((size, s.size))
    return m + z @ L.T


class DeltaSampler:
    """Synthetic treatment effects driven by a fixed block of standard normals.

    Row ``j`` of the normals for arm ``g`` comes from the stream keyed by
    ``(seed, g)``, so any two calls with the same seed share random numbers.
    That makes ``deltas`` a smooth function of the model parameters, which
    the finite-difference gradient relies on.
    """

    def __init__(self, new, J, seed, key=(_rng.SYNTHETIC,)):
        if J < 1:
            raise ValueError("J must be at least 1")
        self.new = new
        self.J = int(J)
        self.seed = int(seed)
        self._z = [
            _rng.stream(seed, *key, g).standard_normal((self.J, new.group(g).size))
            for g in (0, 1)
        ]

    def _arm_means(self, model, g):
        s = self.new.group(g)
        m = predict_mean(model, s)
        _, L = cov_cholesky(s, model.params.kernel)
        # mean over i of (L z)_i is z . (column sums of L) / n
        w = L.sum(axis=0) / s.size
        return m.mean() + self._z[g] @ w

    def deltas(self, model0, model1):
        return self._arm_means(model1, 1) - self._arm_means(model0, 0)

    def p_hat(self, model0, model1):
        return float(np.count_nonzero(self.deltas(model0, model1) < 0)) / self.J


def estimate_resilience(model0, model1, new, J=DEFAULT_J, seed=0):
    """Fraction of ``J`` synthetic treatment effects that are negative.

    A delta of exactly zero is not counted as a paradox.
    """
    sampler = DeltaSampler(new, J, seed)
    d = sampler.deltas(model0, model1)
    d.setflags(write=False)
    p = float(np.count_nonzero(d < 0)) / sampler.J
    return ResilienceEstimate(p_hat=p, delta_sample=SyntheticDeltaSample(d, sampler.J, int(seed)))
