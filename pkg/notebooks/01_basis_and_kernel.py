"""
Spline mean functions and the study covariance
==============================================

Each arm's outcome mean is a B-spline in the surrogate, and outcomes within a
study are correlated through a squared-exponential kernel plus noise.
"""

# %%
import numpy as np

from surrogate_resilience import CUBIC_SPLINE, KernelParams, make_basis_spec
from surrogate_resilience.kernel import cov_matrix
from surrogate_resilience.spline_basis import design_matrix

rng = np.random.default_rng(0)
s = rng.normal(3.0, np.sqrt(3.0), 500)

# %% Knots sit at the quartiles of the pooled surrogates; the boundary knots at the range.
spec = CUBIC_SPLINE.build(s)
print("interior knots:", np.round(spec.interior_knots, 3))
print("boundary knots:", np.round(spec.boundary_knots, 3), " L =", spec.L)

# %% Every row of the design matrix is non-negative and sums to one.
B = design_matrix(spec, np.linspace(*spec.boundary_knots, 7))
print(np.round(B, 3))
print("row sums:", B.sum(axis=1))

# %% Values outside the training range are clamped to the nearest boundary.
lo, hi = spec.boundary_knots
print(np.array_equal(design_matrix(spec, [lo - 5]), design_matrix(spec, [lo])))

# %% Without interior knots the cubic basis is the Bernstein basis.
print(design_matrix(make_basis_spec([0.0, 1.0], 0), [0.5]))

# %% A study's covariance: long lengthscale means strongly correlated outcomes.
k = KernelParams(sigma2=1.0, theta=5.0, v2=1.0)
C = cov_matrix([2.0, 3.0, 4.0, 9.0], k)
print(np.round(C, 3))
print("smallest eigenvalue:", np.linalg.eigvalsh(C).min(), ">= v2 =", k.v2)
