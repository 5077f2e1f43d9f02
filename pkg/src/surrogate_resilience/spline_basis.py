"""B-spline basis for the group mean functions.

The basis is the full clamped B-spline basis on ``[lo, hi]`` (boundary knots
repeated ``degree + 1`` times), so it forms a partition of unity and the
intercept lives inside the coefficient vector. Inputs outside the boundary
knots are clamped before evaluation.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateRange, EmptyInput

__all__ = [
    "BasisSpec",
    "BasisChoice",
    "LINEAR",
    "CUBIC",
    "CUBIC_SPLINE",
    "basis_choice",
    "make_basis_spec",
    "eval_basis",
    "design_matrix",
]


@dataclass(frozen=True)
class BasisSpec:
    """Knot layout of a clamped B-spline basis.

    Attributes
    ----------
    degree : int
        Polynomial degree (3 for cubic).
    interior_knots : tuple of float
        Non-decreasing knots strictly inside ``boundary_knots``.
    boundary_knots : (float, float)
        ``(lo, hi)`` with ``lo < hi``.
    """

    degree: int
    interior_knots: tuple
    boundary_knots: tuple
    knots: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        lo, hi = (float(b) for b in self.boundary_knots)
        interior = tuple(float(k) for k in self.interior_knots)
        if self.degree < 0:
            raise ValueError("degree must be non-negative")
        if not (np.isfinite(lo) and np.isfinite(hi)) or not lo < hi:
            raise DegenerateRange(f"boundary knots must satisfy lo < hi, got {(lo, hi)}")
        if any(not lo < k < hi for k in interior):
            raise ValueError("interior knots must lie strictly inside the boundary knots")
        if any(b < a for a, b in zip(interior, interior[1:])):
            raise ValueError("interior knots must be non-decreasing")
        object.__setattr__(self, "interior_knots", interior)
        object.__setattr__(self, "boundary_knots", (lo, hi))
        p = self.degree
        t = np.array([lo] * (p + 1) + list(interior) + [hi] * (p + 1))
        t.setflags(write=False)
        object.__setattr__(self, "knots", t)

    @property
    def L(self):
        """Number of basis functions."""
        return len(self.interior_knots) + self.degree + 1

    def __eq__(self, other):
        if not isinstance(other, BasisSpec):
            return NotImplemented
        return (self.degree, self.interior_knots, self.boundary_knots) == (
            other.degree, other.interior_knots, other.boundary_knots)

    def __hash__(self):
        return hash((self.degree, self.interior_knots, self.boundary_knots))


@dataclass(frozen=True)
class BasisChoice:
    """Degree and interior-knot count; knots are placed from data at fit time."""

    degree: int
    n_interior: int

    def build(self, values):
        return make_basis_spec(values, self.n_interior, degree=self.degree)


LINEAR = BasisChoice(1, 0)
CUBIC = BasisChoice(3, 0)
CUBIC_SPLINE = BasisChoice(3, 3)

_NAMED = {"linear": LINEAR, "cubic": CUBIC, "cubic-spline": CUBIC_SPLINE,
          "cubic_spline": CUBIC_SPLINE}


def basis_choice(name, n_interior=None):
    """Look up ``linear``, ``cubic`` or ``cubic-spline``.

    ``n_interior`` overrides the knot count of the cubic spline.
    """
    try:
        choice = _NAMED[name]
    except KeyError:
        raise ValueError(f"unknown basis {name!r}; expected one of linear, cubic, cubic-spline")
    if n_interior is not None and choice is CUBIC_SPLINE:
        choice = BasisChoice(3, int(n_interior))
    return choice


def make_basis_spec(values, n_interior, degree=3):
    """Boundary knots at the data range, interior knots at equally spaced quantiles.

    Quantile levels are ``i / (n_interior + 1)`` for ``i = 1..n_interior``
    (linear interpolation between order statistics). Repeated quantiles, and
    quantiles that coincide with a boundary, are dropped, so ``L`` can come out
    smaller than ``n_interior + degree + 1``.
    """
    values = np.asarray(values, dtype=float).ravel()
    if values.size == 0:
        raise EmptyInput("cannot place knots on an empty sample")
    if n_interior < 0:
        raise ValueError("n_interior must be non-negative")
    if not np.all(np.isfinite(values)):
        raise ValueError("surrogate values must be finite")
    lo, hi = float(values.min()), float(values.max())
    if not lo < hi:
        raise DegenerateRange("surrogate values are all identical")
    levels = np.arange(1, n_interior + 1) / (n_interior + 1)
    q = np.unique(np.quantile(values, levels)) if n_interior else np.empty(0)
    q = q[(q > lo) & (q < hi)]
    return BasisSpec(degree=degree, interior_knots=tuple(q), boundary_knots=(lo, hi))


def _nonzero_basis(spec, x):
    """Cox-de Boor triangle: the ``degree + 1`` non-vanishing functions at each x.

    Returns ``(span, values)`` where ``values[:, r]`` is basis function
    ``span - degree + r`` evaluated at ``x``.
    """
    t = spec.knots
    p = spec.degree
    L = spec.L
    span = np.searchsorted(t, x, side="right") - 1
    # x == hi belongs to the last non-empty span
    span = np.clip(span, p, L - 1)
    m = x.shape[0]
    N = np.zeros((m, p + 1))
    N[:, 0] = 1.0
    left = np.empty((m, p + 1))
    right = np.empty((m, p + 1))
    for j in range(1, p + 1):
        left[:, j] = x - t[span + 1 - j]
        right[:, j] = t[span + j] - x
        saved = np.zeros(m)
        for r in range(j):
            temp = N[:, r] / (right[:, r + 1] + left[:, j - r])
            N[:, r] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        N[:, j] = saved
    return span, N


def design_matrix(spec, s_vec):
    """Basis matrix with row ``i`` equal to ``eval_basis(spec, s_vec[i])``."""
    x = np.asarray(s_vec, dtype=float).ravel()
    lo, hi = spec.boundary_knots
    x = np.clip(x, lo, hi)
    out = np.zeros((x.shape[0], spec.L))
    if x.shape[0] == 0:
        return out
    span, N = _nonzero_basis(spec, x)
    rows = np.arange(x.shape[0])[:, None]
    cols = span[:, None] - spec.degree + np.arange(spec.degree + 1)[None, :]
    out[rows, cols] = N
    return out


def eval_basis(spec, s):
    """The length-``L`` basis vector at a single surrogate value."""
    return design_matrix(spec, np.array([float(s)]))[0]
