"""Reading study data and writing results and plot data.

Input is a single long-format CSV with header ``study_id,group,s,y``. Rows of
the new study leave ``y`` empty.
"""

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from . import _rng
from .data import NewStudySurrogates, StudyData
from .errors import IoError, MixedNewStudy, ParseError
from .kernel import KernelParams, cov_cholesky
from .resilience import predict_mean
from .spline_basis import BasisChoice

__all__ = [
    "Dataset",
    "RunConfig",
    "HEADER",
    "DEFAULT_NEW_STUDY",
    "load_csv",
    "write_csv",
    "model_summary",
    "emit_results",
    "emit_fit",
    "read_results",
    "plot_grid",
    "emit_plot_data",
]

HEADER = ("study_id", "group", "s", "y")
DEFAULT_NEW_STUDY = "new"
GRID_POINTS = 200
DIGITS = 10


@dataclass(frozen=True, eq=False)
class Dataset:
    studies: list
    new_study: NewStudySurrogates | None = None
    source_path: str = ""

    def __post_init__(self):
        ids = [st.study_id for st in self.studies]
        if len(set(ids)) != len(ids):
            raise ValueError("study ids must be unique")


@dataclass(frozen=True)
class RunConfig:
    """Settings of one command-line run."""

    basis: tuple = (BasisChoice(3, 3), BasisChoice(3, 3))
    J: int = 500
    R: int = 200
    inference: str = "none"
    seed: int = 0
    output_path: str = ""
    ci_level: float = 0.95

    def __post_init__(self):
        if self.J < 1 or self.R < 1:
            raise ValueError("J and R must be at least 1")
        if self.inference not in ("none", "bootstrap", "pab"):
            raise ValueError(f"unknown inference method {self.inference!r}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")


def _number(text, line, column):
    try:
        x = float(text)
    except ValueError:
        raise ParseError(line, column, f"not a number: {text!r}")
    if not math.isfinite(x):
        raise ParseError(line, column, f"non-finite value {text!r}")
    return x


def load_csv(path, new_study=None):
    """Parse a long-format study file.

    The new study is the one whose id is ``new_study`` (default ``"new"``).
    Its ``y`` cells must be empty, unless ``new_study`` is given explicitly and
    every one of its rows has ``y``; then that study is held out and its
    outcomes are ignored. Every other study must have ``y`` on every row.

    Raises
    ------
    ParseError
        With the 1-based line number (the header is line 1) and column.
    MixedNewStudy
        If a study has ``y`` on some rows and not on others.
    """
    new_id = DEFAULT_NEW_STUDY if new_study is None else str(new_study)
    rows = {}
    last_line = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != HEADER:
            raise ParseError(1, "header", f"expected {','.join(HEADER)}, got {header!r}")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 4:
                raise ParseError(line, "row", f"expected 4 fields, got {len(row)}")
            sid, grp, s, y = (c.strip() for c in row)
            if not sid:
                raise ParseError(line, "study_id", "empty study id")
            if grp not in ("0", "1"):
                raise ParseError(line, "group", f"group must be 0 or 1, got {grp!r}")
            sv = _number(s, line, "s")
            yv = _number(y, line, "y") if y else None
            rows.setdefault(sid, []).append((int(grp), sv, yv))
            last_line[sid] = line

    studies = []
    new = None
    for sid, recs in rows.items():
        has_y = [r[2] is not None for r in recs]
        if any(has_y) and not all(has_y):
            raise MixedNewStudy(f"study {sid!r} has outcomes on some rows only")
        by_group = [[r for r in recs if r[0] == g] for g in (0, 1)]
        for g in (0, 1):
            if not by_group[g]:
                raise ParseError(last_line[sid], "group", f"study {sid!r} has no rows in group {g}")
        if sid == new_id:
            if any(has_y) and new_study is None:
                raise MixedNewStudy(f"study {sid!r} is the new study but has outcome values")
            new = NewStudySurrogates([r[1] for r in by_group[0]], [r[1] for r in by_group[1]])
            continue
        if not any(has_y):
            raise ParseError(last_line[sid], "y",
                             f"study {sid!r} has no outcomes and is not the new study {new_id!r}")
        studies.append(StudyData(sid,
                                 [r[1] for r in by_group[0]], [r[2] for r in by_group[0]],
                                 [r[1] for r in by_group[1]], [r[2] for r in by_group[1]]))
    if new_study is not None and new is None:
        raise ParseError(1, "study_id", f"new study {new_id!r} not found")
    return Dataset(studies, new, str(path))


def write_csv(path, studies, new=None, new_id=DEFAULT_NEW_STUDY):
    """Inverse of ``load_csv``."""
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(HEADER)
            for st in studies:
                for g in (0, 1):
                    for s, y in zip(*st.group(g)):
                        w.writerow([st.study_id, g, repr(float(s)), repr(float(y))])
            if new is not None:
                for g in (0, 1):
                    for s in new.group(g):
                        w.writerow([new_id, g, repr(float(s)), ""])
    except OSError as e:
        raise IoError(f"cannot write {path}: {e}") from e


def _num(x):
    if x is None:
        return None
    x = float(x)
    if not math.isfinite(x):
        return None
    return float(f"{x:.{DIGITS}g}")


def model_summary(model):
    """JSON-ready description of one fitted arm."""
    k = model.params.kernel
    return {
        "degree": model.spec.degree,
        "interior_knots": [_num(t) for t in model.spec.interior_knots],
        "boundary_knots": [_num(t) for t in model.spec.boundary_knots],
        "beta": [_num(b) for b in model.params.beta],
        "sigma2": _num(k.sigma2),
        "theta": _num(k.theta),
        "v2": _num(k.v2),
        "neg_loglik": _num(model.final_neg_loglik),
        "converged": bool(model.converged),
    }


def _dump(obj, path):
    try:
        with open(path, "w") as fh:
            json.dump(obj, fh, indent=2, allow_nan=False)
            fh.write("\n")
    except OSError as e:
        raise IoError(f"cannot write {path}: {e}") from e


def emit_results(estimate, diagnostics, path, models=None, J=None, R=None, seed=None,
                 warnings=()):
    """Write a resilience estimate as JSON.

    Unavailable quantities (``se`` and the interval of a point estimate,
    missing diagnostics) are written as ``null``.
    """
    ci = estimate.ci or (None, None)
    out = {
        "p_hat": _num(estimate.p_hat),
        "se": _num(estimate.se),
        "ci_lo": _num(ci[0]),
        "ci_hi": _num(ci[1]),
        "method": estimate.method,
        "J": int(J if J is not None else estimate.delta_sample.J),
        "R": None if R is None else int(R),
        "seed": int(seed if seed is not None else estimate.delta_sample.seed),
        "n_failed_replicates": int(estimate.n_failed),
        "groups": {str(g): model_summary(m) for g, m in enumerate(models or ())},
        "diagnostics": None,
        "warnings": list(warnings),
    }
    if diagnostics is not None:
        out["diagnostics"] = {
            "hessian_cond": _num(diagnostics.hessian_cond),
            "grad_norm": _num(diagnostics.grad_norm),
            "var_param": _num(diagnostics.var_param),
            "var_sb": _num(diagnostics.var_sb),
            "fell_back": bool(diagnostics.fell_back),
            "reason": diagnostics.reason,
        }
    _dump(out, path)
    return out


def emit_fit(models, path, warnings=()):
    out = {"groups": {str(g): model_summary(m) for g, m in enumerate(models)},
           "warnings": list(warnings)}
    _dump(out, path)
    return out


def read_results(path):
    with open(path) as fh:
        return json.load(fh)


def plot_grid(values, points=GRID_POINTS):
    """Evenly spaced grid over the range of ``values`` (widened by 0.5 if degenerate)."""
    lo, hi = float(np.min(values)), float(np.max(values))
    if not lo < hi:
        lo, hi = lo - 0.5, hi + 0.5
    return np.linspace(lo, hi, points)


def emit_plot_data(model0, model1, new, n_curves, seed, path, points=GRID_POINTS):
    """Fitted mean and random mean functions of each arm over the new study's range.

    Curve 0 is the fitted mean. Curves ``1..n_curves`` are draws of the
    latent function (fitted mean plus a zero-mean GP with the fitted signal
    variance and lengthscale, without the noise term), so they are smooth.
    """
    if n_curves < 0:
        raise ValueError("n_curves must be non-negative")
    rows = []
    for g, model in ((0, model0), (1, model1)):
        grid = plot_grid(new.group(g), points)
        mean = predict_mean(model, grid)
        rows.extend((g, 0, s, v) for s, v in zip(grid, mean))
        if n_curves:
            k = model.params.kernel
            _, L = cov_cholesky(grid, KernelParams(k.sigma2, k.theta, 0.0))
            z = _rng.stream(seed, _rng.PLOT, g).standard_normal((n_curves, grid.size))
            draws = mean + z @ L.T
            for c in range(n_curves):
                rows.extend((g, c + 1, s, v) for s, v in zip(grid, draws[c]))
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("group", "curve_id", "s", "value"))
            for g, c, s, v in rows:
                w.writerow((g, c, f"{s:.{DIGITS}g}", f"{v:.{DIGITS}g}"))
    except OSError as e:
        raise IoError(f"cannot write {path}: {e}") from e
    return rows
