"""Command-line entry point: ``surrogate-resilience <command> ...``."""

import argparse
import logging
import sys

from . import io
from .elliott import compute_study_effects, elliott_prob, fit_bivariate_meta, new_study_delta_s
from .errors import ResilienceError
from .inference import BootstrapOptions, bootstrap_inference, fit_models, pab_inference
from .mle import FitOptions
from .resilience import DEFAULT_J, estimate_resilience
from .simulation import ESTIMATORS, run_simulation, write_results_csv
from .spline_basis import basis_choice

__all__ = ["main", "build_parser"]

log = logging.getLogger("surrogate_resilience")


class _Collect(logging.Handler):
    """Keeps warning messages so they can be written into the results file."""

    def __init__(self):
        super().__init__(logging.WARNING)
        self.messages = []

    def emit(self, record):
        self.messages.append(record.getMessage())


def _basis_pair(text, knots):
    names = text.split(",")
    if len(names) == 1:
        names = names * 2
    if len(names) != 2:
        raise ValueError("--group-basis takes one name or two separated by a comma")
    return tuple(basis_choice(n.strip(), knots) for n in names)


def _seed(text):
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be in [0, 2**64)")
    return v


def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _add_data(p, new=True):
    p.add_argument("--data", required=True, help="CSV with columns study_id,group,s,y")
    if new:
        p.add_argument("--new-study", default=None,
                       help="id of the new study (default: the study named 'new')")


def _add_basis(p):
    p.add_argument("--group-basis", default="cubic-spline",
                   help="linear, cubic or cubic-spline; 'a,b' sets control and treated separately")
    p.add_argument("--knots", type=int, default=None,
                   help="interior knots of the cubic spline (default 3)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="surrogate-resilience",
        description="Probability that a surrogate-based treatment effect is misleading in a new study.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit the per-arm outcome models")
    _add_data(p, new=False)
    _add_basis(p)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("resilience", help="estimate the resilience probability for the new study")
    _add_data(p)
    _add_basis(p)
    p.add_argument("--J", type=_positive, default=DEFAULT_J)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--inference", choices=("none", "bootstrap", "pab"), default="none")
    p.add_argument("--R", type=_positive, default=200)
    p.add_argument("--ci-level", type=float, default=0.95)
    p.add_argument("--out", required=True)

    p = sub.add_parser("elliott", help="bivariate meta-analysis comparator")
    _add_data(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("simulate", help="run a simulation study")
    p.add_argument("--setting", type=int, choices=range(1, 7), required=True)
    p.add_argument("--K", type=_positive, required=True)
    p.add_argument("--n", type=_positive, required=True)
    p.add_argument("--iters", type=_positive, required=True)
    p.add_argument("--estimator", default="cubic-spline",
                   help="comma-separated subset of " + ", ".join(ESTIMATORS))
    p.add_argument("--inference", choices=("none", "bootstrap", "pab"), default="none")
    p.add_argument("--R", type=_positive, default=100)
    p.add_argument("--J", type=_positive, default=DEFAULT_J)
    p.add_argument("--n-mc", type=int, default=100_000)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("plot-data", help="fitted and random mean functions over the new study's range")
    _add_data(p)
    _add_basis(p)
    p.add_argument("--curves", type=int, default=20)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--out", required=True)
    return parser


def _load(args, need_new=True):
    ds = io.load_csv(args.data, getattr(args, "new_study", None))
    if need_new and ds.new_study is None:
        raise ResilienceError(f"{args.data}: no new study (rows with empty y)")
    if not ds.studies:
        raise ResilienceError(f"{args.data}: no completed studies")
    return ds


def _fit(args, ds):
    choices = _basis_pair(args.group_basis, args.knots)
    return choices, fit_models(ds.studies, *choices, FitOptions(seed=args.seed))


def _cmd_fit(args, warnings):
    ds = _load(args, need_new=False)
    _, models = _fit(args, ds)
    io.emit_fit(models, args.out, warnings)


def _cmd_resilience(args, warnings):
    cfg = io.RunConfig(basis=_basis_pair(args.group_basis, args.knots), J=args.J, R=args.R,
                       inference=args.inference, seed=args.seed, output_path=args.out,
                       ci_level=args.ci_level)
    ds = _load(args)
    models = fit_models(ds.studies, *cfg.basis, FitOptions(seed=cfg.seed))
    diag = None
    if cfg.inference == "none":
        est = estimate_resilience(models[0], models[1], ds.new_study, cfg.J, cfg.seed)
    else:
        opts = BootstrapOptions(R=cfg.R, ci_level=cfg.ci_level, seed=cfg.seed)
        if cfg.inference == "bootstrap":
            est = bootstrap_inference(ds.studies, ds.new_study, *cfg.basis, cfg.J, opts, models=models)
        else:
            est, diag = pab_inference(ds.studies, ds.new_study, *cfg.basis, cfg.J, opts, models=models)
    io.emit_results(est, diag, cfg.output_path, models=models, J=cfg.J,
                    R=None if cfg.inference == "none" else cfg.R, seed=cfg.seed,
                    warnings=warnings)


def _cmd_elliott(args, warnings):
    ds = _load(args)
    fit = fit_bivariate_meta([compute_study_effects(st) for st in ds.studies])
    ds_new = new_study_delta_s(ds.new_study)
    n = io._num
    out = {
        "p_e": n(elliott_prob(fit, ds_new)),
        "delta_s_new": n(ds_new),
        "beta_s": n(fit.beta_s), "beta_y": n(fit.beta_y),
        "d_aa": n(fit.d_aa), "d_ab": n(fit.d_ab), "d_bb": n(fit.d_bb),
        "neg_loglik": n(fit.neg_loglik), "converged": fit.converged,
        "warnings": warnings,
    }
    io._dump(out, args.out)


def _cmd_simulate(args, warnings):
    estimators = tuple(e.strip() for e in args.estimator.split(","))
    results = run_simulation(args.setting, args.K, args.n, args.iters, estimators,
                             args.inference, seed=args.seed, J=args.J, R=args.R, n_mc=args.n_mc)
    write_results_csv(results, args.out)
    for r in results:
        for note in r.notes:
            log.warning("%s: %s", r.estimator, note)


def _cmd_plot(args, warnings):
    ds = _load(args)
    _, models = _fit(args, ds)
    io.emit_plot_data(models[0], models[1], ds.new_study, args.curves, args.seed, args.out)


COMMANDS = {"fit": _cmd_fit, "resilience": _cmd_resilience, "elliott": _cmd_elliott,
            "simulate": _cmd_simulate, "plot-data": _cmd_plot}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    collect = _Collect()
    log.addHandler(collect)
    try:
        COMMANDS[args.command](args, collect.messages)
    except (ResilienceError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    finally:
        log.removeHandler(collect)
    return 0


if __name__ == "__main__":
    sys.exit(main())
