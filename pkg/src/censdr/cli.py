"""Command-line interface: ``censdr {fit,simulate,mc,select-dim,hazard-grid}``.

Exit codes: 0 success, 1 usage or input error, 2 numerical non-convergence.
"""

import argparse
import json
import math
import os
import sys
import warnings
from importlib import resources

import jsonschema
import numpy as np

from . import __version__
from ._parallel import default_threads
from .hazard import hazard_grid, write_grid_csv
from .inference import confidence_intervals, fit_info, vic_select
from .kernels import Bandwidths
from .montecarlo import (coef_names, format_table, run_monte_carlo, summary_json, write_long_csv,
                         write_reps_csv)
from .simgen import STUDY_DIMS, gen_study, study_spec
from .smoothers import IndexParam
from .solver import FitConfig, UnidentifiableModelError, fit, start_bandwidths
from .survdata import DataError, load_csv, write_csv

EXIT_OK, EXIT_USAGE, EXIT_NONCONVERGED = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _positive_float(text):
    v = float(text)
    if not v > 0 or not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"must be a positive number, got {text}")
    return v


def _rate(text):
    v = float(text)
    if not 0.0 <= v < 1.0:
        raise argparse.ArgumentTypeError(f"censoring rate must lie in [0, 1), got {text}")
    return v


def load_schema(name):
    with resources.files("censdr").joinpath(f"schemas/{name}.schema.json").open("r", encoding="utf-8") as fh:
        return json.load(fh)


def _dump(obj, schema, path):
    jsonschema.validate(obj, load_schema(schema))
    text = json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _finite_or_none(v):
    v = float(v)
    return v if math.isfinite(v) else None


def _bandwidth_override(args):
    if (args.h is None) != (args.b is None):
        raise UsageError("--h and --b must be given together")
    return None if args.h is None else Bandwidths(args.h, args.b)


def _fit_config(args, initial=None):
    kw = {"seed": args.seed, "bandwidth_override": _bandwidth_override(args), "initial": initial}
    if args.tol is not None:
        kw["score_tol"] = args.tol
    return FitConfig(**kw)


def _load(args):
    return load_csv(args.input, args.time_col, args.status_col)


def _covariate_names(path, time_col, status_col):
    with open(path, encoding="utf-8") as fh:
        header = [h.strip() for h in fh.readline().strip().split(",")]
    return [h for h in header if h not in (time_col, status_col)]


def build_report(data, result, level=0.95, names=None, vic=None):
    info = fit_info(data, result)
    d = result.beta_hat.d
    ci = confidence_intervals(result, info, level) if info.defined else None
    st = result.standardization
    rep = {
        "beta_hat": [float(v) for v in result.beta_hat.theta],
        "beta_matrix": [[float(v) for v in row] for row in result.beta_hat.beta],
        "coefficients": list(coef_names(data.p, d)),
        "se": None if not info.defined else [float(v) for v in info.se],
        "ci": None if ci is None else [[float(lo), float(hi)] for lo, hi in ci],
        "level": level,
        "score_norm": float(result.score_norm),
        "converged": bool(result.converged),
        "bandwidths": {**result.bandwidths.as_dict(),
                       "scale": "standardized" if st is not None else "original"},
        "diagnostics": {"n": data.n, "p": data.p, "d": d, "n_events": data.n_events,
                        "n_evals": int(result.n_evals), "iterations": int(result.iterations),
                        "start_used": int(result.start_used), "info_rank": int(info.rank),
                        **{k: int(v) for k, v in result.diagnostics.items()}},
        "standardization": None if st is None else {"means": [float(v) for v in st.means],
                                                    "scales": [float(v) for v in st.scales]},
    }
    if names is not None:
        rep["covariates"] = list(names)
    if vic is not None:
        rep["vic"] = vic
    return rep


def _vic_dict(sel, seed=None):
    out = {"criterion": [_finite_or_none(v) for v in sel.criterion],
           "loss": [_finite_or_none(v) for v in sel.loss],
           "penalty": [float(v) for v in sel.penalty], "chosen_d": int(sel.chosen_d)}
    if seed is not None:
        out["seed"] = int(seed)
    return out


def cmd_fit(args):
    data = _load(args)
    if not 1 <= args.d < data.p:
        raise UsageError(f"--d must satisfy 1 <= d < p = {data.p}, got {args.d}")
    config = _fit_config(args)
    result = fit(data, args.d, config)
    vic = None
    if args.vic_dmax is not None:
        if not 1 <= args.vic_dmax < data.p:
            raise UsageError(f"--vic-dmax must satisfy 1 <= d_max < p = {data.p}")
        vic = _vic_dict(vic_select(data, args.vic_dmax, config, args.seed, args.threads))
    names = _covariate_names(args.input, args.time_col, args.status_col)
    _dump(build_report(data, result, args.level, names, vic), "report", args.out)
    if not result.converged:
        print(f"warning: no convergence (|G|_inf = {result.score_norm:.3g} > {config.score_tol:g})",
              file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_simulate(args):
    spec = study_spec(args.study, args.n, args.censoring, args.seed)
    data, _ = gen_study(spec, args.rep)
    if args.out is None:
        raise UsageError("simulate needs --out")
    write_csv(data, args.out)
    return EXIT_OK


def cmd_mc(args):
    spec = study_spec(args.study, args.n, args.censoring, args.seed)
    config = _fit_config(args)
    summary = run_monte_carlo(spec, args.reps, config, threads=args.threads, level=args.level,
                              censoring=args.censoring)
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    write_reps_csv(summary, os.path.join(out, "reps.csv"))
    write_long_csv(summary, os.path.join(out, "long.csv"))
    obj = json.loads(summary_json(summary))
    _dump(obj, "mc_summary", os.path.join(out, "summary.json"))
    print(format_table(summary))
    print(f"elapsed {summary.elapsed:.1f} s", file=sys.stderr)
    return EXIT_OK


def cmd_select_dim(args):
    data = _load(args)
    if not 1 <= args.d_max < data.p:
        raise UsageError(f"--d-max must satisfy 1 <= d_max < p = {data.p}")
    sel = vic_select(data, args.d_max, _fit_config(args), args.seed, args.threads)
    _dump(_vic_dict(sel, args.seed), "selection", args.out)
    return EXIT_OK


def _grid_axis(lo, hi, points, observed, label):
    lo = float(np.min(observed)) if lo is None else lo
    hi = float(np.max(observed)) if hi is None else hi
    if hi < lo:
        raise UsageError(f"{label} range is empty ({lo} > {hi})")
    if lo < np.min(observed) or hi > np.max(observed):
        warnings.warn(f"{label} grid [{lo}, {hi}] extends beyond the observed range "
                      f"[{np.min(observed)}, {np.max(observed)}]", stacklevel=2)
    return np.linspace(lo, hi, points) if points > 1 else np.array([lo])


def cmd_hazard_grid(args):
    data = _load(args)
    with open(args.report, encoding="utf-8") as fh:
        report = json.load(fh)
    beta = IndexParam.from_beta(np.asarray(report["beta_matrix"], dtype=np.float64))
    if beta.p != data.p:
        raise UsageError(f"report has p={beta.p} but the data file has p={data.p}")
    override = _bandwidth_override(args)
    bw = start_bandwidths(data, beta, override)
    idx = beta.index(data.covariates)
    t_grid = _grid_axis(args.t_min, args.t_max, args.t_points, data.times, "time")
    axes = [_grid_axis(args.index_min, args.index_max, args.index_points, idx[:, m], f"index {m + 1}")
            for m in range(beta.d)]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, beta.d)
    grid = hazard_grid(data, beta, bw.h, bw.b, t_grid, mesh)
    if args.out is None:
        raise UsageError("hazard-grid needs --out")
    write_grid_csv(grid, args.out)
    return EXIT_OK


def build_parser():
    p = _Parser(prog="censdr", description="Efficient estimation for multi-index survival models.")
    p.add_argument("--version", action="version", version=f"censdr {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, data=True, bandwidths=True):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--threads", type=_positive_int, default=None,
                        help="worker processes (default: $CENSDR_THREADS or 1)")
        sp.add_argument("--out", default=None)
        if data:
            sp.add_argument("--input", required=True, help="CSV with covariates, time and status columns")
            sp.add_argument("--time-col", default="time")
            sp.add_argument("--status-col", default="status")
        if bandwidths:
            sp.add_argument("--h", type=_positive_float, default=None, help="index bandwidth")
            sp.add_argument("--b", type=_positive_float, default=None, help="time bandwidth")
            sp.add_argument("--tol", type=_positive_float, default=None, help="score tolerance")

    sp = sub.add_parser("fit", help="estimate beta and write a JSON report")
    common(sp)
    sp.add_argument("--d", type=_positive_int, required=True)
    sp.add_argument("--level", type=float, default=0.95)
    sp.add_argument("--vic-dmax", type=_positive_int, default=None, help="also run dimension selection")
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("simulate", help="draw one dataset from a simulation design")
    common(sp, data=False, bandwidths=False)
    sp.add_argument("--study", choices=sorted(STUDY_DIMS), required=True)
    sp.add_argument("--n", type=_positive_int, required=True)
    sp.add_argument("--censoring", type=_rate, default=0.0)
    sp.add_argument("--rep", type=int, default=0, help="replication index (spawn key)")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("mc", help="Monte-Carlo replications of a simulation design")
    common(sp, data=False)
    sp.add_argument("--study", choices=sorted(STUDY_DIMS), required=True)
    sp.add_argument("--n", type=_positive_int, required=True)
    sp.add_argument("--censoring", type=_rate, default=0.0)
    sp.add_argument("--reps", type=_positive_int, required=True)
    sp.add_argument("--level", type=float, default=0.95)
    sp.set_defaults(func=cmd_mc)

    sp = sub.add_parser("select-dim", help="choose d by the validated information criterion")
    common(sp)
    sp.add_argument("--d-max", type=_positive_int, required=True)
    sp.set_defaults(func=cmd_select_dim)

    sp = sub.add_parser("hazard-grid", help="cumulative hazard and hazard on a (t, index) grid")
    common(sp)
    sp.add_argument("--report", required=True, help="JSON report written by `censdr fit`")
    sp.add_argument("--t-min", type=float, default=None)
    sp.add_argument("--t-max", type=float, default=None)
    sp.add_argument("--t-points", type=_positive_int, default=10)
    sp.add_argument("--index-min", type=float, default=None)
    sp.add_argument("--index-max", type=float, default=None)
    sp.add_argument("--index-points", type=_positive_int, default=10)
    sp.set_defaults(func=cmd_hazard_grid)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", None) is None:
        args.threads = default_threads()
    if hasattr(args, "level") and not 0.0 < args.level < 1.0:
        parser.error("--level must lie in (0, 1)")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"censdr: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, UnidentifiableModelError, OSError, ValueError, KeyError) as exc:
        print(f"censdr: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
