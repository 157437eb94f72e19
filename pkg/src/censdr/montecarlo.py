"""Monte-Carlo harness for the simulation designs.

Replication ``r`` draws its data from the spawn key ``(r,)`` of the study
seed, so records do not depend on execution order or worker count.  Records
are reduced in replication order.
"""

import csv
import json
import math
import time
from dataclasses import dataclass

import numpy as np

from ._parallel import pmap
from .inference import confidence_intervals, fit_info, projection_distance
from .simgen import TRUE_BETA, gen_study
from .solver import FitConfig, fit


@dataclass(frozen=True, eq=False)
class RepRecord:
    rep: int
    theta: np.ndarray = None
    lambda_max: float = math.nan
    converged: bool = False
    score_norm: float = math.nan
    se: np.ndarray = None
    covered: np.ndarray = None
    error: str = None

    @property
    def failed(self):
        return self.error is not None


@dataclass(frozen=True, eq=False)
class McSummary:
    """Aggregates over successful replications; ``bias`` is |mean - truth| per coefficient.

    Failed replications (fit raised) are excluded and counted in ``n_failed``;
    non-converged fits are kept and counted separately.  With fewer than two
    usable replications the sds are 0 and ``sd_flagged`` is set.
    """

    study_id: str
    n: int
    censor_param: float
    censoring: float
    seed: int
    reps: int
    coef_names: tuple
    truth: np.ndarray
    n_failed: int
    n_converged: int
    mean: np.ndarray
    bias: np.ndarray
    sd: np.ndarray
    median: np.ndarray
    median_abs_error: np.ndarray
    lambda_max_mean: float
    lambda_max_sd: float
    lambda_max_median: float
    sd_flagged: bool
    coverage: np.ndarray = None
    se_mean: np.ndarray = None
    n_se_undefined: int = 0
    records: tuple = ()
    elapsed: float = 0.0

    def to_dict(self):
        """JSON-ready summary; wall-clock time is left out so repeated runs match byte for byte."""

        def arr(a):
            return None if a is None else [_num(v) for v in np.asarray(a, dtype=np.float64)]

        out = {
            "study": self.study_id, "n": self.n, "censor_param": _num(self.censor_param),
            "censoring": _num(self.censoring), "seed": self.seed, "reps": self.reps,
            "n_failed": self.n_failed, "n_converged": self.n_converged,
            "coefficients": list(self.coef_names), "truth": arr(self.truth),
            "mean": arr(self.mean), "bias": arr(self.bias), "sd": arr(self.sd),
            "median": arr(self.median), "median_abs_error": arr(self.median_abs_error),
            "lambda_max": {"mean": _num(self.lambda_max_mean), "sd": _num(self.lambda_max_sd),
                           "median": _num(self.lambda_max_median)},
            "sd_flagged": self.sd_flagged,
        }
        if self.coverage is not None:
            out["coverage"] = arr(self.coverage)
            out["se_mean"] = arr(self.se_mean)
            out["n_se_undefined"] = self.n_se_undefined
        return out


def _num(v):
    if v is None:
        return None
    v = float(v)
    return v if math.isfinite(v) else None


def coef_names(p, d):
    """``beta_i`` (d = 1) or ``beta_i_m`` labels for the free block, row-major."""
    if d == 1:
        return tuple(f"beta_{i + 1}" for i in range(d, p))
    return tuple(f"beta_{i + 1}_{m + 1}" for i in range(d, p) for m in range(d))


def run_replication(spec, rep, config=FitConfig(), coverage=False, level=0.95):
    data, truth = gen_study(spec, rep)
    d = truth.shape[1]
    try:
        res = fit(data, d, config)
    except Exception as exc:  # noqa: BLE001 - recorded, the replication is excluded
        return RepRecord(rep, error=f"{type(exc).__name__}: {exc}")
    lam = projection_distance(res.beta_hat.beta, truth)
    se = covered = None
    if coverage:
        info = fit_info(data, res)
        if info.defined:
            se = info.se
            ci = confidence_intervals(res, info, level)
            t = truth[d:].ravel()
            covered = (ci[:, 0] <= t) & (t <= ci[:, 1])
    return RepRecord(rep, res.beta_hat.theta, lam, res.converged, res.score_norm, se, covered)


def _rep_task(args):
    return run_replication(*args)


def run_monte_carlo(spec, reps, fit_config=FitConfig(), threads=None, coverage=None, level=0.95,
                    censoring=None):
    """Fit ``reps`` seeded replications of ``spec`` and aggregate.

    ``coverage`` (default: study s5 only) also records efficient-information
    standard errors and whether the ``level`` Wald interval covers the truth.
    ``censoring`` is the target rate the censoring constant was calibrated
    for, carried into the summary for reporting.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    if coverage is None:
        coverage = spec.study_id == "s5"
    t0 = time.perf_counter()
    records = pmap(_rep_task, [(spec, r, fit_config, coverage, level) for r in range(reps)], threads)
    elapsed = time.perf_counter() - t0
    return summarize(spec, records, coverage, censoring, elapsed)


def summarize(spec, records, coverage=False, censoring=None, elapsed=0.0):
    records = sorted(records, key=lambda r: r.rep)
    truth = TRUE_BETA[spec.study_id]
    d = truth.shape[1]
    t = truth[d:].ravel()
    ok = [r for r in records if not r.failed]
    q = t.size
    if ok:
        est = np.array([r.theta for r in ok])
        lam = np.array([r.lambda_max for r in ok])
        mean = est.mean(axis=0)
        median = np.median(est, axis=0)
        mae = np.median(np.abs(est - t), axis=0)
        sd = est.std(axis=0, ddof=1) if len(ok) > 1 else np.zeros(q)
        lam_sd = float(lam.std(ddof=1)) if len(ok) > 1 else 0.0
        lam_mean, lam_med = float(lam.mean()), float(np.median(lam))
    else:
        mean = median = mae = sd = np.full(q, np.nan)
        lam_mean = lam_sd = lam_med = math.nan
    cov = se_mean = None
    n_undef = 0
    if coverage:
        with_se = [r for r in ok if r.covered is not None]
        n_undef = len(ok) - len(with_se)
        if with_se:
            cov = np.mean([r.covered for r in with_se], axis=0)
            se_mean = np.mean([r.se for r in with_se], axis=0)
        else:
            cov = se_mean = np.full(q, np.nan)
    return McSummary(
        study_id=spec.study_id, n=spec.n, censor_param=spec.censor_param, censoring=censoring,
        seed=spec.seed, reps=len(records), coef_names=coef_names(truth.shape[0], d), truth=t,
        n_failed=len(records) - len(ok), n_converged=sum(r.converged for r in ok),
        mean=mean, bias=np.abs(mean - t), sd=sd, median=median, median_abs_error=mae,
        lambda_max_mean=lam_mean, lambda_max_sd=lam_sd, lambda_max_median=lam_med,
        sd_flagged=len(ok) < 2, coverage=cov, se_mean=se_mean, n_se_undefined=n_undef,
        records=tuple(records), elapsed=elapsed)


def _fmt(v):
    return "" if v is None or not math.isfinite(float(v)) else repr(float(v))


def write_reps_csv(summary, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rep", *summary.coef_names, "lambda_max", "converged", "score_norm", "failed"])
        for r in summary.records:
            theta = [""] * len(summary.coef_names) if r.theta is None else [_fmt(v) for v in r.theta]
            w.writerow([r.rep, *theta, _fmt(r.lambda_max), int(r.converged), _fmt(r.score_norm),
                        int(r.failed)])


def write_long_csv(summary, path):
    """One row per (replication, coefficient); convenient for boxplots."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rep", "coefficient", "estimate", "truth", "error"])
        for r in summary.records:
            if r.failed:
                continue
            for name, est, tv in zip(summary.coef_names, r.theta, summary.truth):
                w.writerow([r.rep, name, _fmt(est), _fmt(tv), _fmt(est - tv)])


def summary_json(summary):
    return json.dumps(summary.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"


def format_table(summary):
    """Plain-text table: bias / sd / median rows per coefficient and the lambda_max column."""
    names = summary.coef_names
    width = max(10, *(len(s) + 1 for s in names))
    head = "".ljust(8) + "".join(s.rjust(width) for s in names) + "lambda_max".rjust(12)
    rows = [head]

    def line(label, values, lam=None):
        cells = "".join(("nan" if not math.isfinite(v) else f"{v:.4f}").rjust(width) for v in values)
        tail = "" if lam is None else (f"{lam:.4f}" if math.isfinite(lam) else "nan").rjust(12)
        return label.ljust(8) + cells + tail

    rows.append(line("truth", summary.truth))
    rows.append(line("bias", summary.bias, summary.lambda_max_mean))
    rows.append(line("sd", summary.sd, summary.lambda_max_sd))
    rows.append(line("median", summary.median, summary.lambda_max_median))
    rows.append(line("med|err|", summary.median_abs_error))
    if summary.coverage is not None:
        rows.append(line("se", summary.se_mean))
        rows.append(line("cover", summary.coverage))
    rows.append(f"reps={summary.reps} failed={summary.n_failed} converged={summary.n_converged}")
    return "\n".join(rows)
