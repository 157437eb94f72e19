"""Solve the efficient estimating equation for the free block of beta.

The fit runs in three stages.

1. Candidate starts (a user value, a sliced-inverse-regression start, the
   zero block and ``n_starts`` standard-normal draws) are ranked by the kernel
   log-likelihood of the fitted conditional hazard.
2. The best ``n_polish`` candidates are refined by maximising that
   likelihood (BFGS).  This is the consistent initial estimate.
3. From the refined start with the highest likelihood, bandwidths are fixed
   at the values its index implies and the score is driven to zero with
   MINPACK's Levenberg-Marquardt, falling back to its Powell hybrid method
   when that stalls.

Ranking by the likelihood rather than by the score norm matters: the score
also vanishes, in the population, at every beta whose index carries no
information about T, so small score norms do not single out the truth.
"""

import logging
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize, root

from . import _hot
from .hazard import log_likelihood
from .kernels import Bandwidths, default_bandwidths
from .score import CLAMP_WARN_FRACTION, ClampWarning, efficient_score
from .smoothers import IndexParam
from .survdata import standardize

log = logging.getLogger(__name__)


class UnidentifiableModelError(ValueError):
    """The score vanishes identically (e.g. no observed events)."""


@dataclass(frozen=True)
class FitConfig:
    max_iters: int = 200
    score_tol: float = 1e-6
    n_starts: int = 10
    seed: int = 0
    bandwidth_override: Bandwidths = None
    initial: IndexParam = None
    standardize: bool = True
    n_polish: int = 3
    n_slices: int = 10

    def __post_init__(self):
        if not self.score_tol > 0:
            raise ValueError("score_tol must be positive")
        if self.n_starts < 1:
            raise ValueError("n_starts must be >= 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.n_polish < 1:
            raise ValueError("n_polish must be >= 1")


@dataclass(frozen=True, eq=False)
class FitResult:
    """Fitted coefficients on the original covariate scale (``beta_hat``) and on
    the scale the equation was solved on (``beta_work``, standardized when
    ``standardization`` is set)."""

    beta_hat: IndexParam
    score_norm: float
    converged: bool
    bandwidths: Bandwidths
    n_evals: int
    start_used: int
    beta_work: IndexParam = None
    standardization: object = None
    iterations: int = 0
    diagnostics: dict = field(default_factory=dict)
    initial: IndexParam = None


def _index_sd(data, beta):
    sd = beta.index(data.covariates).std(axis=0, ddof=1)
    return np.where(sd > 0, sd, 1.0)


def start_bandwidths(data, beta, override=None):
    if override is not None:
        return override
    sd_t = float(np.std(data.times, ddof=1))
    return default_bandwidths(data.n, beta.d, _index_sd(data, beta), sd_t if sd_t > 0 else 1.0)


def sliced_start(data, d, n_slices=10):
    """Sliced inverse regression on (Δ, Z) slices, normalised to an identity upper block.

    Events and censored observations are sliced separately by time, with the
    slice budget shared in proportion to their counts.  Returns ``None`` when
    the covariance is singular or the leading directions leave the upper block
    singular.
    """
    x = data.covariates
    n, p = x.shape
    if n <= p:
        return None
    evals, evecs = np.linalg.eigh(np.cov(x, rowvar=False))
    if evals[0] <= 1e-12 * max(evals[-1], 1e-300):
        return None
    isq = (evecs / np.sqrt(evals)) @ evecs.T
    zx = (x - x.mean(axis=0)) @ isq
    m = np.zeros((p, p))
    for ev in (1.0, 0.0):
        rows = np.flatnonzero(data.events == ev)
        if rows.size == 0:
            continue
        k = max(1, int(round(n_slices * rows.size / n)))
        rows = rows[np.argsort(data.times[rows], kind="stable")]
        for chunk in np.array_split(rows, k):
            if chunk.size:
                mean = zx[chunk].mean(axis=0)
                m += chunk.size / n * np.outer(mean, mean)
    _, vecs = np.linalg.eigh(m)
    b = isq @ vecs[:, ::-1][:, :d]
    upper = b[:d]
    if abs(np.linalg.det(upper)) < 1e-10 * max(np.abs(b).max(), 1e-300) ** d:
        return None
    return IndexParam.from_beta(b, normalize=True)


def _candidates(data, d, seed, n_starts, initial, n_slices=10):
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))
    cands = []
    if initial is not None:
        cands.append(initial)
    sir = sliced_start(data, d, n_slices)
    if sir is not None:
        cands.append(sir)
    cands.append(IndexParam.zeros(data.p, d))
    for _ in range(n_starts):
        cands.append(IndexParam(rng.standard_normal((data.p - d, d))))
    return cands


def neg_loglik(data, beta, override=None, presorted=None):
    """Minus the mean kernel log-likelihood, bandwidths following ``beta``'s index."""
    bw = start_bandwidths(data, beta, override)
    val = -log_likelihood(data, beta, bw.h, bw.b, presorted=presorted) / data.n
    return val if np.isfinite(val) else np.inf


def rank_starts(data, d, seed=0, n_starts=10, initial=None, bandwidth_override=None, n_slices=10):
    """All candidate starts as ``(neg_loglik, index, start)``, best first.

    Ties keep candidate order (user value, sliced start, zero block, draws).
    """
    ps = _hot.sort_by_time(data.times)
    scored = [(neg_loglik(data, c, bandwidth_override, ps), k, c)
              for k, c in enumerate(_candidates(data, d, seed, n_starts, initial, n_slices))]
    scored.sort(key=lambda s: (s[0], s[1]))
    return scored


def polish(data, start, bandwidth_override=None, max_iters=200, presorted=None):
    """Maximise the kernel log-likelihood from ``start``; returns ``(beta, neg_loglik, n_evals)``."""
    d = start.d
    ps = presorted if presorted is not None else _hot.sort_by_time(data.times)

    def obj(theta):
        try:
            return neg_loglik(data, IndexParam.from_theta(theta, d), bandwidth_override, ps)
        except ValueError:
            return np.inf

    f0 = obj(start.theta)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        res = minimize(obj, start.theta, method="BFGS", options={"gtol": 1e-5, "maxiter": max_iters})
    if np.isfinite(res.fun) and np.all(np.isfinite(res.x)) and res.fun <= f0:
        return IndexParam.from_theta(res.x, d), float(res.fun), int(res.nfev) + 1
    return start, float(f0), int(res.nfev) + 1


def initial_estimate(data, d, seed=0, n_starts=10, initial=None, bandwidth_override=None, n_polish=1):
    """Consistent initial estimate: the likelihood-polished best candidate start."""
    if data.p <= d:
        raise ValueError(f"need p > d, got p={data.p}, d={d}")
    ranked = rank_starts(data, d, seed, n_starts, initial, bandwidth_override)
    polished = [polish(data, s, bandwidth_override)[:2] for _, _, s in ranked[:n_polish]]
    return min(enumerate(polished), key=lambda kv: (kv[1][1], kv[0]))[1][0]


def solve_from(data, start, bw, config, presorted=None):
    """Drive the score to zero from one start with bandwidths fixed.

    MINPACK's Levenberg-Marquardt (forward-difference Jacobian) runs first;
    if it stalls in a local minimum of the squared residual, MINPACK's Powell
    hybrid method is tried from the same start.  Returns
    ``(beta, score_norm, converged, n_evals)`` for the better attempt.
    """
    d = start.d
    q = start.theta.size
    ps = presorted if presorted is not None else _hot.sort_by_time(data.times)

    def fun(theta):
        return efficient_score(data, IndexParam.from_theta(theta, d), bw, ps, warn=False).g.ravel()

    attempts = (("lm", {"xtol": 1e-14, "ftol": 1e-14, "maxiter": config.max_iters * (q + 1)}),
                ("hybr", {"xtol": 1e-12, "maxfev": config.max_iters * (q + 1)}))
    best = None
    n_evals = 0
    for method, opts in attempts:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = root(fun, start.theta, method=method, options=opts)
        theta = res.x if np.all(np.isfinite(res.x)) else start.theta
        r = fun(theta)
        n_evals += int(res.nfev) + 1
        norm = float(np.max(np.abs(r))) if r.size else 0.0
        if best is None or norm < best[1]:
            best = (theta, norm)
        if best[1] <= config.score_tol:
            break
    theta, norm = best
    return IndexParam.from_theta(theta, d), norm, norm <= config.score_tol, n_evals


def _to_original(beta_work, st):
    """Map an identity-normalised beta from standardized to original covariates."""
    if st is None:
        return beta_work
    raw = beta_work.beta / st.scales[:, None]
    return IndexParam.from_beta(raw, normalize=True)


def _to_work(beta, st):
    if st is None:
        return beta
    return IndexParam.from_beta(beta.beta * st.scales[:, None], normalize=True)


def fit(data, d, config=FitConfig()):
    """Estimate beta (p x d, identity upper block) from right-censored data.

    Never raises on non-convergence: the final iterate is returned with
    ``converged=False``.  Raises
    :class:`UnidentifiableModelError` when there are no events.
    """
    if not 1 <= d < data.p:
        raise ValueError(f"need 1 <= d < p, got d={d}, p={data.p}")
    if data.n_events == 0:
        raise UnidentifiableModelError("no observed events: the estimating equation is identically zero")
    st = None
    work = data
    if config.standardize:
        work, st = standardize(data)
    initial = None if config.initial is None else _to_work(config.initial, st)
    ps = _hot.sort_by_time(work.times)
    ranked = rank_starts(work, d, config.seed, config.n_starts, initial, config.bandwidth_override,
                         config.n_slices)
    total_evals = len(ranked)
    polished = []
    for _, k, start in ranked[: config.n_polish]:
        beta0, val, nev = polish(work, start, config.bandwidth_override, config.max_iters, ps)
        total_evals += nev
        polished.append((val, k, beta0))
    polished.sort(key=lambda s: (s[0], s[1]))

    # only the likelihood-best start is solved from: other starts tend to reach
    # roots in directions that carry no information about T
    _, k, start = polished[0]
    bw = start_bandwidths(work, start, config.bandwidth_override)
    beta, norm, ok, nev = solve_from(work, start, bw, config, ps)
    total_evals += nev
    if not ok:
        log.debug("solve from start %d stalled at |G|=%.3g", k, norm)
    sv = efficient_score(work, beta, bw, ps, warn=False)
    diag = dict(sv.diagnostics)
    if diag["n_event_terms"] and diag["n_clamped"] > CLAMP_WARN_FRACTION * diag["n_event_terms"]:
        warnings.warn(f"{diag['n_clamped']} of {diag['n_event_terms']} hazard estimates clamped",
                      ClampWarning, stacklevel=2)
    return FitResult(beta_hat=_to_original(beta, st), score_norm=norm, converged=ok, bandwidths=bw,
                     n_evals=total_evals, start_used=k, beta_work=beta, standardization=st,
                     iterations=nev, diagnostics=diag, initial=_to_original(start, st))


def working_data(data, result):
    """The dataset on the scale ``result`` was solved on."""
    if result.standardization is None:
        return data
    return replace(data, covariates=result.standardization.apply(data.covariates))
