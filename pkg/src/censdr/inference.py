"""Variance estimation, confidence intervals, subspace distance and dimension selection."""

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ndtri

from ._parallel import pmap
from .hazard import log_likelihood
from .score import score_terms
from .solver import FitConfig, fit


class DomainError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class EfficientInfo:
    """Sample efficient information for the free block (row-major ``theta`` order).

    ``cov`` (= info^{-1} / n) and ``se`` are ``None`` when ``info`` is singular;
    ``rank`` is the numerical rank of ``info``.
    """

    info: np.ndarray
    cov: np.ndarray
    se: np.ndarray
    rank: int
    n: int

    @property
    def defined(self):
        return self.se is not None


def _from_info(info, n, rtol=1e-10):
    q = info.shape[0]
    if q == 0:
        return EfficientInfo(info, np.zeros((0, 0)), np.zeros(0), 0, n)
    evals = np.linalg.eigvalsh(info)
    top = float(evals[-1])
    rank = int(np.sum(evals > rtol * top)) if top > 0 else 0
    if rank < q:
        return EfficientInfo(info, None, None, rank, n)
    cov = np.linalg.inv(info) / n
    cov = 0.5 * (cov + cov.T)
    return EfficientInfo(info, cov, np.sqrt(np.diag(cov)), rank, n)


def efficient_info(data, beta, bw, presorted=None):
    """(1/n) Σ_i Δ_i vec(r_i w_iᵀ) vec(r_i w_iᵀ)ᵀ, with the efficient score's own terms."""
    terms = score_terms(data, beta, bw, presorted)
    psi = terms.per_obs()
    info = psi.T @ psi / data.n
    info = 0.5 * (info + info.T)
    return _from_info(info, data.n)


def _theta_scale(st, d):
    """Per-coordinate factors mapping free-block coordinates from standardized to original covariates."""
    s = np.asarray(st.scales, dtype=np.float64)
    return (s[:d][None, :] / s[d:][:, None]).ravel()


def info_to_original(info, st, d):
    """Re-express ``info`` for coefficients on the original covariate scale.

    With an identity upper block the map between scales is diagonal,
    beta_orig[k, m] = beta_std[k, m] * s_upper[m] / s_lower[k].
    """
    if st is None:
        return info
    j = _theta_scale(st, d)
    new_info = info.info / np.outer(j, j)
    if not info.defined:
        return replace(info, info=new_info)
    cov = info.cov * np.outer(j, j)
    return EfficientInfo(new_info, cov, np.sqrt(np.diag(cov)), info.rank, info.n)


def fit_info(data, result):
    """Efficient information at a :class:`FitResult`, on the original covariate scale."""
    work = data
    if result.standardization is not None:
        work = replace(data, covariates=result.standardization.apply(data.covariates))
    info = efficient_info(work, result.beta_work, result.bandwidths)
    return info_to_original(info, result.standardization, result.beta_work.d)


def normal_quantile(prob):
    return float(ndtri(prob))


def confidence_intervals(fit_result, info, level=0.95):
    """Wald intervals beta_hat_k ± z se_k, as an array (q, 2); NaN rows when se is undefined."""
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    est = fit_result.beta_hat.theta
    if not info.defined:
        return np.full((est.size, 2), np.nan)
    z = normal_quantile(0.5 * (1.0 + level))
    half = z * info.se
    return np.column_stack([est - half, est + half])


def _basis(b):
    b = np.asarray(b, dtype=np.float64)
    if b.ndim == 1:
        b = b[:, None]
    if b.shape[1] == 0 or np.linalg.matrix_rank(b) < b.shape[1]:
        raise DomainError("coefficient matrix must have full column rank")
    q, _ = np.linalg.qr(b)
    return q


def projection_distance(beta_a, beta_b):
    """Largest singular value of P_a − P_b, where P = β(βᵀβ)⁻¹βᵀ."""
    qa, qb = _basis(beta_a), _basis(beta_b)
    if qa.shape[0] != qb.shape[0]:
        raise DomainError("matrices must have the same number of rows")
    diff = qa @ qa.T - qb @ qb.T
    return float(np.linalg.norm(diff, 2))


@dataclass(frozen=True, eq=False)
class DimSelection:
    """VIC values over d = 1..d_max (NaN where the fit failed) and the argmin."""

    criterion: np.ndarray
    chosen_d: int
    loss: np.ndarray
    penalty: np.ndarray


def vic_penalty(n, d, p):
    return math.log(n) * d * (p - d)


def _vic_one(args):
    train, val, d, config = args
    res = fit(train, d, config)
    st = res.standardization
    tr = train if st is None else replace(train, covariates=st.apply(train.covariates))
    va = val if st is None else replace(val, covariates=st.apply(val.covariates))
    bw = res.bandwidths
    return -log_likelihood(va, res.beta_work, bw.h, bw.b, fit_data=tr)


def vic_select(data, d_max, config=FitConfig(), seed=0, threads=1):
    """Validated information criterion over d = 1..d_max.

    Each d is fitted on a random half; the other half is scored by the negative
    kernel log-likelihood of the fitted hazard, plus log(n) d (p − d).
    """
    if not 1 <= d_max < data.p:
        raise ValueError(f"need 1 <= d_max < p, got d_max={d_max}, p={data.p}")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))
    perm = rng.permutation(data.n)
    half = data.n // 2
    train, val = data.subset(np.sort(perm[:half])), data.subset(np.sort(perm[half:]))
    ds = list(range(1, d_max + 1))
    results = pmap(_safe_vic, [(train, val, d, config) for d in ds], threads)
    loss = np.full(d_max, np.nan)
    for d, (value, err) in zip(ds, results):
        if err is not None:
            warnings.warn(f"dimension {d} excluded from VIC: {err}", RuntimeWarning, stacklevel=2)
        else:
            loss[d - 1] = value
    if np.all(np.isnan(loss)):
        raise RuntimeError("every candidate dimension failed to fit")
    pen = np.array([vic_penalty(data.n, d, data.p) for d in ds])
    crit = loss + pen
    chosen = int(np.nanargmin(crit)) + 1
    return DimSelection(crit, chosen, loss, pen)


def _safe_vic(args):
    try:
        return _vic_one(args), None
    except Exception as exc:  # noqa: BLE001 - reported per dimension
        return None, f"{type(exc).__name__}: {exc}"
