"""Sample estimating functions for the index coefficients.

``efficient_score`` is the efficient equation: hazard-gradient-to-hazard
weights times the residual of X_l from its at-risk kernel average, summed over
events.  ``general_score`` lets the caller choose the weight function g and a
covariate transform a(X_l); any such choice is still mean-zero at the truth.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _hot
from .smoothers import smooth_at

HAZARD_FLOOR = 1e-12
CLAMP_WARN_FRACTION = 0.01


class ClampWarning(RuntimeWarning):
    pass


@dataclass(frozen=True, eq=False)
class ScoreValue:
    """Score matrix ``g`` ((p-d) x d, normalised by 1/n) and diagnostics.

    ``g[k, m]`` pairs lower covariate k with index column m, the same layout
    as :attr:`IndexParam.free_block`.
    """

    g: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    @property
    def norm_inf(self):
        return float(np.max(np.abs(self.g))) if self.g.size else 0.0


@dataclass(frozen=True, eq=False)
class ScoreTerms:
    """Per-event pieces: residual ``r`` (e x q), weight ``w`` (e x d), event rows."""

    rows: np.ndarray
    r: np.ndarray
    w: np.ndarray
    n: int
    diagnostics: dict

    def matrix(self):
        if self.rows.size == 0:
            return np.zeros((self.r.shape[1], self.w.shape[1]))
        return self.r.T @ self.w / self.n

    def per_obs(self):
        """vec(r_i w_i') for each event, row-major to match ``ScoreValue.g``."""
        return np.einsum("ik,im->ikm", self.r, self.w).reshape(self.rows.size, -1)


def _event_rows(data):
    return np.flatnonzero(data.events == 1.0)


def hazard_weights(data, beta, bw, z, index, presorted=None):
    """λ̂₁/λ̂ at points; returns ``(w, n_clamped, n_floored)``."""
    idx = beta.index(data.covariates)
    _, lam, lam1, nf = _hot.hazard_eval(z, index, idx, data.times, data.events, bw.h, bw.b,
                                        _hot.GAUSSIAN, True, presorted=presorted)
    clamped = lam < HAZARD_FLOOR
    lam = np.where(clamped, HAZARD_FLOOR, lam)
    return lam1 / lam[:, None], int(clamped.sum()), nf


def score_terms(data, beta, bw, presorted=None):
    rows = _event_rows(data)
    q, d = beta.p - beta.d, beta.d
    if rows.size == 0:
        diag = {"n_event_terms": 0, "n_floored": 0, "n_clamped": 0}
        return ScoreTerms(rows, np.zeros((0, q)), np.zeros((0, d)), data.n, diag)
    idx = beta.index(data.covariates)
    z_ev = data.times[rows]
    x_ev = idx[rows]
    # residuals are shift invariant; shifting by a data row makes constant columns exactly zero
    xl = data.covariates[:, d:] - data.covariates[0, d:]
    ey, exy, _, _, nf_s = smooth_at(data, beta, bw.h, z=z_ev, index=x_ev, xl=xl)
    r = xl[rows] - exy / ey[:, None]
    w, n_clamped, nf_h = hazard_weights(data, beta, bw, z_ev, x_ev, presorted)
    diag = {"n_event_terms": int(rows.size), "n_floored": int(nf_s + nf_h), "n_clamped": n_clamped}
    return ScoreTerms(rows, r, w, data.n, diag)


def efficient_score(data, beta, bw, presorted=None, warn=True):
    """(1/n) Σ_i Δ_i r_i w_iᵀ with w_i = λ̂₁/λ̂ and r_i = X_li − Ê{X_l Y}/Ê{Y} at (Z_i, βᵀX_i)."""
    terms = score_terms(data, beta, bw, presorted)
    diag = terms.diagnostics
    if warn and diag["n_event_terms"] and diag["n_clamped"] > CLAMP_WARN_FRACTION * diag["n_event_terms"]:
        warnings.warn(f"{diag['n_clamped']} of {diag['n_event_terms']} hazard estimates clamped at "
                      f"{HAZARD_FLOOR}", ClampWarning, stacklevel=2)
    return ScoreValue(terms.matrix(), diag)


def efficient_weight_fn(data, beta, bw):
    """The plug-in g(z, index) = λ̂₁/λ̂ used by the efficient equation."""

    def g_fn(z, index):
        w, _, _ = hazard_weights(data, beta, bw, np.atleast_1d(z), np.reshape(index, (1, -1)))
        return w[0]

    return g_fn


def general_score(data, beta, h, g_fn, a_fn=None):
    """(1/n) Σ_i Δ_i [a(X_li) − Ê{a(X_l)Y}/Ê{Y}] g(Z_i, βᵀX_i)ᵀ, an m x d matrix.

    ``a_fn`` maps one row of X_l to a length-m vector (identity by default);
    ``g_fn`` maps ``(z, index)`` to a length-d vector.
    """
    d = beta.d
    xl = data.covariates[:, d:]
    ax = xl if a_fn is None else np.array([np.atleast_1d(a_fn(row)) for row in xl], dtype=np.float64)
    if ax.ndim == 1:
        ax = ax[:, None]
    ax = ax - ax[0]
    rows = _event_rows(data)
    out = np.zeros((ax.shape[1], d))
    if rows.size == 0:
        return out
    idx = beta.index(data.covariates)
    ey, exy, _, _, _ = smooth_at(data, beta, h, z=data.times[rows], index=idx[rows], xl=ax)
    r = ax[rows] - exy / ey[:, None]
    g = np.array([np.atleast_1d(g_fn(data.times[i], idx[i])) for i in rows], dtype=np.float64)
    return r.T @ g / data.n
