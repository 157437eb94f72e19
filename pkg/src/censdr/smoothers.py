"""Kernel estimates of the at-risk expectations E{Y(Z)|b'X} and E{X_l Y(Z)|b'X}."""

from dataclasses import dataclass

import numpy as np

from . import _hot
from .kernels import FAMILIES, KernelDomainError


@dataclass(frozen=True, eq=False)
class IndexParam:
    """Coefficient matrix beta (p x d) whose upper d x d block is the identity.

    Only ``free_block`` (the lower (p-d) x d block) is estimated.
    """

    free_block: np.ndarray

    def __post_init__(self):
        fb = np.array(self.free_block, dtype=np.float64, copy=True)
        if fb.ndim == 1:
            fb = fb[:, None]
        if fb.ndim != 2 or fb.shape[0] < 1 or fb.shape[1] < 1:
            raise ValueError("free block must be a (p-d) x d matrix with p > d >= 1")
        if not np.all(np.isfinite(fb)):
            raise ValueError("free block must be finite")
        fb.setflags(write=False)
        object.__setattr__(self, "free_block", fb)

    @classmethod
    def from_beta(cls, beta, normalize=False):
        """Build from a full p x d matrix.

        With ``normalize`` the matrix is right-multiplied by the inverse of its
        upper block first (same column space); otherwise the upper block must
        already be the identity.
        """
        beta = np.asarray(beta, dtype=np.float64)
        if beta.ndim == 1:
            beta = beta[:, None]
        p, d = beta.shape
        if p <= d:
            raise ValueError("need p > d")
        upper = beta[:d]
        if normalize:
            beta = beta @ np.linalg.inv(upper)
        elif not np.array_equal(upper, np.eye(d)):
            raise ValueError("upper d x d block of beta must be the identity")
        return cls(beta[d:])

    @classmethod
    def zeros(cls, p, d):
        return cls(np.zeros((p - d, d)))

    @property
    def d(self):
        return self.free_block.shape[1]

    @property
    def p(self):
        return self.free_block.shape[0] + self.d

    @property
    def beta(self):
        return np.vstack([np.eye(self.d), self.free_block])

    @property
    def theta(self):
        """Free block flattened row-major: element (k, m) at position k*d + m."""
        return self.free_block.ravel().copy()

    @classmethod
    def from_theta(cls, theta, d):
        theta = np.asarray(theta, dtype=np.float64)
        return cls(theta.reshape(-1, d))

    def index(self, x):
        return np.asarray(x, dtype=np.float64) @ self.beta


@dataclass(frozen=True, eq=False)
class AtRiskSmooth:
    ey: np.ndarray
    exy: np.ndarray
    n_floored: int = 0

    @property
    def ratio(self):
        return self.exy / self.ey[:, None]


def _check(data, beta, h):
    if not h > 0:
        raise KernelDomainError(f"bandwidth must be positive, got {h}")
    if beta.p != data.p:
        raise ValueError(f"beta has p={beta.p} rows but data has p={data.p}")


def smooth_at(data, beta, h, z=None, index=None, xl=None, kernel="gaussian", grad=False):
    """General evaluation of both smoothers at points ``(z[e], index[e])``.

    Defaults evaluate at the observed ``(Z_i, beta'X_i)``; ``xl`` replaces the
    lower covariate block (used for transformed covariates a(X_l)).
    Returns ``(ey, exy, dey, dexy, n_floored)``.
    """
    _check(data, beta, h)
    idx = beta.index(data.covariates)
    if z is None:
        z = data.times
    if index is None:
        index = idx
    if xl is None:
        xl = data.covariates[:, beta.d:]
    fam = FAMILIES[kernel]
    if grad and kernel != "gaussian":
        raise KernelDomainError("smoother gradients require the gaussian kernel")
    return _hot.smooth_eval(np.atleast_1d(z), np.asarray(index, dtype=np.float64).reshape(-1, beta.d),
                            idx, data.times, xl, h, fam, grad)


def at_risk_smooth(data, beta, h, xl=None, kernel="gaussian"):
    ey, exy, _, _, nf = smooth_at(data, beta, h, xl=xl, kernel=kernel)
    return AtRiskSmooth(ey, exy, nf)


def cond_exp_y(data, beta, h, kernel="gaussian"):
    """Ê{Y_i(Z_i) | beta'X_i} for every observation i (self term included)."""
    return smooth_at(data, beta, h, kernel=kernel)[0]


def cond_exp_xy(data, beta, h, kernel="gaussian"):
    """Ê{X_{l,i} Y_i(Z_i) | beta'X_i}, shape n x (p-d)."""
    return smooth_at(data, beta, h, kernel=kernel)[1]


def cond_exp_grads(data, beta, h):
    """Gradients in the evaluation index of both smoothers at each observation.

    Returns ``(dey, dexy)`` of shapes n x d and n x (p-d) x d.
    """
    _, _, dey, dexy, _ = smooth_at(data, beta, h, grad=True)
    return dey, dexy
