"""Local Nelson-Aalen estimators of the cumulative hazard, the smoothed hazard
and its gradient in the index, conditional on a value of beta'x."""

import csv
from dataclasses import dataclass

import numpy as np

from . import _hot
from .kernels import FAMILIES, KernelDomainError


@dataclass(frozen=True, eq=False)
class HazardEstimate:
    z: float
    index: np.ndarray
    cum_hazard: float
    hazard: float
    hazard_grad: np.ndarray


def _prepare(data, beta, h, b=1.0):
    if not h > 0 or not b > 0:
        raise KernelDomainError("bandwidths must be positive")
    if beta.p != data.p:
        raise ValueError(f"beta has p={beta.p} rows but data has p={data.p}")
    return beta.index(data.covariates)


def hazard_at(z, index, data, beta, h, b=1.0, grad=True, kernel="gaussian", presorted=None):
    """Vectorised evaluation at points ``(z[e], index[e])``.

    Returns ``(cum, lam, lam1, n_floored)`` with shapes (m,), (m,), (m, d).
    """
    idx = _prepare(data, beta, h, b)
    if grad and kernel != "gaussian":
        raise KernelDomainError("hazard gradient requires the gaussian kernel")
    z = np.atleast_1d(np.asarray(z, dtype=np.float64))
    index = np.asarray(index, dtype=np.float64).reshape(-1, beta.d)
    if index.shape[0] != z.shape[0]:
        raise ValueError("z and index must describe the same number of points")
    return _hot.hazard_eval(z, index, idx, data.times, data.events, h, b,
                            FAMILIES[kernel], grad, presorted=presorted)


def cum_hazard(z, index, data, beta, h, kernel="gaussian"):
    """Λ̂(z, index) = sum over events with Z_i <= z of K_h(b'X_i - index) / risk-set kernel sum."""
    return float(hazard_at([z], [index], data, beta, h, grad=False, kernel=kernel)[0][0])


def hazard(z, index, data, beta, h, b, kernel="gaussian"):
    """λ̂(z, index): the jumps of Λ̂ smoothed with the time kernel K_b."""
    return float(hazard_at([z], [index], data, beta, h, b, grad=False, kernel=kernel)[1][0])


def hazard_grad(z, index, data, beta, h, b):
    """∂λ̂/∂(index) at (z, index), length-d array."""
    return hazard_at([z], [index], data, beta, h, b, grad=True)[2][0]


def estimate(z, index, data, beta, h, b):
    cum, lam, lam1, _ = hazard_at([z], [index], data, beta, h, b, grad=True)
    return HazardEstimate(float(z), np.atleast_1d(np.asarray(index, dtype=np.float64)),
                          float(cum[0]), float(lam[0]), lam1[0])


def hazard_grid(data, beta, h, b, t_grid, index_grid):
    """Evaluate Λ̂ and λ̂ on the product of a time grid and index points.

    ``index_grid`` is an (m, d) array of index values (or length-m for d=1).
    Rows are ordered index-major, time-minor, so within each index the times
    ascend as given.  Returns a structured dict of columns.
    """
    t_grid = np.atleast_1d(np.asarray(t_grid, dtype=np.float64))
    index_grid = np.asarray(index_grid, dtype=np.float64).reshape(-1, beta.d)
    tt = np.tile(t_grid, index_grid.shape[0])
    ii = np.repeat(index_grid, t_grid.shape[0], axis=0)
    cum, lam, _, _ = hazard_at(tt, ii, data, beta, h, b, grad=False)
    return {"t": tt, "index": ii, "cum_hazard": cum, "hazard": lam}


def write_grid_csv(grid, path):
    d = grid["index"].shape[1]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"index_{m + 1}" for m in range(d)] + ["cum_hazard", "hazard"])
        for r in range(grid["t"].shape[0]):
            w.writerow([repr(float(grid["t"][r]))] + [repr(float(v)) for v in grid["index"][r]]
                       + [repr(float(grid["cum_hazard"][r])), repr(float(grid["hazard"][r]))])


def log_likelihood(data, beta, h, b, fit_data=None, presorted=None):
    """Kernel log-likelihood Σ_i [Δ_i log λ̂(Z_i, b'X_i) − Λ̂(Z_i, b'X_i)] over ``data``.

    The hazard estimates are built from ``fit_data`` (``data`` itself by
    default), so a held-out half can be scored against a training half.
    Hazard values are floored at 1e-300 before the log.
    """
    if fit_data is None:
        fit_data = data
    elif fit_data is not data:
        presorted = None
    idx_fit = _prepare(fit_data, beta, h, b)
    idx = idx_fit if fit_data is data else beta.index(data.covariates)
    cum, lam, _, _ = _hot.hazard_eval(data.times, idx, idx_fit, fit_data.times, fit_data.events, h, b,
                                      _hot.GAUSSIAN, False, presorted=presorted)
    ev = data.events == 1.0
    return float(np.sum(np.log(np.maximum(lam[ev], 1e-300))) - np.sum(cum))
