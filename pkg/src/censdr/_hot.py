"""Hot kernel sums shared by the smoothers, hazard estimators and the score.

Two entry points, each with a numba and a numpy implementation:

``smooth_eval``
    kernel-weighted at-risk averages Ê{Y(z)|x} and Ê{X_l Y(z)|x} and their
    gradients in the evaluation index x.
``hazard_eval``
    local Nelson-Aalen cumulative hazard, kernel-smoothed hazard and its
    gradient in x.

Index weights are the *unnormalised* product kernel exp(-|v/h|^2 / 2) (or the
Epanechnikov product without its 3/4 factors).  Every quantity built from them
is a ratio of two weight sums, so the constants cancel; only the time kernel
K_b carries its normalisation.

Family codes: 0 = gaussian, 1 = epanechnikov.
"""

import math

import numpy as np

from ._backend import get_backend

try:
    from numba import njit
except ImportError:  # pragma: no cover - exercised only without numba

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def identity(fn):
            return fn

        return identity


DENOM_FLOOR = 1e-300
GAUSSIAN = 0
EPANECHNIKOV = 1
_SQRT_2PI = math.sqrt(2.0 * math.pi)


# ---------------------------------------------------------------------------
# numba path
# ---------------------------------------------------------------------------


@njit(cache=True)
def _fill_weights(x, idx, h, fam, grad, w, dw):
    # w[j] = K((idx_j - x)/h); dw[j, m] = dK/dv_m at v = idx_j - x
    n, d = idx.shape
    for j in range(n):
        if fam == 0:
            s = 0.0
            for m in range(d):
                u = (idx[j, m] - x[m]) / h
                s += u * u
            wj = math.exp(-0.5 * s)
            w[j] = wj
            if grad:
                for m in range(d):
                    dw[j, m] = -(idx[j, m] - x[m]) / (h * h) * wj
        else:
            wj = 1.0
            for m in range(d):
                u = (idx[j, m] - x[m]) / h
                f = 1.0 - u * u
                if f <= 0.0:
                    wj = 0.0
                    break
                wj *= f
            w[j] = wj
            if grad:
                for m in range(d):
                    um = (idx[j, m] - x[m]) / h
                    if abs(um) >= 1.0:
                        dw[j, m] = 0.0
                        continue
                    rest = 1.0
                    for mm in range(d):
                        if mm != m:
                            u = (idx[j, mm] - x[mm]) / h
                            f = 1.0 - u * u
                            rest *= f if f > 0.0 else 0.0
                    dw[j, m] = -2.0 * um / h * rest


@njit(cache=True)
def _time_kernel(t, b, fam):
    u = t / b
    if fam == 0:
        return math.exp(-0.5 * u * u) / (_SQRT_2PI * b)
    f = 1.0 - u * u
    return 0.75 * f / b if f > 0.0 else 0.0


@njit(cache=True)
def _smooth_eval_nb(ez, ex, idx, z, xl, h, fam, grad):
    m_eval = ez.shape[0]
    n, d = idx.shape
    q = xl.shape[1]
    ey = np.empty(m_eval)
    exy = np.empty((m_eval, q))
    dey = np.zeros((m_eval, d))
    dexy = np.zeros((m_eval, q, d))
    w = np.empty(n)
    dw = np.empty((n, d))
    num_x = np.empty(q)
    dnum_x = np.empty((q, d))
    dden = np.empty(d)
    dnum = np.empty(d)
    nfloor = 0
    for e in range(m_eval):
        _fill_weights(ex[e], idx, h, fam, grad, w, dw)
        den = 0.0
        num = 0.0
        num_x[:] = 0.0
        dden[:] = 0.0
        dnum[:] = 0.0
        dnum_x[:, :] = 0.0
        for j in range(n):
            wj = w[j]
            den += wj
            if grad:
                for m in range(d):
                    dden[m] -= dw[j, m]
            if z[j] >= ez[e]:
                num += wj
                for k in range(q):
                    num_x[k] += wj * xl[j, k]
                if grad:
                    for m in range(d):
                        dnum[m] -= dw[j, m]
                        for k in range(q):
                            dnum_x[k, m] -= dw[j, m] * xl[j, k]
        if den < DENOM_FLOOR:
            den = DENOM_FLOOR
            nfloor += 1
        ey[e] = num / den
        for k in range(q):
            exy[e, k] = num_x[k] / den
        if grad:
            den2 = den * den
            for m in range(d):
                dey[e, m] = (dnum[m] * den - num * dden[m]) / den2
                for k in range(q):
                    dexy[e, k, m] = (dnum_x[k, m] * den - num_x[k] * dden[m]) / den2
    return ey, exy, dey, dexy, nfloor


@njit(cache=True)
def _hazard_eval_nb(ez, ex, idx, z, delta, gstart, h, b, fam, grad):
    # idx, z, delta are sorted by z ascending; gstart[k] is the first sorted
    # position whose time equals z[k], so the risk set of k is [gstart[k], n).
    m_eval = ez.shape[0]
    n, d = idx.shape
    cum = np.zeros(m_eval)
    lam = np.zeros(m_eval)
    lam1 = np.zeros((m_eval, d))
    w = np.empty(n)
    dw = np.empty((n, d))
    s = np.empty(n)
    sd = np.empty((n, d))
    acc_d = np.empty(d)
    nfloor = 0
    for e in range(m_eval):
        _fill_weights(ex[e], idx, h, fam, grad, w, dw)
        acc = 0.0
        acc_d[:] = 0.0
        for j in range(n - 1, -1, -1):
            acc += w[j]
            s[j] = acc
            if grad:
                for m in range(d):
                    acc_d[m] += dw[j, m]
                    sd[j, m] = acc_d[m]
        for k in range(n):
            if delta[k] == 0.0:
                continue
            den = s[gstart[k]]
            if den < DENOM_FLOOR:
                den = DENOM_FLOOR
                nfloor += 1
            ratio = w[k] / den
            if z[k] <= ez[e]:
                cum[e] += ratio
            kb = _time_kernel(z[k] - ez[e], b, fam)
            lam[e] += kb * ratio
            if grad:
                for m in range(d):
                    lam1[e, m] += kb * (-dw[k, m] / den + ratio * sd[gstart[k], m] / den)
    return cum, lam, lam1, nfloor


# ---------------------------------------------------------------------------
# numpy path
# ---------------------------------------------------------------------------


def _weights_np(ex, idx, h, fam, grad):
    v = idx[None, :, :] - ex[:, None, :]
    u = v / h
    if fam == GAUSSIAN:
        w = np.exp(-0.5 * np.sum(u * u, axis=2))
        dw = -v / (h * h) * w[:, :, None] if grad else None
        return w, dw
    f = np.clip(1.0 - u * u, 0.0, None)
    w = np.prod(f, axis=2)
    dw = None
    if grad:
        d = idx.shape[1]
        dw = np.empty_like(v)
        for m in range(d):
            rest = np.prod(np.delete(f, m, axis=2), axis=2)
            inside = np.abs(u[:, :, m]) < 1.0
            dw[:, :, m] = np.where(inside, -2.0 * u[:, :, m] / h * rest, 0.0)
    return w, dw


def _time_kernel_np(t, b, fam):
    u = t / b
    if fam == GAUSSIAN:
        return np.exp(-0.5 * u * u) / (_SQRT_2PI * b)
    return np.where(np.abs(u) < 1.0, 0.75 * (1.0 - u * u) / b, 0.0)


def _smooth_eval_np(ez, ex, idx, z, xl, h, fam, grad):
    w, dw = _weights_np(ex, idx, h, fam, grad)
    at_risk = z[None, :] >= ez[:, None]
    den = w.sum(axis=1)
    small = den < DENOM_FLOOR
    nfloor = int(small.sum())
    den = np.where(small, DENOM_FLOOR, den)
    wr = w * at_risk
    num = wr.sum(axis=1)
    num_x = wr @ xl
    ey = num / den
    exy = num_x / den[:, None]
    m_eval, d = ex.shape
    q = xl.shape[1]
    if not grad:
        return ey, exy, np.zeros((m_eval, d)), np.zeros((m_eval, q, d)), nfloor
    dden = -dw.sum(axis=1)
    dwr = dw * at_risk[:, :, None]
    dnum = -dwr.sum(axis=1)
    dnum_x = -np.einsum("ejm,jk->ekm", dwr, xl)
    den2 = den * den
    dey = (dnum * den[:, None] - num[:, None] * dden) / den2[:, None]
    dexy = (dnum_x * den[:, None, None] - num_x[:, :, None] * dden[:, None, :]) / den2[:, None, None]
    return ey, exy, dey, dexy, nfloor


def _hazard_eval_np(ez, ex, idx, z, delta, gstart, h, b, fam, grad):
    w, dw = _weights_np(ex, idx, h, fam, grad)
    s = np.cumsum(w[:, ::-1], axis=1)[:, ::-1]
    den = s[:, gstart]
    small = (den < DENOM_FLOOR) & (delta[None, :] != 0.0)
    nfloor = int(small.sum())
    den = np.where(den < DENOM_FLOOR, DENOM_FLOOR, den)
    ratio = delta[None, :] * w / den
    cum = np.sum(ratio * (z[None, :] <= ez[:, None]), axis=1)
    kb = _time_kernel_np(z[None, :] - ez[:, None], b, fam)
    lam = np.sum(kb * ratio, axis=1)
    m_eval, d = ex.shape
    if not grad:
        return cum, lam, np.zeros((m_eval, d)), nfloor
    sd = np.cumsum(dw[:, ::-1, :], axis=1)[:, ::-1, :]
    dden = sd[:, gstart, :]
    ev = (delta[None, :] != 0.0)[:, :, None]
    terms = -dw / den[:, :, None] + ratio[:, :, None] * dden / den[:, :, None]
    lam1 = np.sum(np.where(ev, kb[:, :, None] * terms, 0.0), axis=1)
    return cum, lam, lam1, nfloor


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def _as2d(a):
    a = np.ascontiguousarray(a, dtype=np.float64)
    return a[:, None] if a.ndim == 1 else a


def sort_by_time(z):
    """Stable ascending order of ``z`` and, per sorted position, the first
    sorted position sharing its time (start of the tie group)."""
    z = np.asarray(z, dtype=np.float64)
    order = np.argsort(z, kind="stable")
    zs = z[order]
    gstart = np.searchsorted(zs, zs, side="left").astype(np.int64)
    return order, gstart


def smooth_eval(ez, ex, idx, z, xl, h, fam=GAUSSIAN, grad=False, backend=None):
    """At-risk kernel averages at evaluation points ``(ez[e], ex[e])``.

    Returns ``(ey, exy, dey, dexy, nfloor)`` with shapes (m,), (m, q), (m, d),
    (m, q, d); gradients are zero arrays when ``grad`` is false.
    """
    ez = np.ascontiguousarray(ez, dtype=np.float64)
    ex = _as2d(ex)
    idx = _as2d(idx)
    z = np.ascontiguousarray(z, dtype=np.float64)
    xl = _as2d(xl)
    backend = backend or get_backend()
    fn = _smooth_eval_nb if backend == "numba" else _smooth_eval_np
    return fn(ez, ex, idx, z, xl, float(h), int(fam), bool(grad))


def hazard_eval(ez, ex, idx, z, delta, h, b, fam=GAUSSIAN, grad=False, backend=None,
                presorted=None):
    """Local Nelson-Aalen quantities at evaluation points.

    Returns ``(cum, lam, lam1, nfloor)``.  ``presorted`` may carry the output
    of :func:`sort_by_time` for ``z`` to avoid re-sorting in tight loops.
    """
    ez = np.ascontiguousarray(ez, dtype=np.float64)
    ex = _as2d(ex)
    idx = _as2d(idx)
    z = np.asarray(z, dtype=np.float64)
    delta = np.asarray(delta, dtype=np.float64)
    order, gstart = presorted if presorted is not None else sort_by_time(z)
    idx_s = np.ascontiguousarray(idx[order])
    z_s = np.ascontiguousarray(z[order])
    d_s = np.ascontiguousarray(delta[order])
    backend = backend or get_backend()
    fn = _hazard_eval_nb if backend == "numba" else _hazard_eval_np
    return fn(ez, ex, idx_s, z_s, d_s, gstart, float(h), float(b), int(fam), bool(grad))
