"""Univariate and product kernels, scaled forms K_h and the default bandwidth rule."""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ._hot import EPANECHNIKOV, GAUSSIAN

FAMILIES = {"gaussian": GAUSSIAN, "epanechnikov": EPANECHNIKOV}
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class KernelDomainError(ValueError):
    """Kernel evaluated outside its domain (non-positive bandwidth, kink)."""


class BandwidthWarning(UserWarning):
    pass


@dataclass(frozen=True)
class KernelSpec:
    family: str = "gaussian"
    dim: int = 1

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.dim < 1:
            raise ValueError("kernel dimension must be >= 1")

    @property
    def code(self):
        return FAMILIES[self.family]


@dataclass(frozen=True)
class Bandwidths:
    """Index-space bandwidth ``h``, time bandwidth ``b`` and kernel order ``nu``."""

    h: float
    b: float
    nu: int = 2

    def __post_init__(self):
        if not (self.h > 0 and math.isfinite(self.h)):
            raise KernelDomainError(f"h must be positive, got {self.h}")
        if not (self.b > 0 and math.isfinite(self.b)):
            raise KernelDomainError(f"b must be positive, got {self.b}")
        if self.nu < 2:
            raise ValueError("kernel order nu must be >= 2")

    def check(self, d):
        """Warn when the order condition 2*nu > d + 1 fails; return whether it holds."""
        ok = 2 * self.nu > d + 1
        if not ok:
            warnings.warn(f"2*nu={2 * self.nu} <= d+1={d + 1}: bandwidth order condition violated",
                          BandwidthWarning, stacklevel=2)
        return ok

    def as_dict(self):
        return {"h": self.h, "b": self.b, "nu": self.nu}


def _univariate(u, family):
    if family == "gaussian":
        return _INV_SQRT_2PI * np.exp(-0.5 * u * u)
    return np.where(np.abs(u) < 1.0, 0.75 * (1.0 - u * u), 0.0)


def _univariate_deriv(u, family):
    if family == "gaussian":
        return -u * _INV_SQRT_2PI * np.exp(-0.5 * u * u)
    return np.where(np.abs(u) < 1.0, -1.5 * u, 0.0)


def _coerce(u, spec):
    u = np.atleast_1d(np.asarray(u, dtype=np.float64))
    if u.shape[-1] != spec.dim:
        raise ValueError(f"expected last axis of length {spec.dim}, got {u.shape}")
    return u


def kernel_eval(u, spec=KernelSpec()):
    """Product kernel K(u) = prod_j K(u_j); ``u`` may carry leading batch axes."""
    u = _coerce(u, spec)
    out = np.prod(_univariate(u, spec.family), axis=-1)
    return float(out) if out.ndim == 0 else out


def kernel_grad(u, spec=KernelSpec()):
    """Gradient of the product kernel in ``u``.

    The Epanechnikov product is not differentiable where any |u_j| == 1; that
    raises :class:`KernelDomainError`.
    """
    u = _coerce(u, spec)
    if spec.family == "epanechnikov" and np.any(np.abs(u) == 1.0):
        raise KernelDomainError("epanechnikov kernel is not differentiable at |u_j| = 1")
    k = _univariate(u, spec.family)
    dk = _univariate_deriv(u, spec.family)
    out = np.empty_like(u)
    for m in range(spec.dim):
        others = np.delete(k, m, axis=-1)
        out[..., m] = dk[..., m] * np.prod(others, axis=-1)
    return out


def scaled_kernel(v, h, spec=KernelSpec()):
    """K_h(v) = h^{-d} prod_j K(v_j / h)."""
    if not h > 0:
        raise KernelDomainError(f"bandwidth must be positive, got {h}")
    return kernel_eval(np.asarray(v, dtype=np.float64) / h, spec) / h ** spec.dim


def scaled_kernel_grad(v, h, spec=KernelSpec()):
    """Gradient of K_h in v: h^{-(d+1)} (grad K)(v / h)."""
    if not h > 0:
        raise KernelDomainError(f"bandwidth must be positive, got {h}")
    return kernel_grad(np.asarray(v, dtype=np.float64) / h, spec) / h ** (spec.dim + 1)


def default_bandwidths(n, d, sd_index, sd_time):
    """Power-law bandwidths: h = n^(-9/32) * geomean(sd_index), b = n^(-1/8) * sd_time.

    For d = 1 this is exactly n^{-1/4-1/32} times the sd of the initial index
    and n^{-1/4+1/8} times the sd of the observed times.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    sd_index = np.atleast_1d(np.asarray(sd_index, dtype=np.float64))
    if sd_index.shape[0] != d:
        raise ValueError(f"sd_index must have length d={d}")
    if np.any(sd_index <= 0) or not sd_time > 0:
        raise ValueError("standard deviations must be positive")
    scale = float(np.exp(np.mean(np.log(sd_index))))
    return Bandwidths(h=n ** (-9.0 / 32.0) * scale, b=n ** (-1.0 / 8.0) * float(sd_time), nu=2)


# Exponents of the default rule: h ~ n^H_EXP, b ~ n^B_EXP.
H_EXP = -9.0 / 32.0
B_EXP = -1.0 / 8.0


def rate_exponents(d, nu=2):
    """Exponents of n in (n h^{d+2} b, n h^{2 nu}) under the default rule.

    The bandwidth conditions need the first positive and the second negative.
    """
    return 1.0 + (d + 2) * H_EXP + B_EXP, 1.0 + 2 * nu * H_EXP
