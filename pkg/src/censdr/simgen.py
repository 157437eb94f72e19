"""Seeded data generators for the five simulation designs and censoring calibration.

All randomness flows through numpy's counter-based Philox4x64-10 bit
generator keyed by a :class:`numpy.random.SeedSequence`, so a (seed, spawn
key) pair reproduces the same stream on every platform.

Censoring times are always built as ``C = f(X) + c * V`` or ``C = c * V * g(X)``
with ``V ~ Uniform(0, 1)`` drawn last; the calibration routine reuses one
sample and bisects on ``c`` with common random numbers.
"""

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np
from scipy.special import ndtr

from .survdata import SurvivalDataset

STUDY_DIMS = {"s1": (7, 1), "s2": (7, 1), "s3": (10, 1), "s4": (6, 2), "s5": (6, 2)}

_B45 = np.array([[1.0, 0.0],
                 [0.0, 1.0],
                 [2.75, -3.125],
                 [-0.75, -1.125],
                 [-1.0, 1.0],
                 [2.0, -2.0]])

TRUE_BETA = {
    "s1": np.array([[1.0, 0.0, -1.0, 0.0, 1.0, 0.0, -1.0]]).T,
    "s2": np.array([[1.0, 1.3, -1.3, 1.0, -0.5, 0.5, -0.5]]).T,
    "s3": np.array([[1.0, -0.6, 0.0, -0.3, -0.1, 0.0, 0.1, 0.3, 0.0, 0.6]]).T,
    "s4": _B45,
    "s5": _B45,
}

_S3_CENSOR_DIR = np.array([0, 0, 0, 1, 1, 0, 0, 0, 0, 0], dtype=np.float64)

CALIBRATION_N = 10000
CALIBRATION_SEED = 20180101


def make_rng(seed, *key):
    """Philox generator for ``seed`` and an optional spawn key (e.g. a replication index)."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class StudySpec:
    """One simulation design.

    ``censor_param`` is the censoring constant (c1..c4, or the uniform upper
    bound for study 5); ``None`` means no censoring (C = +inf).
    """

    study_id: str
    n: int
    censor_param: float = None
    seed: int = 0

    def __post_init__(self):
        if self.study_id not in STUDY_DIMS:
            raise ValueError(f"unknown study {self.study_id!r}; expected one of {sorted(STUDY_DIMS)}")
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if self.censor_param is not None and not self.censor_param > 0:
            raise ValueError("censor_param must be positive or None")

    @property
    def p(self):
        return STUDY_DIMS[self.study_id][0]

    @property
    def d(self):
        return STUDY_DIMS[self.study_id][1]


def _draw(study_id, n, rng):
    """Covariates, event times and the censoring-time pieces ``(base, mult, v)``.

    C = base + mult * c * v, where c is the censoring constant.
    """
    p, _ = STUDY_DIMS[study_id]
    beta = TRUE_BETA[study_id]
    if study_id == "s1":
        x = rng.standard_normal((n, p))
        eps = rng.exponential(1.0, n)
        t = ndtr(5.0 * eps * (np.exp(3.0 * (x @ beta[:, 0])) + 1.0) - 2.0)
        base = ndtr(2.0 * x[:, 1] + 2.0 * x[:, 2])
        mult = np.ones(n)
    elif study_id == "s2":
        x = rng.uniform(0.0, 1.0, (n, p))
        eps = rng.exponential(1.0, n)
        t = np.exp(x @ beta[:, 0] + eps)
        base, mult = np.zeros(n), np.ones(n)
    elif study_id == "s3":
        x = rng.uniform(0.0, 1.0, (n, p))
        eps = rng.standard_normal(n)
        t = np.exp(5.0 - 10.0 * (1.0 - x @ beta[:, 0]) ** 2 + eps)
        base, mult = np.zeros(n), x @ _S3_CENSOR_DIR
    elif study_id == "s4":
        x = rng.uniform(0.0, 1.0, (n, p))
        eps = rng.standard_normal(n)
        t = np.exp(5.0 - 10.0 * np.sum((1.0 - x @ beta) ** 2, axis=1) + eps)
        base, mult = np.zeros(n), np.ones(n)
    else:
        x = rng.standard_normal((n, p))
        t = s5_event_times(x, rng.exponential(1.0, n))
        base, mult = np.zeros(n), np.ones(n)
    v = rng.uniform(0.0, 1.0, n)
    # exp() of a very negative exponent (study 4 tails) can underflow to 0
    t = np.maximum(t, np.finfo(np.float64).tiny)
    return x, t, base, mult, v


def _observe(t, base, mult, v, c):
    if c is None:
        return t.copy(), np.ones_like(t)
    cens = base + mult * c * v
    events = (t <= cens).astype(np.float64)
    z = np.minimum(t, cens)
    # study-3 censoring times can sit arbitrarily close to 0
    z = np.maximum(z, np.finfo(np.float64).tiny)
    return z, events


def gen_study(spec, *key):
    """Draw one dataset; returns ``(SurvivalDataset, true_beta)``."""
    rng = make_rng(spec.seed, *key)
    x, t, base, mult, v = _draw(spec.study_id, spec.n, rng)
    z, events = _observe(t, base, mult, v, spec.censor_param)
    return SurvivalDataset(x, z, events), TRUE_BETA[spec.study_id].copy()


def latent_times(spec, *key):
    """The uncensored event times and covariates of the draw :func:`gen_study` would make."""
    rng = make_rng(spec.seed, *key)
    x, t, _, _, _ = _draw(spec.study_id, spec.n, rng)
    return x, t


def censoring_rate(study_id, c, n=CALIBRATION_N, seed=CALIBRATION_SEED):
    rng = make_rng(seed)
    _, t, base, mult, v = _draw(study_id, n, rng)
    return 1.0 - float(_observe(t, base, mult, v, c)[1].mean())


def calibrate_censoring(study_id, target, n=CALIBRATION_N, seed=CALIBRATION_SEED, tol=1e-4, max_iter=200):
    """Bisect on the censoring constant so the empirical censoring rate hits ``target``.

    The rate is non-increasing in the constant; one sample of size ``n`` is
    reused throughout.
    """
    if not 0.0 < target < 1.0:
        raise ValueError("target censoring rate must lie in (0, 1)")
    rng = make_rng(seed)
    _, t, base, mult, v = _draw(study_id, n, rng)

    def rate(c):
        return 1.0 - float(_observe(t, base, mult, v, c)[1].mean())

    lo, hi = 0.0, 1.0
    while rate(hi) > target:
        lo, hi = hi, hi * 2.0
        if hi > 1e12:
            raise RuntimeError(f"cannot reach censoring rate {target} for {study_id}")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        r = rate(mid)
        if abs(r - target) <= tol:
            return mid
        if r > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _load_constants():
    with resources.files("censdr").joinpath("data/censoring.json").open("r", encoding="utf-8") as fh:
        raw = json.load(fh)
    return {(s, float(r)): c for s, table in raw["constants"].items() for r, c in table.items()}


_CONSTANTS = None


def censor_constant(study_id, rate):
    """Censoring constant for a target rate; ``None`` for rate 0 (no censoring).

    Shipped calibrated values are used for the tabulated rates, anything else
    is calibrated on the spot with the same procedure.
    """
    global _CONSTANTS
    if rate is None or rate == 0:
        return None
    if _CONSTANTS is None:
        _CONSTANTS = _load_constants()
    key = (study_id, round(float(rate), 6))
    if key in _CONSTANTS:
        return _CONSTANTS[key]
    return calibrate_censoring(study_id, float(rate))


def study_spec(study_id, n, censoring, seed):
    """Build a :class:`StudySpec` from a target censoring *rate*."""
    return StudySpec(study_id, int(n), censor_constant(study_id, censoring), int(seed))


def s5_event_times(x, e):
    """Invert the study-5 cumulative hazard t^2/2 * sum_j exp(beta_j'x) at Exp(1) draws ``e``."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    return np.sqrt(2.0 * np.asarray(e) / np.sum(np.exp(x @ _B45), axis=1))


def s5_survival(t, x):
    """Closed-form conditional survival of the study-5 design: exp(-t^2/2 sum_j exp(beta_j'x)).

    ``x`` may be one covariate row or an (n, 6) matrix paired with ``t`` row by row.
    """
    return np.exp(-0.5 * np.asarray(t) ** 2 * np.sum(np.exp(np.asarray(x) @ _B45), axis=-1))
