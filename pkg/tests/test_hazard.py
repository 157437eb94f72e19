import csv

import numpy as np
import pytest
from conftest import make_data
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import trapezoid

import oracles
from censdr.hazard import (cum_hazard, estimate, hazard, hazard_at, hazard_grad, hazard_grid,
                           log_likelihood, write_grid_csv)
from censdr.kernels import KernelDomainError
from censdr.smoothers import IndexParam
from censdr.survdata import SurvivalDataset

B1 = IndexParam(np.array([[0.6], [-0.3]]))


def test_no_events_is_zero():
    data = make_data(n=12, censor=1.1)
    assert data.n_events == 0
    assert cum_hazard(5.0, [0.1], data, B1, 0.5) == 0.0
    assert hazard(1.0, [0.1], data, B1, 0.5, 0.3) == 0.0
    np.testing.assert_array_equal(hazard_grad(1.0, [0.1], data, B1, 0.5, 0.3), [0.0])


def test_single_event():
    data = SurvivalDataset([[0.4, 1.0]], [2.0], [1])
    beta = IndexParam(np.array([[0.5]]))
    assert cum_hazard(2.0, [0.9], data, beta, 0.3) == pytest.approx(1.0, rel=1e-15)
    assert cum_hazard(1.9, [0.9], data, beta, 0.3) == 0.0
    b = 0.7
    assert hazard(2.5, [0.9], data, beta, 0.3, b) == pytest.approx(oracles.gauss(-0.5 / b) / b, rel=1e-14)


def test_classical_nelson_aalen():
    rng = np.random.default_rng(0)
    n = 40
    x = np.column_stack([np.full(n, 0.7), rng.standard_normal(n)])
    z = np.sort(rng.exponential(size=n)) + 0.01
    e = np.ones(n)
    data = SurvivalDataset(x, z, e)
    beta = IndexParam(np.zeros((1, 1)))
    cum, _, _, _ = hazard_at(z, np.full((n, 1), 0.7), data, beta, 0.4, grad=False)
    want = np.cumsum(1.0 / (n - np.arange(n)))
    assert np.max(np.abs(cum - want)) <= 1e-12


def test_classical_with_censoring_and_ties():
    rng = np.random.default_rng(3)
    n = 30
    x = np.column_stack([np.zeros(n), rng.standard_normal(n)])
    z = np.round(rng.exponential(size=n), 1) + 0.1
    e = (rng.uniform(size=n) < 0.7).astype(float)
    data = SurvivalDataset(x, z, e)
    cum, _, _, _ = hazard_at(z, np.zeros((n, 1)), data, IndexParam(np.zeros((1, 1))), 1.0, grad=False)
    assert np.max(np.abs(cum - oracles.nelson_aalen(z, e))) <= 1e-12


def test_matches_oracle():
    data = make_data(n=25, p=4, ties=True, seed=8)
    beta = IndexParam(np.array([[0.4, -0.2], [1.1, 0.3]]))
    idx = beta.index(data.covariates)
    pts = [(data.times[i], idx[i]) for i in range(0, data.n, 3)] + [(1.3, np.array([0.2, -0.4]))]
    for z0, u0 in pts:
        est = estimate(z0, u0, data, beta, 0.6, 0.4)
        assert est.cum_hazard == pytest.approx(
            oracles.cum_hazard(idx, data.times, data.events, 0.6, z0, u0), rel=1e-12)
        assert est.hazard == pytest.approx(
            oracles.hazard(idx, data.times, data.events, 0.6, 0.4, z0, u0), rel=1e-12)
        np.testing.assert_allclose(
            est.hazard_grad, oracles.hazard_grad(idx, data.times, data.events, 0.6, 0.4, z0, u0),
            rtol=1e-10, atol=1e-13)


def test_mirror_symmetric_gradient_zero():
    x = np.array([[-1.0, 0.0], [1.0, 0.0], [-0.4, 0.0], [0.4, 0.0]])
    data = SurvivalDataset(x, [1.0, 1.0, 2.0, 2.0], [1, 1, 0, 0])
    g = hazard_grad(1.5, [0.0], data, IndexParam(np.zeros((1, 1))), 0.7, 0.5)
    assert abs(g[0]) <= 1e-15


def test_gradient_finite_differences():
    data = make_data(n=60, p=3, seed=11)
    idx = B1.index(data.covariates)
    h, b = 0.5, 0.4
    step = 1e-5 * h
    zs = np.linspace(data.times.min(), data.times.max(), 8)
    us = np.linspace(idx.min(), idx.max(), 8)
    zz, uu = [a.ravel() for a in np.meshgrid(zs, us)]
    _, lam, lam1, _ = hazard_at(zz, uu[:, None], data, B1, h, b)
    lp = hazard_at(zz, (uu + step)[:, None], data, B1, h, b, grad=False)[1]
    lm = hazard_at(zz, (uu - step)[:, None], data, B1, h, b, grad=False)[1]
    np.testing.assert_allclose(lam1[:, 0], (lp - lm) / (2 * step), rtol=1e-4, atol=1e-8)
    assert np.all(lam >= 0)


def test_mass_preserved_by_time_smoothing():
    data = make_data(n=40, p=3, seed=2)
    u0 = np.array([0.3])
    b = 0.2
    t = np.linspace(data.times.min() - 12 * b, data.times.max() + 12 * b, 20001)
    lam = hazard_at(t, np.repeat(u0[None], t.size, axis=0), data, B1, 0.6, b, grad=False)[1]
    total = cum_hazard(np.inf, u0, data, B1, 0.6)
    assert abs(trapezoid(lam, t) - total) <= 1e-3 * total


def test_cum_hazard_nondecreasing():
    data = make_data(n=50, p=3, seed=6, ties=True)
    t = np.linspace(0, data.times.max() * 1.1, 200)
    for u in (-1.0, 0.0, 1.5):
        cum = hazard_at(t, np.full((t.size, 1), u), data, B1, 0.4, grad=False)[0]
        assert np.all(np.diff(cum) >= 0)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_permutation_invariance(seed):
    data = make_data(n=18, p=3, seed=seed % 5, ties=True)
    perm = np.random.default_rng(seed).permutation(data.n)
    pts_z = data.times[:5]
    pts_u = B1.index(data.covariates)[:5]
    a = hazard_at(pts_z, pts_u, data, B1, 0.5, 0.3)
    b = hazard_at(pts_z, pts_u, data.subset(perm), B1, 0.5, 0.3)
    for u, v in zip(a[:3], b[:3]):
        np.testing.assert_allclose(u, v, rtol=1e-12, atol=1e-15)


def test_grid_layout_and_csv(tmp_path):
    data = make_data(n=30, p=3, seed=1)
    grid = hazard_grid(data, B1, 0.5, 0.3, [0.5, 1.0, 2.0], [[-1.0], [0.0]])
    np.testing.assert_array_equal(grid["t"], [0.5, 1.0, 2.0, 0.5, 1.0, 2.0])
    np.testing.assert_array_equal(grid["index"][:, 0], [-1, -1, -1, 0, 0, 0])
    assert grid["cum_hazard"][4] == pytest.approx(cum_hazard(1.0, [0.0], data, B1, 0.5), rel=1e-14)
    path = tmp_path / "g.csv"
    write_grid_csv(grid, path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "index_1", "cum_hazard", "hazard"]
    assert len(rows) == 7


def test_log_likelihood_oracle():
    data = make_data(n=20, p=3, seed=9)
    idx = B1.index(data.covariates)
    want = 0.0
    for i in range(data.n):
        if data.events[i]:
            want += np.log(oracles.hazard(idx, data.times, data.events, 0.5, 0.3, data.times[i], idx[i]))
        want -= oracles.cum_hazard(idx, data.times, data.events, 0.5, data.times[i], idx[i])
    assert log_likelihood(data, B1, 0.5, 0.3) == pytest.approx(want, rel=1e-12)
    train, val = data.subset(np.arange(10)), data.subset(np.arange(10, 20))
    it, iv = B1.index(train.covariates), B1.index(val.covariates)
    want = 0.0
    for i in range(val.n):
        if val.events[i]:
            want += np.log(oracles.hazard(it, train.times, train.events, 0.5, 0.3, val.times[i], iv[i]))
        want -= oracles.cum_hazard(it, train.times, train.events, 0.5, val.times[i], iv[i])
    assert log_likelihood(val, B1, 0.5, 0.3, fit_data=train) == pytest.approx(want, rel=1e-12)


def test_errors():
    data = make_data(n=10)
    with pytest.raises(KernelDomainError):
        hazard(1.0, [0.0], data, B1, 0.5, 0.0)
    with pytest.raises(KernelDomainError):
        hazard_at([1.0], [[0.0]], data, B1, 0.5, 0.3, kernel="epanechnikov")
    with pytest.raises(ValueError):
        hazard_at([1.0, 2.0], [[0.0]], data, B1, 0.5, 0.3)
