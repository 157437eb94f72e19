import numpy as np
import pytest
from conftest import make_data
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from censdr.kernels import KernelDomainError
from censdr.smoothers import (IndexParam, at_risk_smooth, cond_exp_grads, cond_exp_xy, cond_exp_y,
                              smooth_at)
from censdr.survdata import SurvivalDataset


def three_point():
    x = np.array([[0.0, -1.0], [0.5, 0.0], [1.0, 1.0]])
    return SurvivalDataset(x, [1.0, 2.0, 3.0], [1, 1, 1]), IndexParam(np.zeros((1, 1)))


def test_index_param_identity_block():
    beta = IndexParam(np.arange(6.0).reshape(3, 2))
    np.testing.assert_array_equal(beta.beta[:2], np.eye(2))
    assert (beta.p, beta.d) == (5, 2)
    np.testing.assert_array_equal(beta.theta, np.arange(6.0))
    np.testing.assert_array_equal(IndexParam.from_theta(beta.theta, 2).free_block, beta.free_block)
    with pytest.raises(ValueError):
        IndexParam.from_beta(np.full((3, 1), 2.0))
    norm = IndexParam.from_beta(np.array([[2.0], [4.0], [-2.0]]), normalize=True)
    np.testing.assert_allclose(norm.free_block[:, 0], [2.0, -1.0])


def test_all_times_equal():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((8, 3))
    x[:, 2] = 4.2
    data = SurvivalDataset(x, np.full(8, 2.0), np.ones(8))
    beta = IndexParam(np.array([[0.3], [0.1]]))
    np.testing.assert_array_equal(cond_exp_y(data, beta, 0.7), 1.0)
    np.testing.assert_allclose(cond_exp_xy(data, beta, 0.7)[:, 1], 4.2, rtol=1e-15)
    dey, dexy = cond_exp_grads(data, beta, 0.7)
    assert np.all(np.abs(dexy[:, 1, :]) <= 1e-12)
    assert np.all(dey == 0.0)


def test_single_observation():
    data = SurvivalDataset([[0.3, -2.0]], [1.0], [1])
    beta = IndexParam(np.array([[0.5]]))
    assert cond_exp_y(data, beta, 1.0)[0] == 1.0
    assert cond_exp_xy(data, beta, 1.0)[0, 0] == -2.0


def test_three_point_direct_summation():
    data, beta = three_point()
    k = oracles.gauss
    want = (k(-0.5) * 0 + k(0) * 1 + k(0.5) * 1) / (k(-0.5) + k(0) + k(0.5))
    assert cond_exp_y(data, beta, 1.0)[1] == pytest.approx(want, rel=1e-14)
    want_x = (k(0) * 0.0 + k(0.5) * 1.0) / (k(-0.5) + k(0) + k(0.5))
    assert cond_exp_xy(data, beta, 1.0)[1, 0] == pytest.approx(want_x, rel=1e-14)


def test_matches_oracle_everywhere():
    data = make_data(n=30, p=4, ties=True)
    beta = IndexParam(np.array([[0.4, -0.2], [1.1, 0.3]]))
    idx = beta.index(data.covariates)
    xl = data.covariates[:, 2:]
    ey, exy, dey, dexy, _ = smooth_at(data, beta, 0.6, grad=True)
    for i in range(data.n):
        oy, ox = oracles.smooth(idx, data.times, xl, 0.6, data.times[i], idx[i])
        gy, gx = oracles.smooth_grad(idx, data.times, xl, 0.6, data.times[i], idx[i])
        assert ey[i] == pytest.approx(oy, rel=1e-12)
        np.testing.assert_allclose(exy[i], ox, rtol=1e-12, atol=1e-14)
        np.testing.assert_allclose(dey[i], gy, rtol=1e-10, atol=1e-13)
        np.testing.assert_allclose(dexy[i], gx, rtol=1e-10, atol=1e-13)


def test_symmetric_pair_gradient_zero():
    data = SurvivalDataset([[-1.0, 0.0], [1.0, 0.0]], [1.0, 1.0], [1, 1])
    beta = IndexParam(np.zeros((1, 1)))
    _, _, dey, _, _ = smooth_at(data, beta, 0.8, z=[1.0], index=[[0.0]], grad=True)
    assert abs(dey[0, 0]) <= 1e-15


def test_grads_match_finite_differences():
    data = make_data(n=50, p=3, seed=3)
    beta = IndexParam(np.array([[0.7], [-0.4]]))
    idx = beta.index(data.covariates)
    h = 0.5
    step = 1e-5 * h
    zs = np.quantile(data.times, np.linspace(0.05, 0.95, 6))
    us = np.linspace(idx.min(), idx.max(), 6)
    zz, uu = [a.ravel() for a in np.meshgrid(zs, us)]
    _, _, dey, dexy, _ = smooth_at(data, beta, h, z=zz, index=uu[:, None], grad=True)
    yp, xp, _, _, _ = smooth_at(data, beta, h, z=zz, index=(uu + step)[:, None])
    ym, xm, _, _, _ = smooth_at(data, beta, h, z=zz, index=(uu - step)[:, None])
    fd_y = (yp - ym) / (2 * step)
    fd_x = (xp - xm) / (2 * step)
    np.testing.assert_allclose(dey[:, 0], fd_y, rtol=1e-4, atol=1e-8)
    np.testing.assert_allclose(dexy[:, :, 0], fd_x, rtol=1e-4, atol=1e-8)


def test_ratio_in_hull_and_ey_range():
    data = make_data(n=60, p=4, seed=5)
    beta = IndexParam(np.array([[0.2], [-0.5], [1.0]]))
    for h in (0.05, 0.5, 5.0):
        sm = at_risk_smooth(data, beta, h)
        assert np.all(sm.ey > 0) and np.all(sm.ey <= 1)
        xl = data.covariates[:, 1:]
        assert np.all(sm.ratio >= xl.min(axis=0) - 1e-12)
        assert np.all(sm.ratio <= xl.max(axis=0) + 1e-12)


def test_large_bandwidth_limit():
    data = make_data(n=25, p=2, seed=2)
    beta = IndexParam(np.array([[0.5]]))
    ey = cond_exp_y(data, beta, 1e6)
    want = np.array([np.mean(data.times >= t) for t in data.times])
    np.testing.assert_allclose(ey, want, rtol=1e-9)


def test_monotone_at_risk():
    data = make_data(n=20, p=2, seed=4)
    beta = IndexParam(np.array([[0.5]]))
    base = cond_exp_y(data, beta, 0.5)[3]
    times = np.array(data.times)
    times[3] = times.max() + 1.0
    bumped = SurvivalDataset(data.covariates, times, data.events)
    assert cond_exp_y(bumped, beta, 0.5)[3] <= base


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.05, 3.0))
def test_permutation_invariance(seed, h):
    data = make_data(n=15, p=3, seed=seed % 7, ties=True)
    perm = np.random.default_rng(seed).permutation(data.n)
    shuffled = data.subset(perm)
    beta = IndexParam(np.array([[0.3], [-0.8]]))
    a = at_risk_smooth(data, beta, h)
    b = at_risk_smooth(shuffled, beta, h)
    np.testing.assert_allclose(b.ey, a.ey[perm], rtol=1e-12)
    np.testing.assert_allclose(b.exy, a.exy[perm], rtol=1e-12, atol=1e-15)


def test_errors():
    data, beta = three_point()
    with pytest.raises(KernelDomainError):
        cond_exp_y(data, beta, 0.0)
    with pytest.raises(ValueError):
        cond_exp_y(data, IndexParam(np.zeros((2, 1))), 1.0)
    with pytest.raises(KernelDomainError):
        smooth_at(data, beta, 1.0, kernel="epanechnikov", grad=True)
    ey = cond_exp_y(data, beta, 1.0, kernel="epanechnikov")
    assert np.all((ey > 0) & (ey <= 1))
