import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from censdr.kernels import (B_EXP, H_EXP, Bandwidths, BandwidthWarning, KernelDomainError, KernelSpec,
                            default_bandwidths, kernel_eval, kernel_grad, rate_exponents,
                            scaled_kernel, scaled_kernel_grad)

G1 = KernelSpec("gaussian", 1)
G2 = KernelSpec("gaussian", 2)
E1 = KernelSpec("epanechnikov", 1)


def test_closed_forms():
    assert kernel_eval([0.0], G1) == pytest.approx(0.3989423, abs=1e-7)
    assert kernel_eval([0.0, 0.0], G2) == pytest.approx(0.1591549, abs=1e-7)
    assert kernel_grad([0.0], G1)[0] == 0.0
    assert kernel_grad([1.0], G1)[0] == pytest.approx(-0.2419707, abs=1e-7)
    assert scaled_kernel([0.0], 0.5, G1) == pytest.approx(0.7978846, abs=1e-7)


@given(st.lists(st.floats(-5, 5), min_size=2, max_size=2), st.sampled_from(["gaussian", "epanechnikov"]))
def test_symmetry(u, fam):
    spec = KernelSpec(fam, 2)
    assert kernel_eval(u, spec) == kernel_eval([-v for v in u], spec)


def test_gaussian_positive():
    assert np.all(kernel_eval(np.linspace(-30, 30, 101)[:, None], G1) > 0)


@pytest.mark.parametrize("spec", [G1, G2])
def test_grad_matches_central_differences(spec):
    step = 1e-5
    grid = np.linspace(-3, 3, 25)
    pts = np.array(np.meshgrid(*[grid] * spec.dim)).reshape(spec.dim, -1).T
    for u in pts:
        g = kernel_grad(u, spec)
        for m in range(spec.dim):
            e = np.zeros(spec.dim)
            e[m] = step
            fd = (kernel_eval(u + e, spec) - kernel_eval(u - e, spec)) / (2 * step)
            if abs(fd) > 1e-8:
                assert abs(g[m] - fd) <= 1e-6 * abs(fd)
            else:
                assert abs(g[m] - fd) <= 1e-12


def test_epanechnikov_kink():
    with pytest.raises(KernelDomainError):
        kernel_grad([1.0], E1)
    assert kernel_grad([0.5], E1)[0] == pytest.approx(-0.75)


def test_scaling_identity():
    u = np.array([0.3, -1.2])
    assert scaled_kernel(u, 1.0, G2) == kernel_eval(u, G2)
    np.testing.assert_allclose(scaled_kernel_grad(u, 2.0, G2), kernel_grad(u / 2, G2) / 8)


@pytest.mark.parametrize("h", [0.1, 0.7, 3.0])
def test_integrates_to_one(h):
    val, _ = quad(lambda v: scaled_kernel([v], h, G1), -40 * h, 40 * h, points=[0.0])
    assert abs(val - 1) <= 1e-4
    val, _ = quad(lambda v: scaled_kernel([v], h, E1), -h, h)
    assert abs(val - 1) <= 1e-4


def test_bad_bandwidth():
    with pytest.raises(KernelDomainError):
        scaled_kernel([0.0], 0.0)
    with pytest.raises(KernelDomainError):
        Bandwidths(-1.0, 1.0)


def test_order_condition_warning():
    with pytest.warns(BandwidthWarning):
        assert not Bandwidths(1.0, 1.0, nu=2).check(4)
    assert Bandwidths(1.0, 1.0).check(2)


def test_default_bandwidths_examples():
    bw = default_bandwidths(256, 1, [1.0], 1.0)
    assert bw.h == pytest.approx(2 ** -2.25, rel=1e-12)
    assert bw.h == pytest.approx(0.2102241, abs=1e-7)
    assert bw.b == pytest.approx(0.5, rel=1e-12)
    assert default_bandwidths(256, 1, [1.0], 2.0).b == pytest.approx(1.0, rel=1e-12)
    ratio = default_bandwidths(1024, 1, [1.0], 1.0).h / bw.h
    assert ratio == pytest.approx(4 ** (-9 / 32), rel=1e-12)
    assert ratio == pytest.approx(0.6771, abs=1e-4)
    two = default_bandwidths(256, 2, [1.0, 4.0], 1.0)
    assert two.h == pytest.approx(2 ** -2.25 * 2.0, rel=1e-12)


@pytest.mark.parametrize("d", [1, pytest.param(2, marks=pytest.mark.xfail(
    strict=True, reason="the power-law rule gives n h^4 b ~ n^(-1/4) when d = 2"))])
def test_rate_exponents_meet_conditions(d):
    assert H_EXP < 0 and B_EXP < 0
    grow, shrink = rate_exponents(d, 2)
    assert grow > 0
    assert shrink < 0
    assert 2 * 2 > d + 1
    assert math.isclose(grow, 1 + (d + 2) * H_EXP + B_EXP)
