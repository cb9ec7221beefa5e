import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import integrate

from slfv.geometry import (
    Domain,
    LensQuery,
    ball_volume,
    k_alpha,
    k_alpha_constant,
    lens_volume,
    phi_kernel,
    stable_total_mass,
)


def test_ball_volumes():
    assert ball_volume(1, 2.0) == 4.0
    assert_allclose(ball_volume(2, 1.0), math.pi, rtol=1e-15)
    assert_allclose(ball_volume(3, 1.0), 4.0 * math.pi / 3.0, rtol=1e-15)


def test_ball_volume_rejects_bad_inputs():
    with pytest.raises(ValueError):
        ball_volume(4, 1.0)
    with pytest.raises(ValueError):
        ball_volume(0, 1.0)
    with pytest.raises(ValueError):
        ball_volume(2, -1.0)


def test_lens_trivial_values():
    assert lens_volume(LensQuery(r=1.0, h=1.0, d=1)) == 1.0
    assert_allclose(lens_volume(LensQuery(r=1.0, h=0.0, d=2)), math.pi, rtol=1e-15)
    # Exact zero at and beyond touching distance.
    assert lens_volume(LensQuery(r=1.0, h=2.0, d=3)) == 0.0
    assert lens_volume(LensQuery(r=1.0, h=5.0, d=2)) == 0.0


def _lens_mc(d, r, h, n, seed):
    """Rejection-sampling oracle: fraction of a bounding box inside both balls."""
    rng = np.random.default_rng(seed)
    lo = np.array([h - r] + [-r] * (d - 1))
    hi = np.array([r] + [r] * (d - 1))
    pts = rng.uniform(lo, hi, size=(n, d))
    in_first = np.sum(pts**2, axis=1) < r**2
    shifted = pts.copy()
    shifted[:, 0] -= h
    in_second = np.sum(shifted**2, axis=1) < r**2
    hits = in_first & in_second
    box = np.prod(hi - lo)
    p = hits.mean()
    return box * p, box * math.sqrt(p * (1 - p) / n)


@pytest.mark.parametrize("d,r,h", [(2, 1.0, 1.0), (3, 1.0, 0.8), (2, 2.0, 1.5)])
def test_lens_matches_mc_oracle(d, r, h):
    est, se = _lens_mc(d, r, h, n=2 * 10**7, seed=20240601 + d)
    val = lens_volume(LensQuery(r=r, h=h, d=d))
    assert abs(val - est) < 4.0 * se
    assert abs(val - est) / val < 1e-3


def test_lens_d2_reference_value():
    # Frozen from the MC oracle above (2e7 samples, est 1.22845 +- 0.00031).
    assert_allclose(
        lens_volume(LensQuery(r=1.0, h=1.0, d=2)), 1.2283696986087567, rtol=1e-12
    )


@pytest.mark.parametrize("d", [1, 2, 3])
def test_lens_monotone_and_scaling(d):
    r = 1.3
    hs = np.linspace(0.0, 2.0 * r, 40)
    vals = [lens_volume(LensQuery(r=r, h=h, d=d)) for h in hs]
    assert vals[0] == pytest.approx(ball_volume(d, r), rel=1e-12)
    assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))
    for h in (0.4, 1.0, 1.9):
        scaled = r**d * lens_volume(LensQuery(r=1.0, h=h / r, d=d))
        assert_allclose(lens_volume(LensQuery(r=r, h=h, d=d)), scaled, rtol=1e-12)


@pytest.mark.parametrize("d", [1, 2])
def test_lens_integral_identity(d):
    # int V_r(x1, x2) dx2 = V_r^2, checked by MC over the support |x2| < 2r.
    r = 1.0
    n = 10**6
    rng = np.random.default_rng(77 + d)
    pts = rng.uniform(-2 * r, 2 * r, size=(n, d))
    dist = np.sqrt(np.sum(pts**2, axis=1))
    vals = np.array(
        [lens_volume(LensQuery(r=r, h=h, d=d)) if h < 2 * r else 0.0 for h in dist]
    )
    box = (4 * r) ** d
    est = box * vals.mean()
    se = box * vals.std() / math.sqrt(n)
    assert abs(est - ball_volume(d, r) ** 2) < 4 * se


def _phi_mc_oracle(h, d, alpha, n, seed):
    """Direct MC of the defining (r, z) integral, d=1.

    r is importance-sampled from the tail law on [h/2, inf); z is uniform on
    a box containing both balls.  Independent of the lens closed form.
    """
    rng = np.random.default_rng(seed)
    u = rng.random(n)
    r = 0.5 * h * u ** (-1.0 / (d + alpha))
    mass = (0.5 * h) ** (-(d + alpha)) / (d + alpha)
    z = rng.uniform(-r, r + h)
    inside = (np.abs(z) < r) & (np.abs(z - h) < r)
    vals = inside * (2 * r + h) / (2.0 * r)
    est = mass * vals.mean()
    se = mass * vals.std() / math.sqrt(n)
    return est, se


def test_phi_kernel_against_mc_oracle():
    est, se = _phi_mc_oracle(1.0, 1, 0.5, n=10**7, seed=3)
    val = phi_kernel(1.0, 1, 0.5)
    assert abs(val - est) < 4 * se
    # Frozen quadrature value for the same point.
    assert_allclose(val, 0.7542472332656508, rtol=1e-9)


@pytest.mark.parametrize("d,alpha", [(1, 0.5), (2, 0.7), (2, 1.0), (3, 1.5)])
def test_phi_kernel_scaling_relation(d, alpha):
    base = phi_kernel(1.0, d, alpha)
    for h in (0.5, 2.0):
        assert_allclose(phi_kernel(h, d, alpha) * h ** (d + alpha), base, rtol=1e-6)


def test_phi_kernel_decreasing_to_zero():
    vals = [phi_kernel(h, 1, 0.5) for h in (0.5, 1.0, 2.0, 8.0, 32.0)]
    assert all(v > 0 for v in vals)
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1e-2 * vals[0]


def test_k_alpha_constant_analytic_d1():
    # d=1: int_{1/2}^inf (2r - 1) r^{-2-alpha} dr = 2^{1+alpha} / (alpha (1+alpha)).
    for alpha in (0.25, 0.5, 0.9):
        expected = 2.0 ** (1 + alpha) / (alpha * (1 + alpha))
        assert_allclose(k_alpha_constant(1, alpha), expected, rtol=1e-10)
    assert_allclose(k_alpha_constant(1, 0.5), 3.7712361663282867, rtol=1e-12)


def test_k_alpha_defining_identity():
    c = k_alpha_constant(1, 0.5)
    assert_allclose(k_alpha(2.0, 1, 0.5), c * 2.0**-0.5, rtol=1e-14)


@pytest.mark.parametrize("d,alpha", [(2, 1.0), (3, 1.2)])
def test_k_alpha_scaling_by_direct_quadrature(d, alpha):
    # Quadrature of the defining integral at several separations; h^alpha * K
    # must be constant to 1e-6 relative.
    def direct(h):
        val, _ = integrate.quad(
            lambda r: lens_volume(LensQuery(r=r, h=h, d=d)) / r ** (d + alpha + 1),
            0.5 * h,
            np.inf,
            epsabs=1e-12,
            limit=200,
        )
        return val

    ref = direct(1.0)
    for h in (0.5, 2.0):
        assert_allclose(direct(h) * h**alpha, ref, rtol=1e-6)
        assert_allclose(k_alpha(h, d, alpha), direct(h), rtol=1e-8)


def test_alpha_admissibility_boundary():
    # The stable index is rejected at and above min(d, 2).
    with pytest.raises(ValueError):
        phi_kernel(1.0, 1, 1.0)
    with pytest.raises(ValueError):
        k_alpha_constant(2, 2.0)
    with pytest.raises(ValueError):
        phi_kernel(1.0, 3, 2.5)
    with pytest.raises(ValueError):
        k_alpha_constant(1, -0.5)


def test_stable_total_mass():
    assert_allclose(stable_total_mass(1, 0.5), 1.0 / 1.5, rtol=1e-15)
    assert_allclose(stable_total_mass(2, 1.0), 1.0 / 3.0, rtol=1e-15)


class TestDomain:
    def test_validation(self):
        with pytest.raises(ValueError):
            Domain(d=4, L=10.0)
        with pytest.raises(ValueError):
            Domain(d=1, L=0.0)

    def test_minimum_image_distance_1d(self):
        dom = Domain(d=1, L=10.0)
        assert dom.distance(np.array(1.0), np.array(9.5)) == pytest.approx(1.5)
        assert dom.distance(np.array(0.0), np.array(5.0)) == pytest.approx(5.0)

    def test_minimum_image_distance_2d(self):
        dom = Domain(d=2, L=4.0)
        x = np.array([0.5, 0.5])
        y = np.array([3.9, 0.5])
        assert dom.distance(x, y) == pytest.approx(0.6)

    def test_distance_bounded_by_half_diagonal(self):
        rng = np.random.default_rng(11)
        for d in (1, 2, 3):
            dom = Domain(d=d, L=7.0)
            xs = rng.uniform(0, 7.0, size=(200, d))
            ys = rng.uniform(0, 7.0, size=(200, d))
            dist = dom.distance(xs, ys)
            assert np.all(dist <= dom.max_distance + 1e-12)

    def test_wrap(self):
        dom = Domain(d=1, L=5.0)
        assert dom.wrap(np.array(6.5)) == pytest.approx(1.5)
        assert dom.wrap(np.array(-0.5)) == pytest.approx(4.5)
