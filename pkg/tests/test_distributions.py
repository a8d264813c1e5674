import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special, stats

from isac_ed.distributions import (
    ConvergenceError,
    GammaParams,
    GaussianMoments,
    SumGammaParams,
    gamma_cdf,
    gamma_inv_cdf,
    gamma_moments,
    gamma_pdf,
    gamma_sf,
    gaussian_cdf,
    gaussian_inv_cdf,
    kld_gaussian,
    kummer_1f1,
    log_kummer_1f1,
    sum_gamma_cdf,
    sum_gamma_pdf,
)


# --- Gamma ------------------------------------------------------------------


def test_gamma_cdf_at_zero():
    assert gamma_cdf(0.0, GammaParams(5, 1.0)) == 0.0


@pytest.mark.parametrize("theta", [1.0, 3.7, 1e-13])
def test_gamma_cdf_exponential(theta):
    assert gamma_cdf(theta, GammaParams(1, theta)) == pytest.approx(1 - math.exp(-1), rel=1e-14)


def test_gamma_cdf_128_unit_exponentials():
    v = gamma_cdf(103.17, GammaParams(128, 1.0))
    assert 0.005 < v < 0.03
    assert v == pytest.approx(stats.gamma.cdf(103.17, 128), rel=1e-12)
    rng = np.random.default_rng(1)
    sums = rng.exponential(size=(100_000, 128)).sum(axis=1)
    emp = np.mean(sums <= 103.17)
    assert abs(emp - v) < 4 * math.sqrt(v * (1 - v) / sums.size)


def test_gamma_cdf_rejects_bad_input():
    with pytest.raises(ValueError):
        gamma_cdf(-1.0, GammaParams(2, 1.0))
    with pytest.raises(ValueError):
        gamma_cdf(math.nan, GammaParams(2, 1.0))
    with pytest.raises(ValueError):
        gamma_cdf(math.inf, GammaParams(2, 1.0))
    with pytest.raises(ValueError):
        GammaParams(0, 1.0)
    with pytest.raises(ValueError):
        GammaParams(1, -1.0)


@pytest.mark.parametrize("k", [1, 2, 32, 128, 640, 1280])
def test_gamma_cdf_matches_scipy(k):
    xs = stats.gamma.ppf([1e-6, 0.01, 0.3, 0.5, 0.7, 0.99, 1 - 1e-6], k)
    for x in xs:
        # lgamma(k) rounding bounds the attainable accuracy at large k
        assert gamma_cdf(x, GammaParams(k, 1.0)) == pytest.approx(stats.gamma.cdf(x, k), abs=1e-12)
        assert gamma_sf(x, GammaParams(k, 1.0)) == pytest.approx(stats.gamma.sf(x, k), rel=1e-10)


def test_gamma_sf_deep_tail_is_relative_accurate():
    p = GammaParams(128, 1.0)
    x = stats.gamma.isf(1e-12, 128)
    assert gamma_sf(x, p) == pytest.approx(1e-12, rel=1e-9)


def test_gamma_pdf_matches_scipy():
    for k, th, x in [(1, 2.0, 0.5), (64, 2e-13, 1.3e-11), (640, 1.0, 600.0)]:
        assert gamma_pdf(x, GammaParams(k, th)) == pytest.approx(stats.gamma.pdf(x, k, scale=th),
                                                                  rel=1e-10)


@given(x=st.floats(0.0, 1e4))
def test_gamma_cdf_monotone(x):
    p = GammaParams(32, 3.0)
    assert gamma_cdf(x, p) <= gamma_cdf(x * 1.01 + 1e-9, p)


@pytest.mark.parametrize("k,theta,expected", [
    (1, 1.0, (1.0, 1.0)),
    (64, 2e-13, (1.28e-11, 2.56e-24)),
])
def test_gamma_moments(k, theta, expected):
    m, v = gamma_moments(GammaParams(k, theta))
    assert m == pytest.approx(expected[0], rel=1e-15)
    assert v == pytest.approx(expected[1], rel=1e-15)


def test_gamma_moments_noise_only():
    s2 = 3.98e-13
    m, v = gamma_moments(GammaParams(128, s2 / 128))
    assert m == pytest.approx(s2, rel=1e-15)
    assert v == pytest.approx(s2 ** 2 / 128, rel=1e-15)


def test_gamma_inv_cdf_trivial():
    assert gamma_inv_cdf(1 - math.exp(-1), GammaParams(1, 1.0)) == pytest.approx(1.0, rel=1e-13)
    assert gamma_inv_cdf(0.5, GammaParams(1, 2.0)) == pytest.approx(2 * math.log(2), rel=1e-13)


def _bisect_quantile(x, k):
    lo, hi = 0.0, 10.0 * k + 100
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if special.gammainc(k, mid) < x:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_gamma_inv_cdf_scaling_against_bisection():
    unit = gamma_inv_cdf(0.9, GammaParams(128, 1.0))
    assert unit == pytest.approx(_bisect_quantile(0.9, 128), rel=1e-12)
    scaled = gamma_inv_cdf(0.9, GammaParams(128, 3.5e-15))
    assert scaled == pytest.approx(3.5e-15 * unit, rel=4 * np.finfo(float).eps)


@pytest.mark.parametrize("x", [0.0, 1.0, -0.1, 1.5, math.nan])
def test_gamma_inv_cdf_rejects(x):
    with pytest.raises(ValueError):
        gamma_inv_cdf(x, GammaParams(3, 1.0))


def test_convergence_error_carries_estimate():
    e = ConvergenceError("no luck", estimate=1.0, error=0.5)
    assert e.estimate == 1.0 and e.error == 0.5


@settings(max_examples=200, deadline=None)
@given(k=st.integers(1, 1280), x=st.floats(1e-6, 1 - 1e-6))
def test_gamma_quantile_round_trip_property(k, x):
    lam = gamma_inv_cdf(x, GammaParams(k, 1.0))
    assert gamma_cdf(lam, GammaParams(k, 1.0)) == pytest.approx(x, abs=1e-10)


# --- Kummer -----------------------------------------------------------------


def test_kummer_trivial_cases():
    assert kummer_1f1(3.0, 4.0, 0.0) == 1.0
    assert kummer_1f1(1, 2, 3) == pytest.approx((math.exp(3) - 1) / 3, rel=1e-13)
    assert kummer_1f1(5, 5, -2) == pytest.approx(math.exp(-2), rel=1e-13)


def test_kummer_rejects_nonpositive_integer_b():
    for b in (0, -1, -3):
        with pytest.raises(ValueError):
            kummer_1f1(1.0, b, 1.0)


@pytest.mark.parametrize("a,b,z", [
    (64, 128, -64.0), (64, 128, 50.0), (32, 128, -200.0), (96, 128, 120.0),
    (1, 1280, -900.0), (640, 1280, -300.0), (3, 7, 12.5), (10, 11, -0.3),
])
def test_kummer_matches_scipy(a, b, z):
    assert kummer_1f1(a, b, z) == pytest.approx(special.hyp1f1(a, b, z), rel=1e-10)


def test_log_kummer_beyond_float_range():
    lv, sign = log_kummer_1f1(64, 128, 2000.0)
    assert sign == 1.0
    # Kummer transform keeps the scipy oracle in range
    ref = 2000.0 + math.log(special.hyp1f1(64, 128, -2000.0))
    assert lv == pytest.approx(ref, rel=1e-12)
    with pytest.raises(OverflowError):
        kummer_1f1(64, 128, 2000.0)


def test_kummer_random_against_quadrature():
    # Euler integral for b > a > 0:
    # 1F1(a;b;z) = Gamma(b) / (Gamma(a) Gamma(b-a)) int_0^1 e^{zt} t^{a-1} (1-t)^{b-a-1} dt
    rng = np.random.default_rng(7)
    for _ in range(100):
        a = int(rng.integers(1, 40))
        b = a + int(rng.integers(1, 40))
        z = float(rng.uniform(-60, 60))
        c = math.lgamma(b) - math.lgamma(a) - math.lgamma(b - a)
        f = lambda t: math.exp(c + z * t + (a - 1) * math.log(t) + (b - a - 1) * math.log1p(-t))
        ref, _ = integrate.quad(f, 0, 1, epsabs=0, epsrel=1e-13, limit=200)
        assert kummer_1f1(a, b, z) == pytest.approx(ref, rel=1e-9)


# --- Sum of two Gammas --------------------------------------------------------


def test_sum_gamma_equal_scales_reduces_to_gamma():
    p = SumGammaParams(GammaParams(3, 2.0), GammaParams(5, 2.0))
    s = np.linspace(0.1, 60, 50)
    np.testing.assert_allclose(sum_gamma_pdf(s, p), stats.gamma.pdf(s, 8, scale=2.0), rtol=1e-12)


def test_sum_gamma_pdf_normalized_and_mean():
    p = SumGammaParams(GammaParams(4, 1.5), GammaParams(7, 0.4))
    total, _ = integrate.quad(lambda s: sum_gamma_pdf(s, p), 0, np.inf, limit=200)
    mean, _ = integrate.quad(lambda s: s * sum_gamma_pdf(s, p), 0, np.inf, limit=200)
    assert total == pytest.approx(1.0, abs=1e-9)
    assert mean == pytest.approx(4 * 1.5 + 7 * 0.4, rel=1e-9)


def test_sum_gamma_pdf_against_histogram():
    s2 = 1.0
    p = SumGammaParams(GammaParams(64, 2 * s2 / 128), GammaParams(64, s2 / 128))
    rng = np.random.default_rng(3)
    draws = rng.gamma(64, 2 / 128, 10 ** 6) + rng.gamma(64, 1 / 128, 10 ** 6)
    hist, edges = np.histogram(draws, bins=120, density=True)
    mid = 0.5 * (edges[1:] + edges[:-1])
    dens = sum_gamma_pdf(mid, p)
    assert np.max(np.abs(hist - dens)) < 0.02 * dens.max()


def test_sum_gamma_pdf_huge_shapes_stay_finite():
    p = SumGammaParams(GammaParams(1000, 1e-13), GammaParams(280, 3e-16))
    s = np.linspace(1e-12, 2e-10, 200)
    d = sum_gamma_pdf(s, p)
    assert np.all(np.isfinite(d)) and np.all(d >= 0)


def test_sum_gamma_pdf_rejects_negative():
    p = SumGammaParams(GammaParams(2, 1.0), GammaParams(2, 3.0))
    with pytest.raises(ValueError):
        sum_gamma_pdf(-1.0, p)


def test_sum_gamma_cdf_zero_and_reduction():
    p = SumGammaParams(GammaParams(32, 0.7), GammaParams(96, 0.7))
    assert sum_gamma_cdf(0.0, p) == 0.0
    for lam in np.linspace(40, 140, 100):
        assert sum_gamma_cdf(lam, p) == pytest.approx(gamma_cdf(lam, GammaParams(128, 0.7)), abs=1e-8)


def test_sum_gamma_cdf_against_convolution():
    p = SumGammaParams(GammaParams(5, 2.0), GammaParams(9, 0.3))
    for lam in (3.0, 10.0, 15.0, 25.0):
        ref, _ = integrate.quad(lambda t: stats.gamma.pdf(t, 5, scale=2.0)
                                * stats.gamma.cdf(lam - t, 9, scale=0.3), 0, lam,
                                epsabs=1e-13, limit=200)
        assert sum_gamma_cdf(lam, p) == pytest.approx(ref, abs=1e-9)


def test_sum_gamma_cdf_against_empirical():
    p = SumGammaParams(GammaParams(12, 1.0), GammaParams(20, 0.25))
    rng = np.random.default_rng(11)
    draws = np.sort(rng.gamma(12, 1.0, 10 ** 5) + rng.gamma(20, 0.25, 10 ** 5))
    grid = np.linspace(draws[100], draws[-100], 40)
    emp = np.searchsorted(draws, grid, side="right") / draws.size
    cdf = sum_gamma_cdf(grid, p)
    assert np.max(np.abs(emp - cdf)) < 0.01
    assert np.all(np.diff(cdf) >= 0)


# --- Gaussian -----------------------------------------------------------------


def test_gaussian_symmetries():
    m = GaussianMoments(2.5, 4.0)
    assert gaussian_cdf(2.5, m) == 0.5
    for x in (-3.0, 0.0, 1.7, 9.0):
        assert gaussian_cdf(x, m) + gaussian_cdf(5.0 - x, m) == pytest.approx(1.0, abs=1e-15)


def test_gaussian_cdf_against_quadrature():
    m = GaussianMoments(1.2, 0.09)
    pdf = lambda x: math.exp(-(x - 1.2) ** 2 / 0.18) / math.sqrt(2 * math.pi * 0.09)
    ref, _ = integrate.quad(pdf, -np.inf, 1.5, epsabs=1e-14)
    assert gaussian_cdf(1.5, m) == pytest.approx(ref, abs=1e-10)


# |mean| / std stays below 1e3 so the ulp of the mean is negligible on the std scale
@given(p=st.floats(1e-12, 1 - 1e-12), mean=st.floats(-100, 100), var=st.floats(1e-2, 1e6))
def test_gaussian_round_trip(p, mean, var):
    m = GaussianMoments(mean, var)
    assert gaussian_cdf(gaussian_inv_cdf(p, m), m) == pytest.approx(p, abs=1e-12)


def test_gaussian_inverse_rejects():
    with pytest.raises(ValueError):
        gaussian_inv_cdf(0.5, GaussianMoments(0.0, 0.0))
    with pytest.raises(ValueError):
        gaussian_inv_cdf(1.0, GaussianMoments(0.0, 1.0))
    with pytest.raises(ValueError):
        GaussianMoments(0.0, -1.0)


def test_kld_examples():
    a = GaussianMoments(0.0, 1.0)
    assert kld_gaussian(a, a) == 0.0
    assert kld_gaussian(a, GaussianMoments(1.0, 1.0)) == pytest.approx(0.5, rel=1e-15)
    assert kld_gaussian(a, GaussianMoments(0.0, 4.0)) == pytest.approx(
        math.log(2) + 1 / 8 - 1 / 2, rel=1e-14)
    with pytest.raises(ValueError):
        kld_gaussian(a, GaussianMoments(0.0, 0.0))


def test_kld_nonnegative_random():
    rng = np.random.default_rng(5)
    mu = rng.normal(size=(10_000, 2)) * 10
    var = np.exp(rng.uniform(-5, 5, size=(10_000, 2)))
    for (m0, m1), (v0, v1) in zip(mu, var):
        assert kld_gaussian(GaussianMoments(m0, v0), GaussianMoments(m1, v1)) >= 0
