"""Tempered Hermite process: kernel, covariance routes, spectra, synthesis."""

import math

import numpy as np
import pytest
import scipy.integrate

from tempfrac import rng, thp


class TestKernel:
    def test_vanishes_beyond_t(self):
        assert thp.kernel_g(0.8, 0.5, 1.0, 1.0) == 0.0
        assert thp.kernel_g(0.8, 0.5, 1.0, 2.3) == 0.0

    def test_three_halves_closed_form(self):
        # H = 3/2 makes the integrand exp(-lam(s-y)): at y = 0 the kernel is
        # (1 - exp(-lam t)) / lam
        lam, t = 0.5, 1.0
        assert thp.kernel_g(1.5, lam, t, 0.0) == pytest.approx(
            (1 - math.exp(-lam * t)) / lam, rel=1e-12)

    def test_against_direct_quadrature(self):
        H, lam, t, y = 0.8, 0.5, 1.0, -0.3
        f = lambda s: (s - y) ** (H - 1.5) * math.exp(-lam * (s - y))
        ref, err = scipy.integrate.quad(f, 0.0, t)
        assert thp.kernel_g(H, lam, t, y) == pytest.approx(ref, rel=1e-10)

    def test_domain(self):
        with pytest.raises(ValueError):
            thp.kernel_g(0.8, 0.5, 0.0, 0.1)
        with pytest.raises(ValueError):
            thp.kernel_g(0.4, 0.5, 1.0, 0.1)


class TestSpectralProfile:
    @pytest.mark.parametrize("mu,H", [(0.3, 0.7), (1.0, 0.8), (3.0, 1.2),
                                      (0.001, 4.0 / 3.0), (6.0, 1.7)])
    def test_against_quad_oracle(self, mu, H):
        f = lambda x: (1 - np.cos(x)) / x ** 2 * (mu * mu + x * x) ** (0.5 - H)
        ref = scipy.integrate.quad(f, 0, 50.0, limit=500)[0] \
            + scipy.integrate.quad(f, 50.0, np.inf, limit=500)[0]
        assert thp.spectral_profile(mu, H) == pytest.approx(ref, rel=1e-6)


class TestCovariance:
    def test_zero_time(self):
        assert thp.thp_covariance(0.8, 1.0, 1.0, 0.0) == 0.0
        assert thp.thp_covariance(0.8, 1.0, 0.0, 2.0) == 0.0

    def test_symmetry(self):
        a = thp.thp_covariance(0.8, 1.0, 2.0, 0.7)
        b = thp.thp_covariance(0.8, 1.0, 0.7, 2.0)
        assert a == pytest.approx(b, rel=1e-14)

    def test_sigma_scaling(self):
        base = thp.thp_covariance(0.9, 0.6, 1.0, 0.5)
        assert thp.thp_covariance(0.9, 0.6, 1.0, 0.5, sigma=3.0) == pytest.approx(
            9.0 * base, rel=1e-14)

    @pytest.mark.parametrize("H", [0.6, 0.8, 1.2, 1.7])
    @pytest.mark.parametrize("lam", [0.2, 1.0, 3.0])
    @pytest.mark.parametrize("ts", [(1.0, 1.0), (2.0, 1.0), (0.5, 0.25)])
    def test_three_way_agreement(self, H, lam, ts):
        t, s = ts
        tol = 1e-6 if (H <= 1.5 and lam >= 0.2) else 1e-4
        rs = thp.thp_covariance(H, lam, t, s, "spectral")
        rk = thp.thp_covariance(H, lam, t, s, "kernel_l2")
        rb = thp.thp_covariance(H, lam, t, s, "bessel")
        assert rk == pytest.approx(rs, rel=tol)
        assert rb == pytest.approx(rs, rel=tol)

    def test_kernel_isometry_against_brute_force(self):
        # direct quadrature of the kernel product, fully independent path
        H, lam, t, s = 0.8, 1.0, 1.0, 1.0
        f = lambda y: thp.kernel_g(H, lam, t, y) * thp.kernel_g(H, lam, s, y)
        ref = scipy.integrate.quad(f, -60.0, t, limit=1000)[0]
        assert thp.thp_covariance(H, lam, t, s, "kernel_l2") == pytest.approx(
            ref, rel=1e-6)

    def test_bessel_constant_is_one(self):
        assert thp.bessel_constant() == pytest.approx(1.0, abs=1e-10)

    def test_domain(self):
        with pytest.raises(ValueError):
            thp.thp_covariance(0.5, 1.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            thp.thp_covariance(0.8, 0.0, 1.0, 1.0)


class TestScaling:
    @pytest.mark.parametrize("H,lam", [(0.7, 0.5), (1.7, 1.0)])
    @pytest.mark.parametrize("c", [0.5, 2.0, 10.0])
    def test_scaling_law(self, H, lam, c):
        rep = thp.scaling_check(H, lam, c, [(1.0, 1.0), (2.0, 1.0), (0.5, 0.25)])
        assert rep.passed
        assert max(ch.error for ch in rep.checks) <= 1e-8

    def test_identity_scale(self):
        rep = thp.scaling_check(0.7, 0.5, 1.0, [(1.0, 1.0)])
        assert rep.checks[0].error == 0.0


class TestNoiseSpectralDensity:
    def test_zero_frequency_limit(self):
        H, lam = 0.8, 0.7
        expect = thp.thn_spectral_density(H, lam, 1e-9, "continuous")
        a = H - 0.5
        from tempfrac import specfun
        lead = specfun.gamma_fn(a) ** 2 / (2 * math.pi) * lam ** (1.0 - 2.0 * H)
        assert expect == pytest.approx(lead, rel=1e-8)

    def test_kolmogorov_slope(self):
        slope = thp.fit_loglog_slope(4.0 / 3.0, 1e-3, 1e-2, 0.5)
        assert abs(slope - (-5.0 / 3.0)) < 0.02

    def test_continuous_density_integrates_to_unit_variance(self):
        H, lam = 0.8, 1.0
        f = lambda w: thp.thn_spectral_density(H, lam, w, "continuous")
        val = scipy.integrate.quad(f, 0, 200.0, limit=500)[0] \
            + scipy.integrate.quad(f, 200.0, np.inf, limit=500)[0]
        assert 2.0 * val == pytest.approx(thp.thp_covariance(H, lam, 1.0, 1.0),
                                          rel=1e-6)

    def test_discrete_flavor_converges_with_bounded_tail(self):
        H, lam, w = 0.8, 1.0, 1.1
        h64, tail64 = thp.thn_spectral_density(H, lam, w, "discrete", 64,
                                               return_tail_bound=True)
        h256 = thp.thn_spectral_density(H, lam, w, "discrete", 256)
        assert abs(h256 - h64) <= tail64
        assert tail64 < 1e-3 * h64

    def test_discrete_integrates_to_noise_variance(self):
        # integral over one period recovers the variance of a unit increment
        H, lam = 0.8, 1.0
        f = lambda w: thp.thn_spectral_density(H, lam, w, "discrete", 300)
        val = scipy.integrate.quad(f, -math.pi, math.pi, limit=200)[0]
        assert val == pytest.approx(thp.thp_covariance(H, lam, 1.0, 1.0),
                                    rel=1e-5)


class TestSynthesis:
    def test_starts_at_zero_and_deterministic(self):
        p = thp.ThpParams(0.8, 1.0)
        a = thp.synthesize_path(p, np.linspace(0, 1, 33), seed=9)
        b = thp.synthesize_path(p, np.linspace(0, 1, 33), seed=9)
        assert a[0] == 0.0
        assert np.array_equal(a, b)
        c = thp.synthesize_path(p, np.linspace(0, 1, 33), seed=10)
        assert not np.array_equal(a, c)

    def test_variance_at_one_over_seeds(self):
        p = thp.ThpParams(0.8, 1.0)
        n = 4000
        vals = np.array([thp.synthesize_path(p, np.array([0.0, 1.0]), seed=s)[1]
                         for s in range(n)])
        r11 = thp.thp_covariance(0.8, 1.0, 1.0, 1.0)
        se = r11 * math.sqrt(2.0 / n)
        assert abs(vals.var() - r11) < 4.0 * se

    def test_covariance_matrix_validates(self):
        p = thp.ThpParams(0.7, 0.5)
        cov = thp.covariance_matrix(p, np.linspace(0.1, 2.0, 32))
        cov.validate()
        assert cov.jitter_used <= 1e-10 * np.max(np.diag(cov.entries))

    def test_grid_requirements(self):
        p = thp.ThpParams(0.8, 1.0)
        with pytest.raises(ValueError):
            thp.synthesize_path(p, np.array([0.5, 1.0]), seed=1)
        with pytest.raises(ValueError):
            thp.covariance_matrix(p, np.array([1.0, 0.5]))

    def test_uniform_wrapper(self):
        p = thp.ThpParams(1.2, 0.4, sigma=2.0)
        g = thp.synthesize_uniform_path(p, 16, 2.0, seed=4)
        assert g.n == 17
        assert g.step == pytest.approx(0.125)


class TestMaternDecomposition:
    def test_rejects_small_H(self):
        with pytest.raises(ValueError):
            thp.matern_decomposition_check(0.9, 0.8)
        with pytest.raises(ValueError):
            thp.matern_covariance(1.0, 0.8, 0.5)

    def test_ou_case(self):
        # H = 3/2: the derivative process is Ornstein-Uhlenbeck
        lam = 0.8
        u = np.linspace(0.0, 3.0, 7)
        rho = thp.matern_covariance(1.5, lam, u)
        assert np.allclose(rho, np.exp(-lam * u) / (2 * lam), rtol=1e-10)

    @pytest.mark.parametrize("H", [1.5, 1.7])
    def test_deterministic_reconstruction(self, H):
        rep = thp.matern_decomposition_check(H, 0.8, step=1.0 / 512)
        assert rep.passed
        for c in rep.checks:
            assert c.error <= 1e-2

    def test_stochastic_probe(self):
        rep = thp.matern_decomposition_check(1.7, 0.8, step=1.0 / 256,
                                             mode="stochastic", seed=0)
        assert rep.passed


def test_variance_functional_zero():
    assert thp.variance_functional(0.0, 0.8, 1.0) == 0.0


def test_params_domain():
    with pytest.raises(ValueError):
        thp.ThpParams(0.5, 1.0)
    with pytest.raises(ValueError):
        thp.ThpParams(0.8, 0.0)
    with pytest.raises(ValueError):
        thp.ThpParams(0.8, 1.0, sigma=0.0)
