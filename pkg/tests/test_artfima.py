"""ARTFIMA model: spectral density, three autocovariance routes, simulation."""

import math

import numpy as np
import pytest

from tempfrac import artfima as af
from tempfrac import specfun


AR1 = af.ArtfimaModel(1.0, math.log(2.0), 1.0)


def ar1_acvf(k: np.ndarray) -> np.ndarray:
    # at alpha = 1 the model is AR(1) with coefficient exp(-lam) = 1/2
    return (4.0 / 3.0) * 0.5 ** k


class TestModel:
    def test_parameter_domain(self):
        for bad in [dict(alpha=0.0, lam=1.0), dict(alpha=1.0, lam=0.0),
                    dict(alpha=1.0, lam=1.0, sigma=-1.0)]:
            with pytest.raises(ValueError):
                af.ArtfimaModel(**bad)

    def test_nonstationary_ar_rejected(self):
        with pytest.raises(ValueError):
            af.ArtfimaModel(0.5, 0.5, ar=(1.2,))
        with pytest.raises(ValueError):
            af.ArtfimaModel(0.5, 0.5, ar=(0.7, 0.3))  # unit root
        af.ArtfimaModel(0.5, 0.5, ar=(0.7, 0.2))  # fine


class TestSpectralDensity:
    def test_value_at_zero(self):
        # 1 - exp(-lam) = 1/2, so h(0) = sigma^2/(2 pi) * 4
        assert af.spectral_density(AR1, 0.0) == pytest.approx(4.0 / (2 * math.pi), rel=1e-14)

    def test_even_and_positive(self):
        m = af.ArtfimaModel(0.7, 0.3, 1.4)
        w = np.linspace(-math.pi, math.pi, 201)
        h = af.spectral_density(m, w)
        assert np.all(h > 0.0)
        assert np.allclose(h, h[::-1], rtol=1e-14)

    def test_low_frequency_power_law(self):
        # h is close to (sigma^2/2pi)(lam^2 + w^2)^-alpha at small lam, w and
        # the match tightens as the scales shrink
        def dev(alpha, lam, w):
            approx = (1.0 / (2 * math.pi)) * (lam ** 2 + w ** 2) ** (-alpha)
            return abs(af.spectral_density(af.ArtfimaModel(alpha, lam, 1.0), w)
                       / approx - 1.0)

        d1 = dev(0.7, 0.1, 0.05)
        d2 = dev(0.7, 0.01, 0.005)
        assert d1 < 0.08
        assert d2 < d1
        assert d2 < 0.01

    def test_arma_transfer_at_zero(self):
        m = af.ArtfimaModel(0.7, 0.3, 1.0, ar=(0.5,), ma=(0.2,))
        base = af.spectral_density(af.ArtfimaModel(0.7, 0.3, 1.0), 0.0)
        assert af.spectral_density(m, 0.0) == pytest.approx(
            base * (1.2 / 0.5) ** 2, rel=1e-12)


class TestAcvfQuadrature:
    def test_ar1_anchor(self):
        got = af.acvf_quadrature(AR1, 10)
        assert np.max(np.abs(got.values / ar1_acvf(np.arange(11)) - 1.0)) < 1e-12
        got.validate()

    def test_evenness_by_construction(self):
        # gamma_k is defined through cos(k w); check the k = 5 value equals a
        # direct evaluation with the sign of k flipped in the cosine
        m = af.ArtfimaModel(0.6, 0.2, 1.0)
        g = af.acvf_quadrature(m, 5).values[5]
        h = af.acvf_quadrature(m, 5)
        assert g == h.values[5]

    def test_matches_closed_form_moderate_lags(self):
        m = af.ArtfimaModel(0.6, 0.2, 1.0)
        gq = af.acvf_quadrature(m, 12)
        gh = af.acvf_hyp2f1(m, 12)
        assert np.max(np.abs(gq.values / gh.values - 1.0)) < 1e-9

    def test_small_lam_raises(self):
        with pytest.raises(specfun.PrecisionLossError):
            af.acvf_quadrature(af.ArtfimaModel(0.5, 1e-7, 1.0), 3)


class TestAcvfHyp2F1:
    def test_calibration_constant_is_one(self):
        assert af.hyp2f1_constant() == pytest.approx(1.0, abs=1e-10)

    def test_ar1_anchor(self):
        got = af.acvf_hyp2f1(AR1, 10)
        assert np.max(np.abs(got.values / ar1_acvf(np.arange(11)) - 1.0)) < 1e-12

    def test_sigma_scaling(self):
        a = af.acvf_hyp2f1(af.ArtfimaModel(0.7, 0.4, 1.0), 4).values
        b = af.acvf_hyp2f1(af.ArtfimaModel(0.7, 0.4, 2.0), 4).values
        assert np.allclose(b, 4.0 * a, rtol=1e-13)

    def test_k0_matches_quadrature(self):
        m = af.ArtfimaModel(1.3, 0.35, 0.8)
        gq = af.acvf_quadrature(m, 0).values[0]
        gh = af.acvf_hyp2f1(m, 0).values[0]
        assert gh == pytest.approx(gq, rel=1e-10)

    def test_hypergeometric_example_back_solved(self):
        # gamma_3 at (alpha=0.6, lam=0.2) isolates 2F1(0.6; 3.6; 4; e^-0.4)
        m = af.ArtfimaModel(0.6, 0.2, 1.0)
        gq = af.acvf_quadrature(m, 3).values[3]
        pref = math.exp(-0.2 * 3) * specfun.gamma_fn(0.6 + 3) \
            / (specfun.gamma_fn(0.6) * math.factorial(3))
        assert specfun.hyp2f1(0.6, 3.6, 4.0, math.exp(-0.4)) == pytest.approx(
            gq / pref, rel=1e-8)

    def test_precision_cliff_fallback(self):
        got = af.acvf_hyp2f1(af.ArtfimaModel(0.5, 5e-4, 1.0), 2)
        assert got.method == "quadrature"
        assert "cliff" in got.note

    def test_log_route_matches_linear_route(self):
        m = af.ArtfimaModel(0.9, 0.25, 1.1)
        gh = af.acvf_hyp2f1(m, 6).values
        logs = np.array([af.log_acvf_hyp2f1(m, k) for k in range(7)])
        assert np.allclose(np.exp(logs), gh, rtol=1e-12)


class TestLogContourQuadrature:
    def test_overlap_with_linear_quadrature(self):
        m = af.ArtfimaModel(0.6, 0.3, 1.0)
        gq = af.acvf_quadrature(m, 40)
        for k in [1, 5, 20, 40]:
            assert math.exp(af.acvf_log_quadrature(m, k)) == pytest.approx(
                gq.values[k], rel=1e-9)

    def test_extreme_tempering_against_closed_form(self):
        # lam k = 500: the value is far below double range, the logs agree
        m = af.ArtfimaModel(2.0, 1.0, 1.3)
        lq = af.acvf_log_quadrature(m, 500)
        lh = af.log_acvf_hyp2f1(m, 500)
        assert lq == pytest.approx(lh, abs=1e-8)
        assert lq < -450.0


class TestAcvfAsymptotic:
    def test_order_one_substitution(self):
        m = af.ArtfimaModel(1.0, 0.4, 1.0)
        expect = math.exp(-0.4) * (1.0 - math.exp(-0.8)) ** -1.0 * af.hyp2f1_constant()
        assert af.acvf_asymptotic(m, 1) == pytest.approx(expect, rel=1e-12)

    def test_ratio_monotone_approach(self):
        # the exact/asymptote ratio carries a 1/k correction of size
        # alpha(1-alpha) z / ((1-z) k), about 4.2% at k=200 for lam=0.01;
        # it approaches 1 monotonically and is inside 2% by k ~ 500
        m = af.ArtfimaModel(0.7, 0.01, 1.0)
        gq = af.acvf_quadrature(m, 800)
        ratios = [gq.values[k] / af.acvf_asymptotic(m, k) for k in (200, 400, 800)]
        devs = [abs(r - 1.0) for r in ratios]
        assert devs[0] > devs[1] > devs[2]
        assert devs[2] < 0.02

    def test_summability_short_memory(self):
        # partial sums of the covariance stabilize completely by K = 10^4
        m = af.ArtfimaModel(0.8, 0.1, 1.0)
        ks = np.arange(1, 10_001)
        vals = np.array([af.acvf_asymptotic(m, int(k)) for k in [1, 10, 100, 1000, 10_000]])
        tail_envelope = af.acvf_asymptotic(m, 5000) * 10_000
        partial = af.acvf_quadrature(m, 0).values[0] \
            + 2.0 * np.sum(np.exp(-0.1 * ks) * ks ** -0.2) / specfun.gamma_fn(0.8) \
            * (1 - math.exp(-0.2)) ** -0.8
        increment = af.acvf_asymptotic(m, 10_000)
        assert increment < 1e-10 * partial
        assert vals[-1] < vals[0]
        assert tail_envelope < 1e-30


class TestSimulate:
    def test_bitwise_determinism(self):
        m = af.ArtfimaModel(0.8, 0.1, 1.0)
        a = af.simulate(m, 512, seed=7)
        b = af.simulate(m, 512, seed=7)
        assert np.array_equal(a.samples, b.samples)
        c = af.simulate(m, 512, seed=8)
        assert not np.array_equal(a.samples, c.samples)

    def test_mean_zero(self):
        m = af.ArtfimaModel(0.8, 0.1, 1.0)
        n = 1_000_000
        x = af.simulate(m, n, seed=11).samples
        long_run_var = (1.0 - math.exp(-0.1)) ** (-1.6)  # 2 pi h(0)
        se_mean = math.sqrt(long_run_var / n)
        assert abs(x.mean()) < 4.0 * se_mean

    def test_sample_acvf_matches_quadrature(self):
        m = af.ArtfimaModel(0.8, 0.1, 1.0)
        n = 1_000_000
        x = af.simulate(m, n, seed=13).samples
        gq = af.acvf_quadrature(m, 200).values
        sum_g2 = float(gq[0] ** 2 + 2.0 * np.sum(gq[1:] ** 2))
        lags = np.arange(21)
        sample = np.array([np.dot(x[: n - k], x[k:]) / (n - k) for k in lags])
        se = math.sqrt(2.0 * sum_g2 / n)
        assert np.all(np.abs(sample - gq[:21]) < 4.0 * se)

    def test_arma_stage_runs(self):
        m = af.ArtfimaModel(0.5, 0.3, 1.0, ar=(0.4,), ma=(0.25,))
        x = af.simulate(m, 4096, seed=5)
        assert x.n == 4096
        assert np.all(np.isfinite(x.samples))

    def test_custom_truncation_recorded_in_output(self):
        m = af.ArtfimaModel(0.8, 0.2, 1.0)
        x = af.simulate(m, 64, seed=1, J=2048)
        assert x.origin == 1.0 and x.step == 1.0


class TestSpectralRepresentation:
    def test_identity_on_grid(self):
        rep = af.spectral_representation_check(af.ArtfimaModel(1.3, 0.4, 1.0))
        assert rep.passed
        assert rep.checks[0].computed <= 1e-12

    def test_endpoint_values(self):
        m = af.ArtfimaModel(0.9, 0.5, 1.0)
        h0 = af.spectral_density(m, 0.0)
        hpi = af.spectral_density(m, math.pi)
        assert h0 == pytest.approx(
            abs(1 - math.exp(-0.5)) ** (-1.8) / (2 * math.pi), rel=1e-12)
        assert hpi == pytest.approx(
            abs(1 + math.exp(-0.5)) ** (-1.8) / (2 * math.pi), rel=1e-12)


def test_acvf_positive_semidefinite_validation():
    m = af.ArtfimaModel(0.7, 0.15, 1.0)
    g = af.acvf_quadrature(m, 40)
    g.validate()
    broken = af.Acvf(m, np.array([1.0, 2.0]), "quadrature", 0.0)
    with pytest.raises(AssertionError):
        broken.validate()


def test_parseval_weights_vs_gamma0():
    for lam in [0.05, 0.2, 1.0]:
        m = af.ArtfimaModel(0.8, lam, 1.0)
        c = af.ma_infinity_weights(m)
        gq = af.acvf_quadrature(m, 0).values[0]
        assert float(np.sum(c * c)) == pytest.approx(gq, rel=1e-8)
