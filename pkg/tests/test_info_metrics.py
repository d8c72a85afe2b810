import logging
import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import k1

from helpers import grid_spec
from prelog_lab import (Frontend, _kernels, build_p, cond_entropy_mc,
                        entropy_knn, jensen_const, mi_direct_mixture,
                        mi_lower_bound_chain, prelog_fit)
from prelog_lab.info_metrics import (MiEstimator, MISweepPoint, _structure,
                                     coherent_control_mi, coherent_mi_exact,
                                     restricted_output_samples)
from prelog_lab.identifiability import build_jacobian
from prelog_lab.util import db_to_linear, standard_complex_normal

LOG_PI_E = math.log(math.pi * math.e)


class TestCondEntropy:
    def test_zero_snr_limit(self):
        spec = grid_spec(8, 3)
        got = cond_entropy_mc(spec, 1e-12, 10 ** 4, np.random.default_rng(0))
        assert got == pytest.approx(2 * spec.n * LOG_PI_E, abs=1e-6)

    def test_slope_equals_coefficient_count(self):
        spec = grid_spec(8, 3)
        h = [cond_entropy_mc(spec, float(db_to_linear(db)), 5 * 10 ** 4,
                             np.random.default_rng(42)) for db in (50.0, 60.0)]
        slope = (h[1] - h[0]) / (math.log(1e6) - math.log(1e5))
        assert slope == pytest.approx(spec.q, abs=0.05)

    def test_upper_bound_ordering(self):
        # log det(rho G + I) <= Q log rho + log det(G + I) for rho > 1
        spec = grid_spec(4, 3)
        struct = _structure(spec, Frontend.OVERSAMPLED)
        rng = np.random.default_rng(1)
        u = np.abs(standard_complex_normal(rng, (500, spec.n))) ** 2
        rho = 50.0
        lhs = _kernels.logdet_i_rho_gram(u, struct.cstack, rho)
        rhs = spec.q * math.log(rho) + _kernels.logdet_i_rho_gram(u, struct.cstack, 1.0)
        assert np.all(lhs <= rhs + 1e-9)


class TestJensenConst:
    def test_single_coefficient_closed_form(self):
        spec = grid_spec(4, 1)
        got = jensen_const(spec, 10 ** 5, np.random.default_rng(2))
        p0 = abs(build_p(spec)[0]) ** 2
        expect = math.log(1.0 + 2 * spec.n * p0)
        assert got == pytest.approx(expect, rel=0.02)

    def test_jensen_direction(self):
        spec = grid_spec(8, 3)
        struct = _structure(spec, Frontend.OVERSAMPLED)
        rng = np.random.default_rng(3)
        for _ in range(5):
            u = np.abs(standard_complex_normal(rng, (2000, spec.n))) ** 2
            logdets = _kernels.logdet_i_rho_gram(u, struct.cstack, 1.0)
            assert logdets.mean() <= math.log(np.exp(logdets).mean()) + 1e-12


class TestEntropyKnn:
    def test_gaussian_oracle(self):
        rng = np.random.default_rng(4)
        est = entropy_knn(rng.standard_normal((10 ** 5, 2)))
        assert est == pytest.approx(math.log(2 * math.pi * math.e), abs=0.05)

    def test_uniform_square(self):
        rng = np.random.default_rng(5)
        assert entropy_knn(rng.uniform(size=(10 ** 5, 2))) == pytest.approx(0.0, abs=0.05)

    def test_scaling_law(self):
        rng = np.random.default_rng(6)
        x = rng.standard_normal((10 ** 5, 3))
        assert entropy_knn(2.5 * x) - entropy_knn(x) == pytest.approx(
            3 * math.log(2.5), abs=0.05)

    def test_duplicates_jittered_with_notice(self, caplog):
        rng = np.random.default_rng(7)
        x = rng.standard_normal((600, 2))
        x = np.vstack([x, x])  # 1200 samples, all duplicated
        with caplog.at_level(logging.WARNING, logger="prelog_lab.info_metrics"):
            est = entropy_knn(x)
        assert math.isfinite(est)
        assert any("jitter" in rec.message for rec in caplog.records)

    def test_too_few_samples_rejected(self):
        with pytest.raises(ValueError, match="1000"):
            entropy_knn(np.zeros((100, 2)))


class TestBoundChain:
    def test_rho_dependence_is_exact(self):
        spec = grid_spec(4, 3)
        a = mi_lower_bound_chain(spec, float(db_to_linear(20.0)), 4000,
                                 np.random.default_rng(8))
        b = mi_lower_bound_chain(spec, float(db_to_linear(30.0)), 4000,
                                 np.random.default_rng(8))
        delta = b.mi_nats_per_block - a.mi_nats_per_block
        assert delta == pytest.approx((spec.n - 1) * math.log(10.0), abs=1e-12)

    def test_restricted_entropy_stable_across_batches(self):
        spec = grid_spec(4, 3)
        ests = [entropy_knn(restricted_output_samples(spec, 2 * 10 ** 4,
                                                      np.random.default_rng(seed)))
                for seed in (0, 1, 2)]
        assert max(ests) - min(ests) < 0.15
        assert all(math.isfinite(e) for e in ests)

    def test_small_case_matches_density_quadrature(self):
        # n=2, q=1: the retained output is p0 * s0 * (x1, x2); its radial
        # density has the closed form f(r) = 2 K1(2 sqrt(c)) / (pi^2 p0^4
        # sqrt(c)) with c = r^2/p0^2, which gives an independent entropy
        # oracle by 1-D quadrature
        spec = grid_spec(2, 1)
        p0 = float(abs(build_p(spec)[0]))

        def f(r):
            c = (r / p0) ** 2
            return 2.0 * k1(2.0 * np.sqrt(c)) / (np.pi ** 2 * p0 ** 4 * np.sqrt(c))

        surface = lambda r: 2 * np.pi ** 2 * r ** 3  # unit 3-sphere area scaled

        def neg_f_log_f(r):
            val = f(r)
            return 0.0 if val <= 0.0 else -val * np.log(val) * surface(r)

        mass = quad(lambda r: f(r) * surface(r), 0, np.inf, limit=400)[0]
        assert mass == pytest.approx(1.0, abs=1e-8)
        h_oracle = quad(neg_f_log_f, 0, np.inf, limit=400)[0]

        samples = restricted_output_samples(spec, 10 ** 5, np.random.default_rng(9))
        assert samples.shape[1] == 4
        h_est = entropy_knn(samples)
        assert h_est == pytest.approx(h_oracle, abs=0.3)

    def test_rejects_small_rho(self):
        with pytest.raises(ValueError):
            mi_lower_bound_chain(grid_spec(4, 3), 0.5, 2000,
                                 np.random.default_rng(0))


class TestDirectMixture:
    def test_zero_snr_gives_zero(self):
        spec = grid_spec(4, 3)
        pt = mi_direct_mixture(spec, 1e-3, 200, 10 ** 4, Frontend.OVERSAMPLED,
                               np.random.default_rng(10))
        assert abs(pt.mi_nats_per_block) < 3 * pt.stderr + 1e-3

    def test_coherent_control_matches_closed_form(self):
        spec = grid_spec(4, 3)
        rho = float(db_to_linear(10.0))
        pt = coherent_control_mi(spec, rho, 600, 2 * 10 ** 5,
                                 np.random.default_rng(11))
        exact = coherent_mi_exact(spec, rho)
        assert abs(pt.mi_nats_per_block - exact) < 3 * pt.stderr + 0.1

    def test_symbol_rate_slope_bracket(self):
        spec = grid_spec(4, 3)
        pts = [mi_direct_mixture(spec, float(db_to_linear(db)), 300, 10 ** 4,
                                 Frontend.SYMBOL_RATE,
                                 np.random.default_rng(500 + int(db)))
               for db in (20.0, 25.0, 30.0, 35.0)]
        fit = prelog_fit(pts, spec.n)
        assert 0.15 <= fit.slope_per_channel_use <= 0.40

    def test_bound_never_exceeds_direct_estimate(self):
        spec = grid_spec(4, 3)
        rho = float(db_to_linear(20.0))
        bound = mi_lower_bound_chain(spec, rho, 2 * 10 ** 4,
                                     np.random.default_rng(12))
        direct = mi_direct_mixture(spec, rho, 400, 2 * 10 ** 4,
                                   Frontend.OVERSAMPLED, np.random.default_rng(13))
        combined = math.hypot(bound.stderr, direct.stderr)
        assert bound.mi_nats_per_block <= direct.mi_nats_per_block + 3 * combined

    def test_low_ess_flagged_at_high_snr(self):
        spec = grid_spec(4, 3)
        pt = mi_direct_mixture(spec, float(db_to_linear(35.0)), 50, 10 ** 4,
                               Frontend.OVERSAMPLED, np.random.default_rng(14))
        assert pt.diagnostics["low_ess_fraction"] > 0.5

    def test_domain_restrictions(self):
        with pytest.raises(ValueError, match="N <= 8"):
            mi_direct_mixture(grid_spec(10, 3), 10.0, 10, 10 ** 4,
                              Frontend.OVERSAMPLED, np.random.default_rng(0))
        with pytest.raises(ValueError, match="40"):
            mi_direct_mixture(grid_spec(4, 3), float(db_to_linear(45.0)), 10,
                              10 ** 4, Frontend.OVERSAMPLED, np.random.default_rng(0))
        with pytest.raises(ValueError, match="n_inner"):
            mi_direct_mixture(grid_spec(4, 3), 10.0, 10, 100,
                              Frontend.OVERSAMPLED, np.random.default_rng(0))


class TestLogDetIntegrability:
    def test_batch_means_finite_and_stable(self):
        # empirical counterpart of the integrability of log |det J| against
        # the Gaussian density
        spec = grid_spec(4, 3)
        rng = np.random.default_rng(15)
        batch_means = []
        for _ in range(10):
            vals = []
            for _ in range(400):
                x1 = complex(standard_complex_normal(rng, ()))
                s_hat = standard_complex_normal(rng, spec.q)
                x_rest = standard_complex_normal(rng, spec.n - 1)
                jac = build_jacobian(spec, x1, s_hat, x_rest)
                vals.append(np.linalg.slogdet(jac)[1])
            batch_means.append(np.mean(vals))
        batch_means = np.array(batch_means)
        assert np.all(np.isfinite(batch_means))
        assert batch_means.std(ddof=1) < 0.2


class TestPrelogFit:
    def _point(self, rho_db, mi):
        return MISweepPoint(rho_db=rho_db, mi_nats_per_block=mi,
                            estimator=MiEstimator.DIRECT_MIXTURE, stderr=0.0,
                            n_samples=1)

    def test_exact_linear_data(self):
        n = 4
        pts = [self._point(db, 3.0 * db * math.log(10) / 10 + 7.0)
               for db in (10.0, 20.0, 30.0)]
        fit = prelog_fit(pts, n)
        assert fit.slope_per_channel_use == pytest.approx(3.0 / n, abs=1e-12)
        assert fit.intercept == pytest.approx(7.0, abs=1e-10)
        assert fit.r_squared == pytest.approx(1.0)

    def test_noisy_slope_within_stderr(self):
        rng = np.random.default_rng(16)
        n = 8
        truth = 2.0
        pts = [self._point(db, truth * db * math.log(10) / 10 + 1.0
                           + 0.1 * rng.standard_normal())
               for db in np.linspace(10, 40, 12)]
        fit = prelog_fit(pts, n)
        assert abs(fit.slope_per_channel_use - truth / n) \
            < 3 * fit.slope_stderr_per_channel_use

    def test_composes_with_cond_entropy(self):
        spec = grid_spec(8, 3)
        pts = []
        for db in (45.0, 50.0, 55.0, 60.0):
            h = cond_entropy_mc(spec, float(db_to_linear(db)), 2 * 10 ** 4,
                                np.random.default_rng(99))
            pts.append(self._point(db, h))
        fit = prelog_fit(pts, spec.n)
        assert fit.slope_per_channel_use == pytest.approx(spec.q / spec.n,
                                                          abs=0.05 / spec.n)

    def test_too_few_points_rejected(self):
        with pytest.raises(ValueError):
            prelog_fit([self._point(10, 1.0), self._point(20, 2.0)], 4)

    def test_duplicate_rho_rejected(self):
        with pytest.raises(ValueError):
            prelog_fit([self._point(10, 1.0), self._point(10, 2.0),
                        self._point(20, 2.0)], 4)
