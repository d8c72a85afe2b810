import numpy as np
import pytest

from helpers import GRID, grid_spec
from prelog_lab import (BlockObservation, FadingCoeffs, build_b, build_p,
                        build_qe, build_qo, frontend_matrices, oracle_integrate,
                        sample_fading, simulate_oversampled,
                        simulate_symbol_rate, symbol_covariance,
                        symbol_covariance_rank, symbol_gains)
from prelog_lab.frontends import symbol_gain_matrix
from prelog_lab.util import standard_complex_normal


def unit_coeff_at_center(spec):
    """Coefficients with s = e_0 (only the zeroth harmonic, raw value 1)."""
    s = np.zeros(spec.q, dtype=complex)
    s[spec.m] = 1.0
    var = spec.coeff_variances()
    return FadingCoeffs(s_hat=s / np.sqrt(var), s=s)


class TestMatrices:
    def test_p_center_entry(self):
        spec = grid_spec(10, 3)
        p = build_p(spec)
        expect = np.sqrt(spec.psd.coeff_variance(0, spec.t) / 2.0)
        assert p[spec.m] == pytest.approx(expect)
        assert p[spec.m].imag == 0.0

    def test_p_mirror_symmetry(self):
        spec = grid_spec(10, 5)
        p = build_p(spec)
        assert np.allclose(np.abs(p[::-1]), np.abs(p))
        assert np.allclose(p[::-1], np.conj(p))

    def test_p_ratio_value(self):
        spec = grid_spec(10, 3)
        p = build_p(spec)
        ratio = abs(p[spec.m + 1]) / abs(p[spec.m])
        assert ratio == pytest.approx(np.sinc(1 / 20), abs=1e-12)
        assert ratio == pytest.approx(0.99589, abs=1e-5)

    def test_zero_harmonic_columns_all_ones(self):
        spec = grid_spec(8, 5)
        assert np.allclose(build_qo(spec)[:, spec.m], 1.0)
        assert np.allclose(build_qe(spec)[:, spec.m], 1.0)

    def test_qe_row_entries(self):
        spec = grid_spec(8, 3)
        qe = build_qe(spec)
        for k in range(1, spec.n + 1):
            expect = np.array([np.exp(-2j * np.pi * k / spec.n), 1.0,
                               np.exp(2j * np.pi * k / spec.n)])
            assert np.allclose(qe[k - 1], expect)

    def test_qo_rows_are_geometric(self):
        spec = grid_spec(8, 5)
        qo = build_qo(spec)
        for k in range(1, spec.n + 1):
            ratio = np.exp(1j * np.pi * (2 * k - 1) / spec.n)
            assert np.allclose(qo[k - 1, 1:] / qo[k - 1, :-1], ratio)

    def test_unit_modulus(self):
        spec = grid_spec(10, 5)
        assert np.allclose(np.abs(build_qo(spec)), 1.0)
        assert np.allclose(np.abs(build_qe(spec)), 1.0)

    def test_b_all_ones_single_coeff(self):
        spec = grid_spec(4, 1)
        p, qo, qe = build_p(spec), build_qo(spec), build_qe(spec)
        b = build_b(spec, p, qo, qe, np.ones(spec.n, dtype=complex))
        assert np.allclose(b, p[0] * np.ones((2 * spec.n, 1)))

    def test_b_scales_linearly(self):
        spec = grid_spec(8, 3)
        rng = np.random.default_rng(0)
        x = standard_complex_normal(rng, spec.n)
        p, qo, qe = build_p(spec), build_qo(spec), build_qe(spec)
        c = 0.3 - 1.4j
        assert np.allclose(build_b(spec, p, qo, qe, c * x),
                           c * build_b(spec, p, qo, qe, x))

    def test_b_dimension_mismatch(self):
        spec = grid_spec(8, 3)
        p, qo, qe = build_p(spec), build_qo(spec), build_qe(spec)
        with pytest.raises(ValueError):
            build_b(spec, p, qo, qe, np.ones(spec.n + 1, dtype=complex))

    def test_b_rows_give_noiseless_samples(self):
        spec = grid_spec(8, 5)
        rng = np.random.default_rng(1)
        coeffs = sample_fading(spec, rng)
        x = standard_complex_normal(rng, spec.n)
        fm = frontend_matrices(spec, x)
        stacked = simulate_oversampled(spec, coeffs, x, rho=1.0).stacked
        assert np.abs(fm.b @ coeffs.s_hat - stacked).max() < 1e-12

    def test_stacked_phase_matrix_full_rank(self):
        for n, q in GRID:
            spec = grid_spec(n, q)
            stacked = np.vstack([build_qo(spec), build_qe(spec)])
            sv = np.linalg.svd(stacked, compute_uv=False)
            assert sv[-1] / sv[0] > 1e-12
            assert len(sv) == q


class TestSymbolRate:
    def test_single_coeff_gain_is_constant(self):
        spec = grid_spec(6, 1)
        coeffs = sample_fading(spec, np.random.default_rng(2))
        rng = np.random.default_rng(3)
        x = standard_complex_normal(rng, spec.n)
        obs = simulate_symbol_rate(spec, coeffs, x, rho=4.0)
        assert np.abs(obs.y_sym - 2.0 * coeffs.s[0] * x).max() < 1e-12

    def test_gain_matches_averaging_oracle(self):
        spec = grid_spec(8, 5)
        coeffs = sample_fading(spec, np.random.default_rng(4))
        h = symbol_gains(spec, coeffs)
        x_unit = np.full(spec.n, np.sqrt(spec.t_s), dtype=complex)
        for k in range(spec.n):
            ref = oracle_integrate(spec, coeffs, x_unit,
                                   (k * spec.t_s, (k + 1) * spec.t_s),
                                   gain=1.0 / spec.t_s)
            assert abs(ref - h[k]) < 1e-8

    def test_gain_power_matches_analytic(self):
        spec = grid_spec(8, 3)
        var = spec.coeff_variances()
        expect = float((var * np.sinc(spec.harmonics() / spec.n) ** 2).sum())
        rng = np.random.default_rng(5)
        s_hat = standard_complex_normal(rng, (10 ** 5, spec.q))
        h = (s_hat * np.sqrt(var)) @ symbol_gain_matrix(spec).T
        got = float((np.abs(h) ** 2).mean())
        assert got == pytest.approx(expect, rel=0.02)

    def test_noise_has_unit_variance(self):
        spec = grid_spec(4, 1)
        coeffs = unit_coeff_at_center(spec)
        rng = np.random.default_rng(6)
        x = np.zeros(spec.n, dtype=complex)
        draws = np.array([simulate_symbol_rate(spec, coeffs, x, 1.0, rng).y_sym
                          for _ in range(4000)])
        assert (np.abs(draws) ** 2).mean() == pytest.approx(1.0, rel=0.05)


class TestOversampled:
    def test_stacked_equals_matrix_form(self):
        for n, q in GRID:
            spec = grid_spec(n, q)
            rng = np.random.default_rng(n * 100 + q)
            coeffs = sample_fading(spec, rng)
            x = standard_complex_normal(rng, spec.n)
            obs = simulate_oversampled(spec, coeffs, x, rho=2.5)
            fm = frontend_matrices(spec, x)
            assert np.abs(obs.stacked - np.sqrt(2.5) * fm.b @ coeffs.s_hat).max() < 1e-12

    def test_single_coeff_half_samples_equal(self):
        spec = grid_spec(6, 1)
        rng = np.random.default_rng(7)
        coeffs = sample_fading(spec, rng)
        x = standard_complex_normal(rng, spec.n)
        obs = simulate_oversampled(spec, coeffs, x, rho=1.0)
        assert np.abs(obs.y_odd - obs.y_even).max() < 1e-12

    def test_half_window_oracle(self):
        spec = grid_spec(4, 3)
        rng = np.random.default_rng(8)
        coeffs = sample_fading(spec, rng)
        x = standard_complex_normal(rng, spec.n)
        obs = simulate_oversampled(spec, coeffs, x, rho=1.0)
        inter = np.empty(2 * spec.n, dtype=complex)
        inter[0::2] = obs.y_odd
        inter[1::2] = obs.y_even
        for n in range(1, 2 * spec.n + 1):
            ref = oracle_integrate(spec, coeffs, x,
                                   ((n - 1) * spec.t_s / 2, n * spec.t_s / 2),
                                   gain=np.sqrt(2.0 / spec.t_s))
            assert abs(ref - inter[n - 1]) < 1e-8

    def test_energy_bookkeeping(self):
        spec = grid_spec(8, 3)
        rng = np.random.default_rng(9)
        rho = 3.0
        x = np.exp(1j * rng.uniform(0, 2 * np.pi, spec.n))  # unit power
        p = build_p(spec)
        expect = rho * 2 * spec.n * float((np.abs(p) ** 2).sum())
        total = 0.0
        n_draws = 20000
        for _ in range(n_draws):
            coeffs = sample_fading(spec, rng)
            total += float((np.abs(simulate_oversampled(spec, coeffs, x, rho)
                                   .stacked) ** 2).sum())
        assert total / n_draws == pytest.approx(expect, rel=0.02)


class TestOracle:
    def test_constant_integrand(self):
        spec = grid_spec(6, 3)
        coeffs = unit_coeff_at_center(spec)  # h(t) = 1 everywhere
        c = 1.3 - 0.2j
        x = np.full(spec.n, c * np.sqrt(spec.t_s))  # waveform value c
        window = (0.2 * spec.t_s, 1.7 * spec.t_s)
        got = oracle_integrate(spec, coeffs, x, window, gain=2.0)
        assert abs(got - 2.0 * c * (window[1] - window[0])) < 1e-12

    def test_window_outside_block_rejected(self):
        spec = grid_spec(6, 3)
        coeffs = unit_coeff_at_center(spec)
        with pytest.raises(ValueError):
            oracle_integrate(spec, coeffs, np.ones(spec.n), (0.0, 2 * spec.t),
                             gain=1.0)


class TestRankLaw:
    def test_covariance_rank_is_q_on_grid(self):
        for n, q in GRID:
            report = symbol_covariance_rank(grid_spec(n, q))
            assert report.rank_is_q, (n, q, report)

    def test_covariance_eigenvalues_known(self):
        # columns of the gain matrix are orthogonal, so the nonzero
        # eigenvalues are n * var_m * sinc(m/n)^2
        spec = grid_spec(8, 3)
        expect = np.sort(spec.n * spec.coeff_variances()
                         * np.sinc(spec.harmonics() / spec.n) ** 2)[::-1]
        sv = np.linalg.svd(symbol_covariance(spec), compute_uv=False)
        assert np.allclose(sv[:spec.q], expect, rtol=1e-10)


class TestObservationSerialization:
    def test_json_round_trip(self):
        spec = grid_spec(4, 3)
        rng = np.random.default_rng(10)
        coeffs = sample_fading(spec, rng)
        x = standard_complex_normal(rng, spec.n)
        for obs in (simulate_symbol_rate(spec, coeffs, x, 2.0, rng),
                    simulate_oversampled(spec, coeffs, x, 2.0, rng)):
            restored = BlockObservation.from_json(obs.to_json())
            assert restored.kind == obs.kind
            assert np.allclose(restored.x, obs.x)
            if obs.y_sym is not None:
                assert np.allclose(restored.y_sym, obs.y_sym)
            else:
                assert np.allclose(restored.stacked, obs.stacked)

    def test_json_uses_re_im_pairs(self):
        spec = grid_spec(4, 1)
        rng = np.random.default_rng(11)
        obs = simulate_oversampled(spec, sample_fading(spec, rng),
                                   standard_complex_normal(rng, spec.n), 1.0)
        blob = obs.to_json()
        assert isinstance(blob["y_odd"][0], list) and len(blob["y_odd"][0]) == 2
