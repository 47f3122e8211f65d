#!/usr/bin/env python3
# -*- coding: utf-8 -*-

import numpy as np
import pytest
from numpy.testing import assert_allclose

from modules.qae import (BoundTable, ProbabilityFamily, amplitude_amplification_family, bayes_and_errors,
                         build_qae_circuit, cheb_moment_matrices, chebyshev_window_error, decompose_prob_AB,
                         delta_tilde, eps_for_delta, min_gen_eig, qpe_sine_family, qpe_sine_probabilities,
                         qpe_sine_probabilities_closed_form, r_eps_of_y, r_eps_peak, r_of_y, simulate_amplitude_amplification,
                         simulate_qae_circuit, window_epsilon)
from utils.errors import PreconditionError, RangeError
from utils.numerics import simpson, spawn_rngs
from utils.polymat import ChebPoly, cheb_from_monomial


def _theta_of_x(x):
    return 2 * np.arccos(np.sqrt(x))


class TestMomentMatrices:
    """Toeplitz matrices of weighted Chebyshev integrals."""

    def test_unit_weight(self):
        b = cheb_moment_matrices(3, 'one')
        assert b.shape == (4, 4)
        assert b[0, 0] == pytest.approx(1.0)
        assert b[1, 2] == pytest.approx(0.0, abs=1e-15)
        assert b[0, 2] == pytest.approx(-1.0 / 3.0)
        assert_allclose(b, b.T)

    def test_square_weight(self):
        assert cheb_moment_matrices(2, 'square', 0.5)[0, 0] == pytest.approx(1.0 / 12.0)

    def test_indicator_covering_everything(self):
        assert_allclose(cheb_moment_matrices(3, 'indicator', 0.5, 0.5), 0.0, atol=1e-15)

    def test_rejects_bad_inputs(self):
        with pytest.raises(PreconditionError):
            cheb_moment_matrices(2, 'square', 1.5)
        with pytest.raises(PreconditionError):
            cheb_moment_matrices(2, 'indicator', 0.5, 0.0)


class TestGeneralizedEigenvalue:
    """Smallest ratio a^T A a / a^T B a."""

    def test_identity_pair(self):
        value, vector = min_gen_eig(np.eye(3), np.eye(3))
        assert value == pytest.approx(1.0)
        assert np.linalg.norm(vector) == pytest.approx(1.0)

    def test_diagonal_pair(self):
        value, _ = min_gen_eig(np.eye(2) / 12.0, np.eye(2))
        assert value == pytest.approx(1.0 / 12.0)

    def test_attaining_vector(self, rng):
        m = rng.standard_normal((4, 4))
        a = m @ m.T
        n = rng.standard_normal((4, 4))
        b = n @ n.T + np.eye(4)
        value, vector = min_gen_eig(a, b)
        assert_allclose(a @ vector, value * (b @ vector), atol=1e-8)
        samples = rng.standard_normal((2000, 4))
        ratios = np.einsum('ij,jk,ik->i', samples, a, samples) / np.einsum('ij,jk,ik->i', samples, b, samples)
        assert value <= ratios.min() + 1e-12


class TestLowerBounds:
    """r(y), r_eps(y) and the window bound delta_tilde."""

    def test_r_degree_one(self):
        assert r_of_y(1, 0.5) == pytest.approx(1.0 / 12.0)

    @pytest.mark.parametrize("y", [0.1, 0.3, 0.5])
    def test_r_approaches_heisenberg_scaling(self, y):
        ratios = [n * n * r_of_y(n, y) / (np.pi ** 2 * y * (1 - y)) for n in (32, 64, 128, 256)]
        assert all(a < b for a, b in zip(ratios, ratios[1:]))
        assert 0.85 <= ratios[-1] <= 1.02

    def test_r_smaller_at_edge(self):
        for n in (4, 16):
            assert r_of_y(n, 0.0) <= r_of_y(n, 0.5)

    def test_r_eps_empty_window(self):
        assert r_eps_of_y(16, 0.3, 0.8) == 0.0

    def test_r_eps_in_unit_interval(self):
        value = r_eps_of_y(64, 0.5, 3.0 / 64)
        assert 0.0 < value < 1.0

    def test_r_eps_rejects_bad_eps(self):
        with pytest.raises(PreconditionError):
            r_eps_of_y(8, 0.5, 0.0)

    def test_delta_tilde_decreasing(self):
        values = [delta_tilde(16, eps, points=41) for eps in (0.02, 0.05, 0.1, 0.2, 0.4)]
        assert all(a > b for a, b in zip(values, values[1:]))
        assert all(0.0 <= v < 1.0 for v in values)

    def test_delta_tilde_divides_by_profile_peak(self, caplog):
        for gen in spawn_rngs(7, 24):
            n = int(gen.integers(2, 17))
            eps = float(gen.uniform(0.5, 6.0)) / n
            if eps >= 1.0:
                continue
            peak, y_peak, centre = r_eps_peak(n, eps, points=41)
            assert peak >= centre
            assert 0.0 <= y_peak <= 1.0
            integral = simpson(lambda ys: np.array([r_eps_of_y(n, float(y), eps) for y in ys]), 0.0, 1.0, 40)
            caplog.clear()
            with caplog.at_level('WARNING', logger='modules.qae'):
                value = delta_tilde(n, eps, points=41)
            assert value == pytest.approx(integral / (1.0 + peak), rel=1e-7)
            off_centre = any("peaks off centre" in r.getMessage() for r in caplog.records)
            assert off_centre == (peak > centre + 1e-9)

    def test_r_eps_off_centre_peak(self, caplog):
        peak, y_peak, centre = r_eps_peak(32, 3.0 / 32, points=201)
        assert peak > centre + 1e-3
        assert y_peak != pytest.approx(0.5)
        with caplog.at_level('WARNING', logger='modules.qae'):
            value = delta_tilde(32, 3.0 / 32, points=201)
        assert any("peaks off centre" in r.getMessage() for r in caplog.records)
        integral = simpson(lambda ys: np.array([r_eps_of_y(32, float(y), 3.0 / 32) for y in ys]), 0.0, 1.0, 200)
        assert value == pytest.approx(integral / (1.0 + peak), rel=1e-7)

    def test_delta_tilde_brackets_tenth_at_large_register(self):
        assert delta_tilde(256, 1.2 / 256, points=65) > 0.1 > delta_tilde(256, 2.2 / 256, points=65)

    def test_eps_for_delta_self_consistent(self):
        eps = eps_for_delta(16, 0.3, points=41)
        assert delta_tilde(16, eps, points=41) == pytest.approx(0.3, abs=1e-3)

    @pytest.mark.slow
    @pytest.mark.parametrize("delta,expected,slack", [(0.1, 1.63, 0.05), (0.05, 2.09, 0.05), (0.01, 3.03, 0.07)])
    def test_eps_for_delta_large_register(self, delta, expected, slack):
        assert 1024 * eps_for_delta(1024, delta) == pytest.approx(expected, abs=slack)

    def test_bound_table_rejects_negative(self):
        table = BoundTable('r')
        table.add(8, 0.5, 0.1)
        assert table.rows == [(8, 0.5, 0.1)]
        assert table.header == ("N", "y", "r")
        with pytest.raises(RangeError):
            table.add(8, 0.5, -1.0)


class TestFamilies:
    """Outcome families from amplitude amplification and phase estimation."""

    def test_amplitude_amplification_k0(self):
        fam = amplitude_amplification_family(0)
        x = np.linspace(0.0, 1.0, 5)
        assert_allclose(fam.values(x), [1 - x, x], atol=1e-14)
        assert fam.labels == [1, 0]

    def test_amplitude_amplification_matches_simulation(self):
        fam = amplitude_amplification_family(2)
        assert fam.N == 5
        for theta in np.linspace(0.0, np.pi, 17):
            x = np.cos(theta / 2) ** 2
            assert_allclose(fam.values(x)[:, 0], simulate_amplitude_amplification(2, theta), atol=1e-12)

    def test_qpe_sine_normalized(self):
        fam = qpe_sine_family(16)
        x = np.linspace(0.0, 1.0, 33)
        assert_allclose(fam.values(x).sum(axis=0), 1.0, atol=1e-9)
        assert fam.values(x).min() >= -1e-9

    def test_qpe_sine_fit_reproduces_simulation(self, rng):
        fam = qpe_sine_family(16)
        for theta in rng.uniform(0.0, np.pi, 100):
            x = np.cos(theta / 2) ** 2
            assert_allclose(fam.values(x)[:, 0], qpe_sine_probabilities(16, theta), atol=1e-9)

    @pytest.mark.parametrize("theta", [0.0, 0.4, 1.3, np.pi])
    def test_qpe_closed_form(self, theta):
        assert_allclose(qpe_sine_probabilities_closed_form(16, theta), qpe_sine_probabilities(16, theta), atol=1e-12)

    def test_family_rejects_bad_members(self):
        with pytest.raises(PreconditionError):
            ProbabilityFamily(N=1, members=[ChebPoly([0.0, 0.0, 1.0])])
        fam = ProbabilityFamily(N=1, members=[cheb_from_monomial([0.0, 1.0])])
        with pytest.raises(PreconditionError):
            fam.check()

    def test_qpe_rejects_small_register(self):
        with pytest.raises(PreconditionError):
            qpe_sine_family(1)


class TestEstimators:
    """Posterior means, mean squared error and window error."""

    def test_single_certain_outcome(self):
        summary = bayes_and_errors(ProbabilityFamily(N=1, members=[ChebPoly([1.0])]))
        assert summary.x_tilde[0] == pytest.approx(0.5)
        assert summary.delta_x == pytest.approx(1 / np.sqrt(12))

    def test_two_linear_outcomes(self):
        summary = bayes_and_errors(amplitude_amplification_family(0))
        # outcomes are ordered (1 - x, x)
        assert_allclose(summary.x_tilde, [1 / 3, 2 / 3])
        assert summary.delta_x == pytest.approx(1 / np.sqrt(18))

    def test_mass_identities(self):
        for fam in (amplitude_amplification_family(3), qpe_sine_family(12)):
            summary = bayes_and_errors(fam)
            assert summary.mass.sum() == pytest.approx(1.0, abs=1e-9)
            assert np.sum(summary.mass * summary.x_tilde) == pytest.approx(0.5, abs=1e-9)

    def test_error_above_lower_bound(self):
        fam = qpe_sine_family(12)
        summary = bayes_and_errors(fam)
        bound = sum(m * r_of_y(fam.N, float(x)) for m, x in zip(summary.mass, summary.x_tilde))
        assert summary.delta_x ** 2 >= bound - 1e-8

    def test_window_error_above_lower_bound(self):
        fam = qpe_sine_family(8)
        summary = bayes_and_errors(fam)
        bound = sum(m * r_eps_of_y(fam.N, float(x), 0.1) for m, x in zip(summary.mass, summary.x_tilde))
        assert chebyshev_window_error(fam, summary.x_tilde, 0.1) >= bound - 1e-8

    def test_window_error(self):
        fam = amplitude_amplification_family(0)
        summary = bayes_and_errors(fam, eps=[1.0])
        assert summary.window == [(1.0, pytest.approx(0.0, abs=1e-14))]
        wide = chebyshev_window_error(fam, summary.x_tilde, 0.1)
        narrow = chebyshev_window_error(fam, summary.x_tilde, 0.05)
        assert narrow > wide > 0.0

    def test_window_epsilon(self):
        fam = amplitude_amplification_family(1)
        summary = bayes_and_errors(fam)
        eps = window_epsilon(fam, 0.2, summary)
        assert chebyshev_window_error(fam, summary.x_tilde, eps) == pytest.approx(0.2, abs=1e-3)

    @pytest.mark.slow
    def test_sine_family_standard_deviation(self):
        ratios = [n * bayes_and_errors(qpe_sine_family(n)).delta_x / (np.pi / np.sqrt(6)) for n in (64, 256)]
        assert 0.9 <= ratios[1] <= 1.02
        assert ratios[1] > ratios[0]

    @pytest.mark.slow
    @pytest.mark.parametrize("delta,expected", [(0.1, 2.02), (0.05, 2.44), (0.01, 3.31)])
    def test_sine_family_window(self, delta, expected):
        fam = qpe_sine_family(256)
        assert 256 * window_epsilon(fam, delta) == pytest.approx(expected, rel=0.1)


class TestCircuitConstruction:
    """Outcome polynomials turned into measured QSVT circuits."""

    def test_decompose_constant(self):
        a, b = decompose_prob_AB(ChebPoly([1.0]), 0)
        assert_allclose(np.abs(a), [1.0], atol=1e-12)
        assert_allclose(b, [0.0], atol=1e-12)

    def test_decompose_x(self):
        a, b = decompose_prob_AB(cheb_from_monomial([0.0, 1.0]), 1)
        assert_allclose(np.abs(a), [0.0, 1.0], atol=1e-8)
        assert_allclose(b, [0.0], atol=1e-8)

    def test_decompose_one_minus_x(self):
        a, b = decompose_prob_AB(cheb_from_monomial([1.0, -1.0]), 1)
        assert_allclose(a, [0.0, 0.0], atol=1e-8)
        assert_allclose(np.abs(b), [1.0], atol=1e-8)

    def test_decompose_rejects_negative(self):
        with pytest.raises(PreconditionError):
            decompose_prob_AB(cheb_from_monomial([-0.5, 1.0]), 1)

    def test_two_outcome_circuit(self):
        params = build_qae_circuit(amplitude_amplification_family(0))
        assert params.n_dim == 2
        assert_allclose(simulate_qae_circuit(params, _theta_of_x(0.25)), [0.75, 0.25], atol=1e-8)

    @pytest.mark.parametrize("k", [0, 1, 2])
    def test_amplitude_amplification_circuits(self, k):
        fam = amplitude_amplification_family(k)
        params = build_qae_circuit(fam)
        assert params.length == 2 * k + 1
        for theta in np.linspace(0.0, np.pi, 33):
            expected = fam.values(np.cos(theta / 2) ** 2)[:, 0]
            assert_allclose(simulate_qae_circuit(params, theta), expected, atol=1e-6)

    def test_phase_estimation_circuit(self):
        fam = qpe_sine_family(8)
        params = build_qae_circuit(fam)
        assert params.n_dim == 8
        for theta in np.linspace(0.0, np.pi, 33):
            expected = fam.values(np.cos(theta / 2) ** 2)[:, 0]
            assert_allclose(simulate_qae_circuit(params, theta), expected, atol=1e-6)
