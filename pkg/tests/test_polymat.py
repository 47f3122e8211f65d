#!/usr/bin/env python3
# -*- coding: utf-8 -*-

import numpy as np
import pytest
from numpy.testing import assert_allclose

from utils.errors import DomainError, ShapeError
from utils.numerics import complex_gaussian, random_unitary, spawn_rngs
from utils.polymat import (ChebPoly, HermLaurent, PolyMatrix, cheb_from_monomial, cheb_integral, cheb_moments,
                           cheb_mul, cheb_shift_parity, cheb_to_monomial, cheb_window_integrals,
                           cos_half_angle_expand, gram_defect, half_angle_split, hstack,
                           real_poly_from_chebyshev, verification_grid, vstack)


class TestPolyMatrix:
    """Construction, evaluation and algebra of matrix Laurent polynomials."""

    def test_eval_scalar_polynomial(self):
        p = PolyMatrix.scalar([1.0, 2.0, 3.0])
        assert p.eval(2.0)[0, 0] == pytest.approx(17.0)

    def test_laurent_eval_and_zero_point(self):
        p = PolyMatrix.scalar([1.0, 0.0, 1.0], lo=-1)
        assert p.eval(1j)[0, 0] == pytest.approx(0.0)
        assert p.eval(2.0)[0, 0] == pytest.approx(2.5)
        with pytest.raises(DomainError):
            p.eval(0.0)

    def test_leading_zeros_are_trimmed(self):
        p = PolyMatrix(np.array([[[1.0]], [[2.0]], [[0.0]]]))
        assert p.degree == 1
        assert PolyMatrix(np.zeros((3, 2, 2))).degree == 0

    def test_bad_shape_rejected(self):
        with pytest.raises(ShapeError):
            PolyMatrix(np.zeros((0, 1, 1)))

    def test_eval_grid_matches_pointwise(self, rng):
        p = PolyMatrix(complex_gaussian(rng, (4, 2, 3)), lo=-2)
        zs = verification_grid(p.span)
        grid = p.eval_grid(zs)
        for z, value in zip(zs, grid):
            assert_allclose(value, p.eval(z), atol=1e-12)

    def test_adjoint_matches_conjugate_transpose_on_circle(self, rng):
        p = PolyMatrix(complex_gaussian(rng, (3, 2, 3)), lo=1)
        z = np.exp(0.7j)
        assert_allclose(p.adjoint_on_circle().eval(z), p.eval(z).conj().T, atol=1e-12)

    def test_mul_is_pointwise_product(self, rng):
        a = PolyMatrix(complex_gaussian(rng, (3, 2, 3)))
        b = PolyMatrix(complex_gaussian(rng, (2, 3, 1)), lo=-1)
        z = np.exp(1.3j)
        assert_allclose(a.mul(b).eval(z), a.eval(z) @ b.eval(z), atol=1e-12)
        assert a.mul(b).lo == -1
        with pytest.raises(ShapeError):
            b.mul(b)

    def test_products_and_adjoints_on_random_circle_points(self):
        for case, gen in enumerate(spawn_rngs(99, 200)):
            rows, inner, cols = (int(k) for k in gen.integers(1, 4, size=3))
            a = PolyMatrix(complex_gaussian(gen, (int(gen.integers(1, 5)), rows, inner)), lo=int(gen.integers(-2, 3)))
            b = PolyMatrix(complex_gaussian(gen, (int(gen.integers(1, 5)), inner, cols)), lo=int(gen.integers(-2, 3)))
            z = np.exp(1j * gen.uniform(-np.pi, np.pi))
            assert_allclose(a.mul(b).eval(z), a.eval(z) @ b.eval(z), atol=1e-10, err_msg=f"case {case}")
            assert_allclose(a.adjoint_on_circle().eval(z), a.eval(z).conj().T, atol=1e-10, err_msg=f"case {case}")

    def test_add_sub_and_shift(self, rng):
        a = PolyMatrix(complex_gaussian(rng, (2, 2, 2)))
        b = PolyMatrix(complex_gaussian(rng, (3, 2, 2)), lo=-1)
        z = 0.5 + 0.25j
        assert_allclose((a + b).eval(z), a.eval(z) + b.eval(z), atol=1e-12)
        assert (a - a).is_zero()
        assert_allclose(a.shift(2).eval(z), z ** 2 * a.eval(z), atol=1e-12)

    def test_eval_operator_on_diagonal_unitary(self):
        p = PolyMatrix(np.array([[[1.0, 0.0]], [[0.0, 2.0]]]))
        u = np.diag(np.exp([0.3j, -1.1j]))
        out = p.eval_operator(u)
        assert out.shape == (2, 4)
        assert_allclose(out[:, :2], np.eye(2))
        assert_allclose(out[:, 2:], 2 * u)

    def test_stacking_aligns_powers(self):
        a = PolyMatrix.scalar([1.0], lo=-1)
        b = PolyMatrix.scalar([0.0, 0.0, 1.0])
        stacked = vstack([a, b])
        assert (stacked.lo, stacked.hi, stacked.shape) == (-1, 2, (2, 1))
        assert hstack([a, b]).shape == (1, 2)

    def test_coeff_distance(self):
        a = PolyMatrix.scalar([1.0, 2.0])
        b = PolyMatrix.scalar([1.0, 2.5, 0.1])
        assert a.coeff_distance(b) == pytest.approx(0.5)


class TestGramDefect:
    """I - P^dagger P as a Hermitian Laurent polynomial."""

    def test_gram_defect_values(self, rng):
        p = PolyMatrix(complex_gaussian(rng, (3, 2, 2)) / 4)
        f = gram_defect(p)
        assert isinstance(f, HermLaurent)
        assert f.half_span == 2
        for z in verification_grid(2):
            pz = p.eval(z)
            assert_allclose(f.eval(z), np.eye(2) - pz.conj().T @ pz, atol=1e-12)

    def test_hermitian_on_circle(self, rng):
        f = gram_defect(PolyMatrix(complex_gaussian(rng, (2, 3, 2))))
        assert f.max_hermitian_defect() < 1e-12

    def test_unitary_polynomial_has_zero_defect(self, rng):
        u = random_unitary(rng, 3)
        pi = np.diag([1.0, 0.0, 0.0])
        p = PolyMatrix(np.array([(np.eye(3) - pi) @ u, pi @ u]))
        assert gram_defect(p).max_abs() < 1e-12

    def test_grid_size(self):
        assert len(verification_grid(3)) == 11


class TestChebyshev:
    """Shifted Chebyshev series on [0, 1] and their exact integrals."""

    def test_monomial_round_trip_values(self):
        p = cheb_from_monomial([0.5, -1.0, 2.0])
        x = np.linspace(0.0, 1.0, 7)
        assert_allclose(p(x), 0.5 - x + 2 * x ** 2, atol=1e-13)
        assert p.degree == 2

    def test_x_is_half_t0_plus_half_t1(self):
        assert_allclose(cheb_from_monomial([0.0, 1.0]).coeffs, [0.5, 0.5], atol=1e-14)

    def test_multiplication(self):
        x = cheb_from_monomial([0.0, 1.0])
        one_minus_x = cheb_from_monomial([1.0, -1.0])
        prod = cheb_mul(x, one_minus_x)
        grid = np.linspace(0.0, 1.0, 5)
        assert_allclose(prod(grid), grid * (1 - grid), atol=1e-13)

    def test_integral(self):
        assert cheb_integral(cheb_from_monomial([0.0, 0.0, 1.0])) == pytest.approx(1.0 / 3.0)
        assert ChebPoly([1.0]).integral(0.25, 0.75) == pytest.approx(0.5)

    def test_shift_parity_doubles_degree(self):
        p = ChebPoly([0.2, 0.3, 0.5])
        even = cheb_shift_parity(p)
        c = np.linspace(-1.0, 1.0, 9)
        assert_allclose(even(c), p(c ** 2), atol=1e-13)

    def test_to_monomial_is_on_unit_interval_variable(self):
        # T_1(2x - 1) = 2x - 1
        assert_allclose(cheb_to_monomial(ChebPoly([0.0, 1.0])), [-1.0, 2.0], atol=1e-14)

    def test_real_poly_from_chebyshev(self):
        assert_allclose(real_poly_from_chebyshev([0.0, 0.0, 0.0, 1.0]), [0.0, -3.0, 0.0, 4.0], atol=1e-14)

    def test_moments(self):
        assert_allclose(cheb_moments(4, 0), [1.0, 0.0, -1.0 / 3.0, 0.0, -1.0 / 15.0], atol=1e-14)
        x = np.linspace(0.0, 1.0, 20001)
        for power in (1, 2):
            for d, value in enumerate(cheb_moments(5, power)):
                integrand = x ** power * np.cos(d * np.arccos(2 * x - 1))
                assert value == pytest.approx(np.trapz(integrand, x), abs=1e-7)

    def test_moments_reject_high_power(self):
        with pytest.raises(DomainError):
            cheb_moments(3, 3)

    def test_window_integrals(self):
        rows = cheb_window_integrals([0.0, 0.25, 0.9], [1.0, 0.5, 0.8], 3)
        assert rows.shape == (3, 4)
        assert_allclose(rows[0], cheb_moments(3, 0), atol=1e-14)
        assert rows[1, 0] == pytest.approx(0.25)
        # T_1(2x - 1) = 2x - 1 integrates to x^2 - x
        assert rows[1, 1] == pytest.approx((0.25 - 0.5) - (0.0625 - 0.25))
        assert_allclose(rows[2], 0.0, atol=1e-15)

    def test_window_integrals_clamp_to_unit_interval(self):
        assert_allclose(cheb_window_integrals([-0.5], [1.5], 2)[0], cheb_moments(2, 0), atol=1e-14)


class TestHalfAngle:
    """Splitting e^{-i L theta / 2} q(e^{i theta}) into cosine and sine parts."""

    def test_split_reconstructs_trig_polynomial(self, rng):
        degree = 3
        q = complex_gaussian(rng, (degree + 1, 1, 1))
        p1, q1 = half_angle_split(q, degree)
        assert p1.shape == (degree + 1, 1, 1)
        assert q1.shape == (degree, 1, 1)
        for theta in np.linspace(0.1, 6.0, 7):
            c, s = np.cos(theta / 2), np.sin(theta / 2)
            expected = np.exp(-0.5j * degree * theta) * np.polyval(q[::-1, 0, 0], np.exp(1j * theta))
            got = np.polyval(p1[::-1, 0, 0], c) + s * np.polyval(q1[::-1, 0, 0], c)
            assert got == pytest.approx(expected, abs=1e-12)

    def test_expand_inverts_cosine_part(self):
        # P(c) = c on degree 1: e^{i theta / 2} cos(theta / 2) = (1 + w) / 2
        out = cos_half_angle_expand(np.array([0.0, 1.0]).reshape(2, 1, 1), 1)
        assert_allclose(out[:, 0, 0], [0.5, 0.5], atol=1e-14)

    def test_expand_rejects_wrong_parity(self):
        with pytest.raises(DomainError):
            cos_half_angle_expand(np.array([1.0, 1.0]).reshape(2, 1, 1), 1)
