#!/usr/bin/env python3
# -*- coding: utf-8 -*-

import numpy as np
import pytest
from numpy.testing import assert_allclose

from modules.qsvt import (BlockEncoding, QsvtParams, RealPolyMatrix, blocks_to_matrix, circuit_unitary,
                          complete_qsvt, constraint_residual, fit_realized, forward_2x2, forward_full, forward_pq,
                          forward_symbolic, lcu_parity_combine, parity_split, svt_oracle, synthesize_parity_parts,
                          synthesize_pq, verify_qsvt)
from utils.errors import DomainError, PreconditionError, ShapeError
from utils.numerics import is_unitary, random_contraction, random_hermitian, random_unitary, spawn_rngs


def _phase_params(phases):
    return QsvtParams(n_dim=1, unitaries=[np.array([[np.exp(1j * p)]]) for p in phases])


class TestRealPolyMatrix:
    """Polynomials in a real variable with parity bookkeeping."""

    def test_parity(self):
        assert RealPolyMatrix.scalar([0.0, 1.0, 0.0, 2.0]).parity == 'odd'
        assert RealPolyMatrix.scalar([1.0, 0.0, 2.0]).parity == 'even'
        assert RealPolyMatrix.scalar([1.0, 1.0]).parity is None
        assert RealPolyMatrix.scalar([0.0]).has_parity(1)

    def test_from_chebyshev(self):
        p = RealPolyMatrix.from_chebyshev([0.0, 0.0, 1.0])
        assert p(0.5)[0, 0] == pytest.approx(-0.5)

    def test_parity_split_averages_back(self):
        p = RealPolyMatrix.scalar([0.1, 0.2, 0.3])
        even, odd = parity_split(p)
        assert even.parity == 'even'
        assert odd.parity == 'odd'
        assert (even + odd).scale(0.5).coeff_distance(p) < 1e-15

    def test_degree_ignores_trailing_zeros(self):
        assert RealPolyMatrix.scalar([1.0, 2.0, 0.0]).degree == 1


class TestBlockEncoding:
    """Unitary dilations and the signal rotation."""

    def test_dilation_of_rectangular_contraction(self, rng):
        a = random_contraction(rng, 3, 2)
        be = BlockEncoding.from_matrix(a)
        assert be.dim == 6
        assert is_unitary(be.u, 1e-10)
        assert_allclose(be.matrix, a)

    def test_dilation_rejects_large_norm(self):
        with pytest.raises(PreconditionError):
            BlockEncoding.from_matrix(np.array([[1.5]]))

    def test_rotation(self):
        be = BlockEncoding.from_rotation(np.pi / 2)
        assert be.matrix[0, 0] == pytest.approx(np.cos(np.pi / 4))
        assert is_unitary(be.u, 1e-14)


class TestForward:
    """Qubitized simulation of phase and matrix sequences."""

    def test_single_call_is_x(self):
        p, q = forward_2x2(_phase_params([0.0, 0.0]), 0.6)
        assert p[0, 0] == pytest.approx(0.6)
        assert q[0, 0] == pytest.approx(0.8)

    def test_forward_2x2_domain(self):
        with pytest.raises(DomainError):
            forward_2x2(_phase_params([0.0]), 1.5)

    def test_columns_have_unit_norm(self, rng):
        params = QsvtParams(n_dim=2, unitaries=[random_unitary(rng, 2) for _ in range(5)])
        for lam in np.linspace(0.0, 1.0, 11):
            p, sq = forward_2x2(params, lam)
            gram = p.conj().T @ p + sq.conj().T @ sq
            assert_allclose(gram, np.eye(2), atol=1e-12)

    def test_symbolic_matches_pointwise(self, rng):
        params = QsvtParams(n_dim=2, unitaries=[random_unitary(rng, 2) for _ in range(4)])
        p_sym, q_sym = forward_symbolic(params)
        assert p_sym.parity == 'odd'
        assert q_sym.parity == 'even'
        for x in (-0.7, 0.2, 0.9):
            p, q = forward_pq(params, x)
            assert_allclose(p_sym(x), p, atol=1e-12)
            assert_allclose(q_sym(x), q, atol=1e-12)
        assert fit_realized(params).coeff_distance(p_sym) < 1e-10

    def test_circuit_matches_oracle(self, rng):
        params = QsvtParams(n_dim=2, unitaries=[random_unitary(rng, 2) for _ in range(4)])
        a = random_contraction(rng, 3, 2)
        blocks = forward_full(params, BlockEncoding.from_matrix(a))
        realized, _ = forward_symbolic(params)
        assert_allclose(blocks, svt_oracle(a, realized), atol=1e-10)

    def test_even_circuit_matches_oracle(self, rng):
        params = QsvtParams(n_dim=2, unitaries=[random_unitary(rng, 2) for _ in range(3)])
        a = random_contraction(rng, 2, 3)
        be = BlockEncoding.from_matrix(a)
        blocks = forward_full(params, be)
        assert blocks.shape == (2, 2, 3, 3)
        realized, _ = forward_symbolic(params)
        assert_allclose(blocks, svt_oracle(a, realized, 'even'), atol=1e-10)
        assert is_unitary(circuit_unitary(params, be), 1e-10)

    def test_blocks_to_matrix(self):
        blocks = np.arange(16).reshape(2, 2, 2, 2)
        out = blocks_to_matrix(blocks)
        assert out.shape == (4, 4)
        assert out[0, 2] == blocks[0, 1, 0, 0]
        assert out[3, 1] == blocks[1, 0, 1, 1]


class TestOracle:
    """Singular value transformation by explicit SVD."""

    def test_odd_identity_returns_matrix(self, rng):
        a = random_contraction(rng, 3, 2)
        out = svt_oracle(a, RealPolyMatrix.scalar([0.0, 1.0]))
        assert_allclose(out[0, 0], a, atol=1e-12)

    def test_even_square_is_gram(self, rng):
        a = random_contraction(rng, 3, 2)
        out = svt_oracle(a, RealPolyMatrix.scalar([0.0, 0.0, 1.0]))
        assert_allclose(out[0, 0], a.conj().T @ a, atol=1e-12)

    def test_mixed_parity_rejected(self, rng):
        with pytest.raises(PreconditionError):
            svt_oracle(random_contraction(rng, 2, 2), RealPolyMatrix.scalar([1.0, 1.0]))


class TestSynthesizePQ:
    """Backward reduction of (P, Q) pairs."""

    def test_degree_one(self):
        params = synthesize_pq(RealPolyMatrix.scalar([0.0, 1.0]), RealPolyMatrix.scalar([1.0]))
        assert params.length == 1
        p, q = forward_symbolic(params)
        assert p.coeff_distance(RealPolyMatrix.scalar([0.0, 1.0])) < 1e-12
        assert q.coeff_distance(RealPolyMatrix.scalar([1.0])) < 1e-12

    def test_round_trip_random_params(self):
        for case, rng in enumerate(spawn_rngs(11, 200)):
            n_dim = int(rng.integers(1, 3))
            length = int(rng.integers(1, 5))
            params = QsvtParams(n_dim=n_dim, unitaries=[random_unitary(rng, n_dim) for _ in range(length + 1)])
            p, q = forward_symbolic(params)
            again = synthesize_pq(p, q, degree=length)
            p2, q2 = forward_symbolic(again)
            assert p2.coeff_distance(p) < 1e-8, f"case {case}"
            assert q2.coeff_distance(q) < 1e-8, f"case {case}"

    def test_rejects_wrong_parity(self):
        with pytest.raises(PreconditionError):
            synthesize_pq(RealPolyMatrix.scalar([1.0, 0.0]), RealPolyMatrix.scalar([0.0]), degree=1)

    def test_rejects_broken_constraint(self):
        with pytest.raises(PreconditionError):
            synthesize_pq(RealPolyMatrix.scalar([0.0, 0.5]), RealPolyMatrix.scalar([1.0]))

    def test_rejects_shape_mismatch(self):
        with pytest.raises(ShapeError):
            synthesize_pq(RealPolyMatrix(np.zeros((2, 2, 1))), RealPolyMatrix(np.zeros((1, 1, 1))))

    def test_constraint_residual(self):
        residual, _ = constraint_residual(RealPolyMatrix.scalar([0.0, 1.0]), RealPolyMatrix.scalar([1.0]))
        assert residual < 1e-14


class TestCompletion:
    """complete_qsvt on scalar and matrix targets, checked against the oracle."""

    def test_random_targets_match_oracle(self, make_parity_poly):
        for case, rng in enumerate(spawn_rngs(99, 20)):
            size = 1 if case % 2 == 0 else 2
            degree = int(rng.integers(1, 9))
            target = make_parity_poly(rng, size, size, degree)
            p1, q1, params = complete_qsvt(target)
            assert params.n_dim == 2 * size
            assert params.length == degree

            realized, _ = forward_symbolic(params)
            block = realized.block(slice(0, size), slice(0, size))
            assert block.coeff_distance(target) <= 1e-7, f"case {case}"

            for lam in np.linspace(0.0, 1.0, 21):
                p, q = forward_pq(params, lam)
                gram = p.conj().T @ p + (1 - lam * lam) * q.conj().T @ q
                assert np.linalg.norm(gram - np.eye(params.n_dim), 2) <= 1e-9, f"case {case}"

            a = random_contraction(rng, 3, 2) if case % 4 < 2 else random_contraction(rng, 2, 2)
            blocks = forward_full(params, BlockEncoding.from_matrix(a))
            expected = svt_oracle(a, target, 'odd' if degree % 2 else 'even')
            assert_allclose(blocks[:size, :size], expected, atol=1e-7, err_msg=f"case {case}")

    def test_chebyshev_target(self):
        # T_3 / 2
        target = RealPolyMatrix.from_chebyshev([0.0, 0.0, 0.0, 0.5])
        p1, q1, params = complete_qsvt(target)
        report = verify_qsvt(params, random_contraction(np.random.default_rng(3), 2, 2), target)
        assert report["ok"]
        assert report["target_coeff_error"] < 1e-7

    def test_rejects_norm_above_one(self):
        with pytest.raises(PreconditionError):
            complete_qsvt(RealPolyMatrix.scalar([0.0, 1.5]))

    def test_rejects_parity_mismatch(self):
        with pytest.raises(PreconditionError):
            complete_qsvt(RealPolyMatrix.scalar([0.2, 0.3]))


class TestParityCombination:
    """Mixed-parity targets through the average of two circuits."""

    def test_mixed_polynomial_of_hermitian_matrix(self, rng):
        p = RealPolyMatrix.scalar([0.15, 0.25, -0.05])
        params_even, params_odd = synthesize_parity_parts(p)
        a = random_hermitian(rng, 2, norm=0.8)
        out = lcu_parity_combine(params_even, params_odd, a)
        expected = 0.15 * np.eye(2) + 0.25 * a - 0.05 * a @ a
        assert_allclose(out, expected, atol=1e-7)

    def test_rejects_non_hermitian(self, rng):
        p = RealPolyMatrix.scalar([0.15, 0.25, -0.05])
        params_even, params_odd = synthesize_parity_parts(p)
        with pytest.raises(PreconditionError):
            lcu_parity_combine(params_even, params_odd, random_contraction(rng, 2, 2))
