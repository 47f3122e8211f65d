#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""Shared fixtures: a seeded generator and small random-input factories."""

import numpy as np
import pytest

from modules.qspu import QspuParams
from modules.qsvt import RealPolyMatrix
from utils.numerics import complex_gaussian, make_rng, random_contraction, random_projector, random_unitary
from utils.polymat import PolyMatrix
from utils.specfact import sv_bound_check


@pytest.fixture
def rng():
    return make_rng(42)


@pytest.fixture
def make_params():
    """Random QSP parameters; projector ranks stay strictly between 0 and n_dim."""
    def factory(rng, n_dim, length):
        projectors = []
        for _ in range(length):
            rank = int(rng.integers(1, n_dim)) if n_dim > 1 else 1
            projectors.append(random_projector(rng, n_dim, rank))
        return QspuParams(n_dim=n_dim, seed=random_unitary(rng, n_dim), projectors=projectors)
    return factory


@pytest.fixture
def make_subunitary():
    """Random rows x cols polynomial of the given degree with circle-max singular value `norm`."""
    def factory(rng, rows, cols, degree, norm=0.9):
        p = PolyMatrix(complex_gaussian(rng, (degree + 1, rows, cols)), trim=False)
        return p.scale(norm / sv_bound_check(p, points=1024))
    return factory


@pytest.fixture
def make_parity_poly():
    """Random polynomial in x with parity `degree mod 2` and max norm `norm` on [-1, 1]."""
    def factory(rng, rows, cols, degree, norm=0.9):
        coeffs = np.zeros((degree + 1, rows, cols), dtype=complex)
        coeffs[degree % 2::2] = complex_gaussian(rng, coeffs[degree % 2::2].shape)
        poly = RealPolyMatrix(coeffs)
        xs = np.linspace(-1.0, 1.0, 1001)
        top = float(np.max(np.linalg.norm(poly.eval_grid(xs), ord=2, axis=(1, 2))))
        return poly.scale(norm / top)
    return factory


@pytest.fixture
def make_contraction():
    def factory(rng, rows, cols, norm=0.9):
        return random_contraction(rng, rows, cols, norm)
    return factory
