#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
QSP Workbench - Spectral Factorization Module
Factors Laurent matrix polynomials that are positive semidefinite on the unit
circle as F(z) = Q(z)^dagger Q(z) with Q analytic, and nonnegative
trigonometric polynomials as |A(e^{i theta})|^2 (Fejer-Riesz).

The matrix path is Bauer's method: a Cholesky factorization of a truncated,
banded block-Toeplitz matrix built from F's coefficients, whose last block row
approximates the factor. The factor is then polished with Levenberg-Marquardt
on the coefficient equations F_s = sum_l Q_l^dagger Q_{l+s}, which restores
full accuracy when F is singular somewhere on the circle.
"""

import logging
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np
import scipy.linalg
import scipy.optimize

from utils.errors import ConvergenceError, PreconditionError
from utils.numerics import psd_sqrt
from utils.polymat import HermLaurent, PolyMatrix, verification_grid, verification_grid_points

try:
    import config
except ImportError:
    class MockConfig:
        DEFAULT_TOL = 1e-8
        BAUER_DEPTH_FACTOR = 32
        BAUER_MAX_DOUBLINGS = 3
    config = MockConfig()
    logging.warning("config.py not found, using default factorization settings.")

logger = logging.getLogger(__name__)

# Relative radius band treated as "on the unit circle" when splitting roots.
_CIRCLE_BAND = 1e-3
# Angular gap (radians) separating clusters of near-circle roots.
_CLUSTER_GAP = 1e-2


@dataclass(frozen=True)
class FactorResult:
    """Analytic factor Q of F together with the grid residual max ||F - Q^dagger Q||."""
    Q: PolyMatrix
    residual: float


def spectral_factor(F: HermLaurent, tol: float = None) -> FactorResult:
    """
    Matrix spectral factorization F(z) = Q(z)^dagger Q(z) on |z| = 1.

    Scalar F goes through the root-based factor shared with fejer_riesz, which
    stays exact when F has zeros on the circle. Matrix F uses Bauer's method.

    Args:
        F: Hermitian Laurent polynomial with span [-L, L].
        tol: target for the grid residual (default config.DEFAULT_TOL).

    Returns:
        FactorResult with Q of degree <= L.

    Raises:
        PreconditionError: F has an eigenvalue below -tol on the grid.
        ConvergenceError: no depth within the doubling budget reached tol.
    """
    tol = config.DEFAULT_TOL if tol is None else tol
    half = F.half_span
    grid = verification_grid(2 * half)
    _check_psd(F, grid, tol)

    fp = np.array(F.positive_coeffs())
    if half == 0:
        q = psd_sqrt(fp[0])[np.newaxis]
        result = FactorResult(PolyMatrix(q), _grid_residual(F, q, grid))
        logger.debug(f"Constant spectral factor, residual {result.residual:.2e}")
        return result

    best_q, best_res = None, np.inf
    if F.rows == 1:
        q = _scalar_factor(fp[:, 0, 0]).reshape(-1, 1, 1)
        res = _grid_residual(F, q, grid)
        if res > tol:
            q = _polish(fp, q)
            res = _grid_residual(F, q, grid)
        logger.debug(f"Scalar root factor of span {half}: residual {res:.3e}")
        best_q, best_res = q, res

    depth = config.BAUER_DEPTH_FACTOR * (half + 1)
    attempt = 0
    while best_res > tol and attempt <= config.BAUER_MAX_DOUBLINGS:
        q, res = _bauer_refined(F, fp, depth, tol, grid)
        logger.debug(f"Bauer depth {depth} blocks: residual {res:.3e}")
        if res < best_res:
            best_q, best_res = q, res
        depth *= 2
        attempt += 1
    if best_res > tol:
        raise ConvergenceError(f"spectral factorization residual {best_res:.3e} exceeds tolerance {tol:.1e}",
                               best_residual=float(best_res), tol=tol)
    logger.info(f"Spectral factor of span {half} ({F.rows}x{F.cols}): residual {best_res:.2e}")
    return FactorResult(PolyMatrix(best_q), float(best_res))


def _bauer_refined(F: HermLaurent, fp: np.ndarray, depth: int, tol: float, grid: np.ndarray):
    """
    Bauer factor of F + eta I, polished against the unregularized F. Eta starts
    at max(1e-12, tol / 100) and shrinks by 100 while the residual misses tol.
    """
    scale = float(np.max(np.abs(fp)))
    eta = max(1e-12, tol / 100)
    floor = max(1e-16 * scale, 1e-300)
    best_q, best_res = None, np.inf
    while eta >= floor:
        try:
            q = _bauer_factor(fp, depth, eta)
        except scipy.linalg.LinAlgError:
            logger.debug(f"Banded Cholesky lost definiteness at eta {eta:.1e}")
            break
        res = _grid_residual(F, q, grid)
        if res > tol:
            q = _polish(fp, q)
            res = _grid_residual(F, q, grid)
        if res < best_res:
            best_q, best_res = q, res
        if best_res <= tol:
            break
        eta /= 100
    if best_q is None:
        return np.zeros_like(fp), np.inf
    return best_q, best_res


def _check_psd(F: PolyMatrix, grid: np.ndarray, tol: float) -> None:
    vals = F.eval_grid(grid)
    vals = (vals + np.conjugate(np.transpose(vals, (0, 2, 1)))) / 2
    low = np.linalg.eigvalsh(vals)[:, 0]
    worst = int(np.argmin(low))
    if low[worst] < -tol:
        raise PreconditionError(
            f"F is indefinite on the unit circle: eigenvalue {low[worst]:.3e} at angle {np.angle(grid[worst]):.4f}",
            worst_point=complex(grid[worst]), eigenvalue=float(low[worst]))


def _bauer_factor(fp: np.ndarray, blocks: int, eta: float) -> np.ndarray:
    """
    Last block row of the lower Cholesky factor of the block-Toeplitz matrix
    T_ij = F_{j-i} (+ eta I), returned as Q_l = (L_{n-1, n-1-l})^dagger.
    """
    half, c = fp.shape[0] - 1, fp.shape[1]
    size = blocks * c
    bandwidth = (half + 1) * c - 1
    ab = np.zeros((bandwidth + 1, size), dtype=complex)
    for d in range(bandwidth + 1):
        j = np.arange(size - d)
        i = j + d
        m = i // c - j // c
        # T[i, j] = F_{-m} = F_m^dagger
        vals = np.conjugate(fp[np.minimum(m, half), j % c, i % c])
        ab[d, :size - d] = np.where(m <= half, vals, 0.0)
    ab[0] += eta
    chol = scipy.linalg.cholesky_banded(ab, lower=True)

    q = np.zeros((half + 1, c, c), dtype=complex)
    for l in range(half + 1):
        col0 = (blocks - 1 - l) * c
        for a in range(c):
            for b in range(c):
                d = l * c + a - b
                if 0 <= d <= bandwidth:
                    q[l, a, b] = chol[d, col0 + b]
        q[l] = q[l].conj().T
    return q


def _gram_coeffs(q: np.ndarray) -> np.ndarray:
    """G_s = sum_l Q_l^dagger Q_{l+s} for s = 0..L."""
    half = q.shape[0] - 1
    g = np.empty_like(q)
    for s in range(half + 1):
        g[s] = np.einsum('lji,ljk->ik', np.conjugate(q[:half + 1 - s]), q[s:])
    return g


def _polish(fp: np.ndarray, q0: np.ndarray) -> np.ndarray:
    """Levenberg-Marquardt on the real residual of F_s - G_s(Q), s = 0..L."""
    shape = q0.shape
    n = q0.size

    def unpack(x):
        return (x[:n] + 1j * x[n:]).reshape(shape)

    def residual(x):
        r = _gram_coeffs(unpack(x)) - fp
        return np.concatenate([r.real.ravel(), r.imag.ravel()])

    def jacobian(x):
        q = unpack(x)
        half = shape[0] - 1
        jac = np.empty((2 * n, 2 * n))
        for p in range(2 * n):
            t = 1.0 if p < n else 1j
            l0, a, b = np.unravel_index(p % n, shape)
            dg = np.zeros(shape, dtype=complex)
            # dQ_{l0}^dagger Q_{l0+s}: row b picks row a of Q_{l0+s}
            dg[:half - l0 + 1, b, :] += np.conjugate(t) * q[l0:, a, :]
            # Q_{l0-s}^dagger dQ_{l0}: column b picks conj(row a of Q_{l0-s})
            dg[:l0 + 1, :, b] += t * np.conjugate(q[l0::-1, a, :])
            jac[:, p] = np.concatenate([dg.real.ravel(), dg.imag.ravel()])
        return jac

    x0 = np.concatenate([q0.real.ravel(), q0.imag.ravel()])
    sol = scipy.optimize.least_squares(residual, x0, jac=jacobian, method='lm',
                                       xtol=1e-15, ftol=1e-15, gtol=1e-15)
    logger.debug(f"Factor polish: {sol.nfev} evaluations, cost {sol.cost:.3e}")
    return unpack(sol.x)


def _grid_residual(F: PolyMatrix, q: np.ndarray, grid: np.ndarray) -> float:
    qv = PolyMatrix(q, trim=False).eval_grid(grid)
    diff = F.eval_grid(grid) - np.conjugate(np.transpose(qv, (0, 2, 1))) @ qv
    return float(np.max(np.linalg.norm(diff, ord=2, axis=(1, 2))))


# --- scalar Fejer-Riesz -------------------------------------------------------

def trig_eval(c: Sequence[float], theta) -> np.ndarray:
    """f(theta) = c_0 + 2 sum_k c_k cos(k theta)."""
    c = np.asarray(c, dtype=float)
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    k = np.arange(1, c.size)
    return c[0] + 2 * np.cos(np.outer(theta, k)) @ c[1:]


def fejer_riesz(c: Sequence[float], tol: float = None) -> np.ndarray:
    """
    Analytic factor of a nonnegative trigonometric polynomial.

    Args:
        c: c_0..c_D with f(theta) = c_0 + 2 sum_k c_k cos(k theta) >= 0.
        tol: grid tolerance for both the nonnegativity check and the result.

    Returns:
        Complex A_0..A_D with |sum_k A_k e^{ik theta}|^2 = f(theta); the roots of
        the factor lie in the closed unit disk.
    """
    tol = config.DEFAULT_TOL if tol is None else tol
    c = np.asarray(c, dtype=float)
    degree = c.size - 1
    theta = 2 * np.pi * np.arange(4 * degree + 5) / (4 * degree + 5)
    f = trig_eval(c, theta)
    worst = int(np.argmin(f))
    if f[worst] < -tol:
        raise PreconditionError(f"trigonometric polynomial is negative ({f[worst]:.3e}) at theta = {theta[worst]:.4f}",
                                worst_point=float(theta[worst]), value=float(f[worst]))
    a = _scalar_factor(c.astype(complex))
    if not np.any(a):
        return a

    fine = 2 * np.pi * np.arange(8 * degree + 9) / (8 * degree + 9)
    target = trig_eval(c, fine)
    basis = np.exp(1j * np.outer(fine, np.arange(degree + 1)))
    res = float(np.max(np.abs(np.abs(basis @ a) ** 2 - target)))
    if res > tol:
        a = _polish(c.astype(complex).reshape(-1, 1, 1), a.reshape(-1, 1, 1)).ravel()
        res = float(np.max(np.abs(np.abs(basis @ a) ** 2 - target)))
    if res > tol:
        raise ConvergenceError(f"Fejer-Riesz residual {res:.3e} exceeds tolerance {tol:.1e}",
                               best_residual=res, tol=tol)
    logger.debug(f"Fejer-Riesz factor of degree {degree}: residual {res:.2e}")
    return a


def _scalar_factor(fs: np.ndarray) -> np.ndarray:
    """
    Coefficients q_0..q_L of an analytic q with |q(z)|^2 = sum_s f_s z^s on the
    circle, where f_{-s} = conj(f_s). Roots of q lie in the closed unit disk.
    """
    fs = np.asarray(fs, dtype=complex)
    out = np.zeros(fs.size, dtype=complex)
    scale = float(np.max(np.abs(fs)))
    if scale == 0.0:
        return out

    eff = fs.size - 1
    while eff > 0 and abs(fs[eff]) <= 1e-14 * scale:
        eff -= 1
    if eff == 0:
        out[0] = np.sqrt(max(fs[0].real, 0.0))
        return out

    # z^L f(z) in descending powers
    desc = np.concatenate([fs[eff:0:-1], fs[:1], np.conjugate(fs[1:eff + 1])])
    chosen = _select_roots(np.roots(desc), eff)
    a = np.poly(chosen)[::-1] if chosen.size else np.ones(1, dtype=complex)
    # f_0 = sum_k |q_k|^2
    out[:eff + 1] = a * np.sqrt(max(fs[0].real, 0.0) / float(np.sum(np.abs(a) ** 2)))
    return out


def _select_roots(roots: np.ndarray, count: int) -> np.ndarray:
    """
    Inside roots plus half of every near-circle cluster, placed at the cluster's
    centroid projected onto the circle. Falls back to the `count` smallest moduli.
    """
    mod = np.abs(roots)
    inside = roots[mod < 1 - _CIRCLE_BAND]
    near = roots[(mod >= 1 - _CIRCLE_BAND) & (mod <= 1 / (1 - _CIRCLE_BAND))]
    clusters = _circle_clusters(near)
    if all(g.size % 2 == 0 for g in clusters) and inside.size + near.size // 2 == count:
        on_circle = []
        for g in clusters:
            centre = np.mean(g)
            on_circle.extend([centre / abs(centre)] * (g.size // 2))
        return np.concatenate([inside, np.array(on_circle, dtype=complex)])
    logger.warning(f"Root split ambiguous ({inside.size} inside, {near.size} near circle); using smallest moduli")
    return roots[np.argsort(mod)][:count]


def _circle_clusters(near: np.ndarray) -> List[np.ndarray]:
    """Near-circle roots grouped by angular gaps wider than _CLUSTER_GAP, wrapping at -pi."""
    if near.size == 0:
        return []
    order = np.argsort(np.angle(near))
    near = near[order]
    angles = np.angle(near)
    cuts = np.nonzero(np.diff(angles) > _CLUSTER_GAP)[0] + 1
    groups = np.split(near, cuts)
    if len(groups) > 1 and angles[0] + 2 * np.pi - angles[-1] <= _CLUSTER_GAP:
        groups[0] = np.concatenate([groups.pop(), groups[0]])
    return groups


def sv_bound_check(P: PolyMatrix, bound: float = 1.0, points: int = None) -> float:
    """Largest singular value of P over a unit-circle grid (2*span + 5 points by default)."""
    grid = verification_grid(P.span) if points is None else verification_grid_points(points)
    top = float(np.max(np.linalg.norm(P.eval_grid(grid), ord=2, axis=(1, 2))))
    if top > bound:
        logger.debug(f"Singular value bound {bound} exceeded on the grid: {top:.12f}")
    return top
