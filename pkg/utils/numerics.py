#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
QSP Workbench - Numerical Utilities
Dense complex linear algebra adapters (SVD ranks, polar factors, isometry
completion, principal roots), quadrature and root bracketing, and the seeded
random generators used by every randomized command and test.
"""

import logging
from multiprocessing import Pool
from typing import Any, Callable, Iterable, List, Sequence, Tuple

import numpy as np
import scipy.linalg
import scipy.integrate
import scipy.optimize

from utils.errors import PreconditionError, RangeError

try:
    import config
except ImportError:
    class MockConfig:
        DEFAULT_SEED = 42
        SV_RANK_REL_TOL = 1e-10
        SV_RANK_ABS_TOL = 1e-9
    config = MockConfig()
    logging.warning("config.py not found, using default numerical settings.")

logger = logging.getLogger(__name__)


# --- random generation -------------------------------------------------------

def make_rng(seed: int = None) -> np.random.Generator:
    """Returns a PCG64 generator; identical seeds give identical streams."""
    if seed is None:
        seed = config.DEFAULT_SEED
    return np.random.Generator(np.random.PCG64(seed))


def spawn_rngs(seed: int, count: int) -> List[np.random.Generator]:
    """Independent child generators derived from one seed (fork by reseeding)."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.Generator(np.random.PCG64(child)) for child in children]


def complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    """
    Haar-distributed n x n unitary.

    QR of a complex Gaussian matrix, with the phases of R's diagonal moved
    into Q so the distribution is exactly Haar.
    """
    if n < 1:
        raise PreconditionError(f"unitary dimension must be positive, got {n}", n=n)
    q, r = np.linalg.qr(complex_gaussian(rng, (n, n)))
    d = np.diag(r)
    phases = d / np.where(np.abs(d) > 0, np.abs(d), 1.0)
    return q * phases[np.newaxis, :]


def random_hermitian(rng: np.random.Generator, n: int, norm: float = 1.0) -> np.ndarray:
    h = complex_gaussian(rng, (n, n))
    h = (h + h.conj().T) / 2
    return h * (norm / np.linalg.norm(h, 2))


def random_contraction(rng: np.random.Generator, rows: int, cols: int, norm: float = 0.9) -> np.ndarray:
    """Random rows x cols matrix with spectral norm exactly `norm`."""
    m = complex_gaussian(rng, (rows, cols))
    return m * (norm / np.linalg.norm(m, 2))


def random_projector(rng: np.random.Generator, n: int, rank: int = None) -> np.ndarray:
    if rank is None:
        rank = int(rng.integers(0, n + 1))
    u = random_unitary(rng, n)[:, :rank]
    return u @ u.conj().T


# --- linear algebra adapters -------------------------------------------------

def dagger(m: np.ndarray) -> np.ndarray:
    return np.conjugate(np.swapaxes(m, -1, -2))


def is_unitary(m: np.ndarray, tol: float = 1e-10) -> bool:
    m = np.atleast_2d(m)
    if m.shape[0] != m.shape[1]:
        return False
    return np.linalg.norm(m.conj().T @ m - np.eye(m.shape[0]), 2) <= tol


def require_unitary(m: np.ndarray, tol: float = 1e-10, name: str = "U") -> np.ndarray:
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    if m.shape[0] != m.shape[1]:
        raise PreconditionError(f"{name} must be square, got shape {m.shape}", shape=list(m.shape))
    defect = float(np.linalg.norm(m.conj().T @ m - np.eye(m.shape[0]), 2))
    if defect > tol:
        raise PreconditionError(f"{name} is not unitary (defect {defect:.3e})", defect=defect)
    return m


def numerical_rank(s: np.ndarray, rel_tol: float = None, abs_tol: float = None) -> int:
    """Number of singular values above max(rel_tol * s_max, abs_tol)."""
    rel_tol = config.SV_RANK_REL_TOL if rel_tol is None else rel_tol
    abs_tol = config.SV_RANK_ABS_TOL if abs_tol is None else abs_tol
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > max(rel_tol * s[0], abs_tol)))


def column_space_projector(m: np.ndarray, rel_tol: float = None, abs_tol: float = None) -> Tuple[np.ndarray, int]:
    """Orthogonal projector onto the numerical column space of m, and its rank."""
    u, s, _ = scipy.linalg.svd(m, full_matrices=False)
    rank = numerical_rank(s, rel_tol, abs_tol)
    basis = u[:, :rank]
    return basis @ basis.conj().T, rank


def polar_unitary(m: np.ndarray, strict: bool = True) -> np.ndarray:
    """
    Unitary (or isometric) polar factor of m, the nearest matrix with
    orthonormal columns.

    Args:
        m: square or tall matrix.
        strict: raise on numerically singular input instead of returning a
            partial isometry.
    """
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    if strict:
        s = scipy.linalg.svdvals(m)
        if s.size == 0 or s[-1] < 1e-12 * max(1.0, s[0]):
            raise PreconditionError("polar factor of a singular matrix is not unique",
                                    smallest_singular_value=float(s[-1]) if s.size else 0.0)
    u, _ = scipy.linalg.polar(m, side='right')
    return u


def complete_isometry(s: np.ndarray) -> np.ndarray:
    """Extends an n x k isometry to an n x n unitary whose first k columns are s."""
    s = np.atleast_2d(np.asarray(s, dtype=complex))
    n, k = s.shape
    if k == n:
        return s
    complement = scipy.linalg.null_space(s.conj().T)
    if complement.shape[1] != n - k:
        # s was not of full column rank; fall back to a polar clean-up first
        s = polar_unitary(s, strict=False)
        complement = scipy.linalg.null_space(s.conj().T, rcond=1e-8)[:, :n - k]
    if complement.shape[1] < n - k:
        raise PreconditionError(f"cannot complete a {n}x{k} isometry: complement has {complement.shape[1]} "
                                f"of {n - k} columns", rows=n, cols=k, found=int(complement.shape[1]))
    return np.hstack([s, complement])


def psd_sqrt(m: np.ndarray) -> np.ndarray:
    """Hermitian square root of a positive semidefinite matrix (negative eigenvalues clipped)."""
    evals, evecs = scipy.linalg.eigh((m + m.conj().T) / 2)
    return (evecs * np.sqrt(np.clip(evals, 0.0, None))) @ evecs.conj().T


def principal_sqrt_unitary(u: np.ndarray) -> np.ndarray:
    """
    Principal square root of a unitary matrix.

    Uses the complex Schur form, which is diagonal for normal matrices, and
    takes the principal branch on each eigenvalue.
    """
    u = np.atleast_2d(np.asarray(u, dtype=complex))
    t, z = scipy.linalg.schur(u, output='complex')
    roots = np.sqrt(np.diag(t))
    return (z * roots[np.newaxis, :]) @ z.conj().T


def unit_circle(points: int) -> np.ndarray:
    return np.exp(2j * np.pi * np.arange(points) / points)


def chebyshev_nodes(count: int) -> np.ndarray:
    """Chebyshev points of the first kind on [-1, 1]."""
    return np.polynomial.chebyshev.chebpts1(count)


# --- quadrature and root bracketing -----------------------------------------

def simpson(f: Callable[[np.ndarray], np.ndarray], a: float, b: float, n: int) -> float:
    """Composite Simpson rule with n (even) subintervals; f must accept arrays."""
    if n <= 0 or n % 2:
        raise PreconditionError(f"Simpson rule needs an even number of intervals, got {n}", n=n)
    x = np.linspace(a, b, n + 1)
    return float(scipy.integrate.simpson(f(x), x=x))


def bisect(f: Callable[[float], float], lo: float, hi: float, tol: float) -> float:
    """Root of f in [lo, hi] to absolute width tol; requires f(lo) * f(hi) <= 0."""
    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if f_lo * f_hi > 0:
        raise RangeError(f"root not bracketed in [{lo}, {hi}]", lo=lo, hi=hi, f_lo=f_lo, f_hi=f_hi)
    return float(scipy.optimize.bisect(f, lo, hi, xtol=tol, maxiter=200))


# --- worker pool ----------------------------------------------------------------

def parallel_starmap(func: Callable[..., Any], args: Iterable[Sequence[Any]], jobs: int = 1) -> List[Any]:
    """
    Applies func to every argument tuple, in input order. With jobs > 1 the
    tuples are spread over a process pool; func must then be picklable.
    """
    args = [tuple(a) for a in args]
    if jobs <= 1 or len(args) <= 1:
        return [func(*a) for a in args]
    logger.info(f"Dispatching {len(args)} sweep points to {jobs} workers")
    with Pool(min(jobs, len(args))) as pool:
        return pool.starmap(func, args)
