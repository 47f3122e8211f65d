#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
QSP Workbench - Polynomial Matrix Module
Matrix-valued (Laurent) polynomials in one complex variable, Hermitian Laurent
polynomials on the unit circle, and Chebyshev-basis tools for real polynomials
on [0, 1].
"""

import logging
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.special
from cachetools import LRUCache, cached
from numpy.polynomial import Chebyshev, Polynomial

from utils.errors import DomainError, ShapeError

try:
    import config
except ImportError:
    class MockConfig:
        ZERO_TRIM_REL = 1e-13
        BASIS_CACHE_SIZE = 256
    config = MockConfig()
    logging.warning("config.py not found, using default polynomial settings.")

logger = logging.getLogger(__name__)


class PolyMatrix:
    """
    Matrix polynomial P(z) = sum_{l=lo}^{hi} C_l z^l with rows x cols coefficients.

    Coefficients are stored densely as an array of shape (hi - lo + 1, rows, cols).
    Leading (highest power) coefficients that are zero relative to the largest
    coefficient are trimmed on construction.
    """

    def __init__(self, coeffs, lo: int = 0, trim: bool = True):
        arr = np.array(coeffs, dtype=complex)
        if arr.ndim == 2:
            arr = arr[np.newaxis]
        elif arr.ndim == 1:
            arr = arr[:, np.newaxis, np.newaxis]
        if arr.ndim != 3 or arr.shape[0] == 0 or arr.shape[1] == 0 or arr.shape[2] == 0:
            raise ShapeError(f"coefficients must have shape (powers, rows, cols), got {arr.shape}")
        if trim:
            arr = _trim_leading(arr)
        self._coeffs = arr
        self._coeffs.setflags(write=False)
        self.lo = int(lo)

    # --- shape and degree ---------------------------------------------------

    @property
    def coeffs(self) -> np.ndarray:
        return self._coeffs

    @property
    def rows(self) -> int:
        return self._coeffs.shape[1]

    @property
    def cols(self) -> int:
        return self._coeffs.shape[2]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.rows, self.cols

    @property
    def hi(self) -> int:
        return self.lo + self._coeffs.shape[0] - 1

    @property
    def span(self) -> int:
        return self.hi - self.lo

    @property
    def degree(self) -> int:
        return self.hi

    def coeff(self, power: int) -> np.ndarray:
        if self.lo <= power <= self.hi:
            return self._coeffs[power - self.lo]
        return np.zeros((self.rows, self.cols), dtype=complex)

    def padded(self, lo: int, hi: int) -> np.ndarray:
        """Coefficient array covering powers lo..hi (zero filled)."""
        if lo > self.lo or hi < self.hi:
            raise ShapeError(f"padding range [{lo}, {hi}] does not cover [{self.lo}, {self.hi}]")
        out = np.zeros((hi - lo + 1, self.rows, self.cols), dtype=complex)
        out[self.lo - lo:self.hi - lo + 1] = self._coeffs
        return out

    def max_abs(self) -> float:
        return float(np.max(np.abs(self._coeffs)))

    def is_zero(self) -> bool:
        return self.max_abs() == 0.0

    # --- constructors -------------------------------------------------------

    @classmethod
    def constant(cls, m) -> 'PolyMatrix':
        return cls(np.atleast_2d(np.asarray(m, dtype=complex))[np.newaxis])

    @classmethod
    def identity(cls, n: int) -> 'PolyMatrix':
        return cls.constant(np.eye(n))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> 'PolyMatrix':
        return cls(np.zeros((1, rows, cols)))

    @classmethod
    def monomial(cls, m, power: int) -> 'PolyMatrix':
        return cls(np.atleast_2d(np.asarray(m, dtype=complex))[np.newaxis], lo=power)

    @classmethod
    def scalar(cls, coeffs: Sequence[complex], lo: int = 0) -> 'PolyMatrix':
        """1 x 1 polynomial from a flat coefficient list ordered lo..hi."""
        return cls(np.asarray(coeffs, dtype=complex).reshape(-1, 1, 1), lo=lo)

    # --- evaluation ---------------------------------------------------------

    def eval(self, z: complex) -> np.ndarray:
        """Returns sum_l C_l z^l (Horner in z, then the z^lo factor)."""
        if z == 0 and self.lo < 0:
            raise DomainError("cannot evaluate a Laurent polynomial with negative powers at z = 0",
                              lo=self.lo)
        acc = self._coeffs[-1].copy()
        for c in self._coeffs[-2::-1]:
            acc = acc * z + c
        return acc * (z ** self.lo) if self.lo else acc

    def eval_grid(self, zs: Iterable[complex]) -> np.ndarray:
        """Evaluates at many points at once; returns shape (len(zs), rows, cols)."""
        zs = np.atleast_1d(np.asarray(zs, dtype=complex))
        if self.lo < 0 and np.any(zs == 0):
            raise DomainError("grid contains z = 0 for a Laurent polynomial", lo=self.lo)
        powers = np.arange(self.lo, self.hi + 1)
        vander = zs[:, np.newaxis] ** powers[np.newaxis, :]
        return np.einsum('mk,kij->mij', vander, self._coeffs)

    def eval_operator(self, u: np.ndarray) -> np.ndarray:
        """
        Block matrix whose (j, k) block is P_jk(U) = sum_l (C_l)_jk U^l.

        Negative powers use the matrix inverse of U.
        """
        u = np.atleast_2d(np.asarray(u, dtype=complex))
        d = u.shape[0]
        out = np.zeros((self.rows * d, self.cols * d), dtype=complex)
        for offset, c in enumerate(self._coeffs):
            out += np.kron(c, np.linalg.matrix_power(u, self.lo + offset))
        return out

    def __call__(self, z: complex) -> np.ndarray:
        return self.eval(z)

    # --- algebra ------------------------------------------------------------

    def adjoint_on_circle(self) -> 'PolyMatrix':
        """P^dagger(z) = sum_l C_l^dagger z^{-l}; agrees with eval(P, z)^dagger on |z| = 1."""
        flipped = np.conjugate(np.transpose(self._coeffs[::-1], (0, 2, 1)))
        return PolyMatrix(flipped, lo=-self.hi, trim=False)

    def transpose(self) -> 'PolyMatrix':
        return PolyMatrix(np.transpose(self._coeffs, (0, 2, 1)), lo=self.lo, trim=False)

    def conj(self) -> 'PolyMatrix':
        """Conjugates coefficients only (not the variable)."""
        return PolyMatrix(np.conjugate(self._coeffs), lo=self.lo, trim=False)

    def shift(self, k: int) -> 'PolyMatrix':
        """Multiplies by z^k."""
        return PolyMatrix(self._coeffs, lo=self.lo + k, trim=False)

    def scale(self, factor: complex) -> 'PolyMatrix':
        return PolyMatrix(self._coeffs * factor, lo=self.lo)

    def mul(self, other: 'PolyMatrix') -> 'PolyMatrix':
        """Coefficient convolution."""
        if self.cols != other.rows:
            raise ShapeError(f"cannot multiply {self.shape} by {other.shape}")
        ka, kb = self._coeffs.shape[0], other._coeffs.shape[0]
        out = np.zeros((ka + kb - 1, self.rows, other.cols), dtype=complex)
        for i, a in enumerate(self._coeffs):
            out[i:i + kb] += np.einsum('ij,kjl->kil', a, other._coeffs)
        return PolyMatrix(out, lo=self.lo + other.lo)

    def add(self, other: 'PolyMatrix') -> 'PolyMatrix':
        if self.shape != other.shape:
            raise ShapeError(f"cannot add {self.shape} and {other.shape}")
        lo, hi = min(self.lo, other.lo), max(self.hi, other.hi)
        return PolyMatrix(self.padded(lo, hi) + other.padded(lo, hi), lo=lo)

    def sub(self, other: 'PolyMatrix') -> 'PolyMatrix':
        return self.add(other.scale(-1.0))

    def block(self, rows: slice, cols: slice) -> 'PolyMatrix':
        return PolyMatrix(self._coeffs[:, rows, cols], lo=self.lo)

    def coeff_distance(self, other: 'PolyMatrix') -> float:
        """Largest entrywise coefficient difference."""
        if self.shape != other.shape:
            raise ShapeError(f"cannot compare {self.shape} and {other.shape}")
        lo, hi = min(self.lo, other.lo), max(self.hi, other.hi)
        return float(np.max(np.abs(self.padded(lo, hi) - other.padded(lo, hi))))

    __matmul__ = mul
    __add__ = add
    __sub__ = sub

    def __mul__(self, factor: complex) -> 'PolyMatrix':
        return self.scale(factor)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"PolyMatrix(rows={self.rows}, cols={self.cols}, lo={self.lo}, hi={self.hi})"


def vstack(polys: Sequence[PolyMatrix]) -> PolyMatrix:
    """Stacks polynomial matrices vertically, aligning powers."""
    if len({p.cols for p in polys}) != 1:
        raise ShapeError("vstack needs equal column counts")
    lo, hi = min(p.lo for p in polys), max(p.hi for p in polys)
    return PolyMatrix(np.concatenate([p.padded(lo, hi) for p in polys], axis=1), lo=lo)


def hstack(polys: Sequence[PolyMatrix]) -> PolyMatrix:
    if len({p.rows for p in polys}) != 1:
        raise ShapeError("hstack needs equal row counts")
    lo, hi = min(p.lo for p in polys), max(p.hi for p in polys)
    return PolyMatrix(np.concatenate([p.padded(lo, hi) for p in polys], axis=2), lo=lo)


def _trim_leading(arr: np.ndarray) -> np.ndarray:
    scale = np.max(np.abs(arr))
    if scale == 0.0:
        return arr[:1] * 0
    threshold = config.ZERO_TRIM_REL * scale
    keep = arr.shape[0]
    while keep > 1 and np.max(np.abs(arr[keep - 1])) < threshold:
        keep -= 1
    return arr[:keep]


class HermLaurent(PolyMatrix):
    """
    Laurent polynomial F with span [-L, L] and F_{-s} = F_s^dagger, so F(z) is
    Hermitian on the unit circle.
    """

    def __init__(self, coeffs, half_span: int):
        arr = np.array(coeffs, dtype=complex)
        if arr.ndim != 3 or arr.shape[0] != 2 * half_span + 1 or arr.shape[1] != arr.shape[2]:
            raise ShapeError(f"HermLaurent needs shape (2L+1, n, n), got {arr.shape}")
        # enforce the symmetry exactly
        sym = (arr + np.conjugate(np.transpose(arr[::-1], (0, 2, 1)))) / 2
        super().__init__(sym, lo=-half_span, trim=False)

    @property
    def half_span(self) -> int:
        return -self.lo

    def positive_coeffs(self) -> np.ndarray:
        """F_0, F_1, ..., F_L."""
        return self.coeffs[self.half_span:]

    @classmethod
    def from_poly(cls, p: PolyMatrix) -> 'HermLaurent':
        half = max(-p.lo, p.hi, 0)
        return cls(p.padded(-half, half), half)

    def max_hermitian_defect(self, points: int = 101) -> float:
        vals = self.eval_grid(verification_grid_points(points))
        return float(np.max(np.abs(vals - np.conjugate(np.transpose(vals, (0, 2, 1))))))


def gram_defect(p: PolyMatrix) -> HermLaurent:
    """I - P^dagger(z) P(z) with span [-L, L], L the degree span of P."""
    prod = p.adjoint_on_circle().mul(p)
    half = p.span
    coeffs = -prod.padded(-half, half)
    coeffs[half] += np.eye(p.cols)
    return HermLaurent(coeffs, half)


def verification_grid_size(span: int) -> int:
    return 2 * span + 5


def verification_grid(span: int) -> np.ndarray:
    """2*span + 5 equally spaced points on the unit circle."""
    return verification_grid_points(verification_grid_size(span))


def verification_grid_points(points: int) -> np.ndarray:
    return np.exp(2j * np.pi * np.arange(points) / points)


# --- Chebyshev tools on [0, 1] ----------------------------------------------

UNIT_DOMAIN = [0.0, 1.0]


class ChebPoly:
    """
    Real polynomial on [0, 1] in the shifted Chebyshev basis T_k(2x - 1).

    Thin wrapper around numpy's Chebyshev series with domain [0, 1]; evaluation
    uses Clenshaw's backward recurrence.
    """

    def __init__(self, coeffs: Sequence[float]):
        coeffs = np.atleast_1d(np.asarray(coeffs, dtype=float))
        if not np.all(np.isfinite(coeffs)):
            raise DomainError("Chebyshev coefficients must be finite")
        self.series = Chebyshev(coeffs, domain=UNIT_DOMAIN)

    @property
    def coeffs(self) -> np.ndarray:
        return self.series.coef

    @property
    def degree(self) -> int:
        return len(self.series.coef) - 1

    def __call__(self, x):
        return self.series(x)

    def __add__(self, other: 'ChebPoly') -> 'ChebPoly':
        return ChebPoly((self.series + other.series).coef)

    def __sub__(self, other: 'ChebPoly') -> 'ChebPoly':
        return ChebPoly((self.series - other.series).coef)

    def scale(self, factor: float) -> 'ChebPoly':
        return ChebPoly(self.coeffs * factor)

    def integral(self, a: float = 0.0, b: float = 1.0) -> float:
        anti = self.series.integ()
        return float(anti(b) - anti(a))

    def __repr__(self) -> str:
        return f"ChebPoly(degree={self.degree})"


def cheb_from_monomial(c: Sequence[float]) -> ChebPoly:
    """Monomial coefficients of x (ascending) to the T_k(2x - 1) basis."""
    series = Polynomial(np.asarray(c, dtype=float)).convert(kind=Chebyshev, domain=UNIT_DOMAIN)
    return ChebPoly(series.coef)


def cheb_to_monomial(p: ChebPoly) -> np.ndarray:
    return p.series.convert(kind=Polynomial, domain=[-1.0, 1.0], window=[-1.0, 1.0]).coef


def cheb_integral(p: ChebPoly, a: float = 0.0, b: float = 1.0) -> float:
    return p.integral(a, b)


def real_poly_from_chebyshev(c: Sequence[float]) -> np.ndarray:
    """Monomial coefficients in u of sum_k c_k T_k(u) on [-1, 1]."""
    return Chebyshev(np.asarray(c, dtype=float)).convert(kind=Polynomial).coef


def cheb_eval(p: ChebPoly, x):
    return p(x)


def cheb_mul(p: ChebPoly, q: ChebPoly) -> ChebPoly:
    return ChebPoly((p.series * q.series).coef)


def cheb_shift_parity(p: ChebPoly) -> Chebyshev:
    """
    Re-expresses p(x) in c with x = c^2: T_k(2c^2 - 1) = T_2k(c), giving an even
    Chebyshev series on [-1, 1].
    """
    coef = np.zeros(2 * p.degree + 1)
    coef[::2] = p.coeffs
    return Chebyshev(coef)


def _chebyshev_integrals(count: int) -> np.ndarray:
    """I_d = integral of T_d over [-1, 1] for d = 0..count-1."""
    d = np.arange(count)
    out = np.zeros(count)
    even = d % 2 == 0
    out[even] = 2.0 / (1.0 - d[even].astype(float) ** 2)
    return out


def cheb_moments(degree: int, power: int) -> np.ndarray:
    """
    Integral over [0, 1] of x^power T_d(2x - 1) for d = 0..degree (power 0, 1 or 2).

    Exact, through u T_d = (T_{d+1} + T_{|d-1|}) / 2.
    """
    d = np.arange(degree + 1)
    i = _chebyshev_integrals(degree + 3)
    m0 = i[d]
    if power == 0:
        return m0 / 2
    j1 = (i[d + 1] + i[np.abs(d - 1)]) / 2
    if power == 1:
        return (j1 + m0) / 4
    if power == 2:
        j2 = (i[d + 2] + 2 * i[d] + i[np.abs(d - 2)]) / 4
        return (j2 + 2 * j1 + m0) / 8
    raise DomainError(f"moments are available for powers 0, 1, 2; got {power}", power=power)


def _chebyshev_antiderivative(u: np.ndarray, degree: int) -> np.ndarray:
    """A_d(u) with A_d' = T_d, for d = 0..degree; shape (len(u), degree + 1)."""
    u = np.clip(np.asarray(u, dtype=float), -1.0, 1.0)
    t = np.cos(np.arange(degree + 2)[np.newaxis, :] * np.arccos(u)[:, np.newaxis])
    out = np.empty((u.size, degree + 1))
    out[:, 0] = t[:, 1]
    if degree >= 1:
        out[:, 1] = t[:, 2] / 4
    if degree >= 2:
        d = np.arange(2, degree + 1)
        out[:, 2:] = t[:, d + 1] / (2 * (d + 1)) - t[:, d - 1] / (2 * (d - 1))
    return out


def cheb_window_integrals(a, b, degree: int) -> np.ndarray:
    """
    Integral over [a_i, b_i] of T_d(2x - 1) for every window i and d = 0..degree.

    Windows are clamped to [0, 1]; empty windows give zero rows.
    """
    a = np.clip(np.atleast_1d(np.asarray(a, dtype=float)), 0.0, 1.0)
    b = np.clip(np.atleast_1d(np.asarray(b, dtype=float)), 0.0, 1.0)
    b = np.maximum(a, b)
    upper = _chebyshev_antiderivative(2 * b - 1, degree)
    lower = _chebyshev_antiderivative(2 * a - 1, degree)
    return (upper - lower) / 2


@cached(cache=LRUCache(maxsize=config.BASIS_CACHE_SIZE))
def chebyshev_t_monomial(n: int) -> Tuple[float, ...]:
    """Monomial coefficients of T_n on [-1, 1]."""
    return tuple(Chebyshev.basis(n).convert(kind=Polynomial).coef)


@cached(cache=LRUCache(maxsize=config.BASIS_CACHE_SIZE))
def chebyshev_u_monomial(n: int) -> Tuple[float, ...]:
    """Monomial coefficients of the second-kind U_n = T_{n+1}' / (n + 1)."""
    if n < 0:
        return (0.0,)
    series = Chebyshev.basis(n + 1).deriv() / (n + 1)
    return tuple(series.convert(kind=Polynomial).coef)


def half_angle_split(q: np.ndarray, degree: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Splits e^{-i L theta/2} sum_s q_s e^{i s theta} into P1(cos(theta/2)) +
    sin(theta/2) Q1(cos(theta/2)).

    q has shape (L + 1, rows, cols). With m = 2s - L, e^{i m u} = T_|m|(cos u) +
    i sign(m) sin u U_{|m|-1}(cos u). Returns monomial coefficient arrays of
    shapes (L + 1, rows, cols) and (max(L, 1), rows, cols).
    """
    q = np.asarray(q, dtype=complex)
    rows, cols = q.shape[1], q.shape[2]
    p1 = np.zeros((degree + 1, rows, cols), dtype=complex)
    q1 = np.zeros((max(degree, 1), rows, cols), dtype=complex)
    for s in range(min(q.shape[0], degree + 1)):
        m = 2 * s - degree
        t = np.asarray(chebyshev_t_monomial(abs(m)))
        p1[:t.size] += t[:, np.newaxis, np.newaxis] * q[s]
        if m != 0:
            u = np.asarray(chebyshev_u_monomial(abs(m) - 1))
            q1[:u.size] += (1j * np.sign(m)) * u[:, np.newaxis, np.newaxis] * q[s]
    return p1, q1


def cos_half_angle_expand(p: np.ndarray, degree: int) -> np.ndarray:
    """
    Coefficients in w = e^{i theta} of e^{i L theta/2} P(cos(theta/2)), for P
    given by monomial coefficients p of shape (K, rows, cols) with parity L.

    cos(theta/2)^k e^{i L theta/2} = 2^-k sum_j C(k, j) w^{(L + k)/2 - j}.
    """
    p = np.asarray(p, dtype=complex)
    out = np.zeros((degree + 1,) + p.shape[1:], dtype=complex)
    for k in range(min(p.shape[0], degree + 1)):
        if not np.any(p[k]):
            continue
        if (degree + k) % 2:
            raise DomainError(f"coefficient of x^{k} breaks parity {degree % 2}", power=k)
        top = (degree + k) // 2
        weights = scipy.special.comb(k, np.arange(k + 1), exact=False) / 2.0 ** k
        for j, wgt in enumerate(weights):
            out[top - j] += wgt * p[k]
    return out


def poly_parity(coeffs: np.ndarray, tol: float = 1e-12) -> Optional[str]:
    """'even', 'odd' or None for a monomial coefficient array (axis 0 = power)."""
    coeffs = np.asarray(coeffs)
    scale = max(float(np.max(np.abs(coeffs))), 1.0) if coeffs.size else 1.0
    odd_part = np.max(np.abs(coeffs[1::2])) if coeffs.shape[0] > 1 else 0.0
    even_part = np.max(np.abs(coeffs[0::2]))
    if odd_part <= tol * scale:
        return 'even'
    if even_part <= tol * scale:
        return 'odd'
    return None


def monomial_powers(points: np.ndarray, count: int) -> np.ndarray:
    """Vandermonde rows [1, x, x^2, ...] for real or complex points."""
    return np.asarray(points)[:, np.newaxis] ** np.arange(count)[np.newaxis, :]


def eval_monomial_matrix(coeffs: np.ndarray, x) -> np.ndarray:
    """Evaluates a matrix polynomial in monomial form at one point x."""
    coeffs = np.asarray(coeffs)
    acc = np.array(coeffs[-1], dtype=complex)
    for c in coeffs[-2::-1]:
        acc = acc * x + c
    return acc


def stack_coefficients(parts: List[np.ndarray]) -> np.ndarray:
    """Stacks monomial coefficient arrays vertically (row axis) after zero padding."""
    length = max(part.shape[0] for part in parts)
    padded = []
    for part in parts:
        extra = np.zeros((length - part.shape[0],) + part.shape[1:], dtype=complex)
        padded.append(np.concatenate([np.asarray(part, dtype=complex), extra], axis=0))
    return np.concatenate(padded, axis=1)
