#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
QSP Workbench - Bivariate Signal Processing Module
Two-variable Laurent polynomials g(w, v) realized as products of a row block
in w and a column block in v, linear combinations of block encodings, and the
pipeline that approximates a bivariate power series f(x, y) by such a g.

The approximation writes x = (2/pi) arcsin(sin(pi x / 2)), expands powers of
the arcsine series in sin^l(pi x / 2), and replaces each sin^l by its
truncated Fourier series in w = e^{i pi x / 2}.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np
import scipy.linalg
import scipy.stats
from typing_extensions import Literal

from modules.qspu import forward_eval_laurent, synthesize_laurent
from utils.errors import ConvergenceError, PreconditionError, ShapeError
from utils.numerics import complete_isometry, principal_sqrt_unitary, require_unitary
from utils.polymat import PolyMatrix
from utils.storage import decode_matrix, encode_matrix

try:
    import config
except ImportError:
    class MockConfig:
        SUP_GRID_POINTS = 1024
        DEFAULT_TOL = 1e-8
    config = MockConfig()
    logging.warning("config.py not found, using default bivariate settings.")

logger = logging.getLogger(__name__)

Convention = Literal['half', 'full']

# Relative safety margin applied to grid sup norms.
SUP_MARGIN = 1e-10
# Points per axis of the (x, y) grid used to check an approximation.
APPROX_GRID_POINTS = 41
MAX_ADAPT_STEPS = 12


@dataclass
class BivariatePoly:
    """g(w, v) = sum_{j,k} coeffs[j - lo_w, k - lo_v] w^j v^k."""
    coeffs: np.ndarray
    lo_w: int = 0
    lo_v: int = 0

    def __post_init__(self):
        self.coeffs = np.atleast_2d(np.asarray(self.coeffs, dtype=complex))
        if self.coeffs.ndim != 2:
            raise ShapeError(f"bivariate coefficients must be a matrix, got shape {self.coeffs.shape}")

    @property
    def hi_w(self) -> int:
        return self.lo_w + self.coeffs.shape[0] - 1

    @property
    def hi_v(self) -> int:
        return self.lo_v + self.coeffs.shape[1] - 1

    @property
    def one_norm(self) -> float:
        return float(np.sum(np.abs(self.coeffs)))

    def is_zero(self) -> bool:
        return not np.any(self.coeffs)

    def evaluate(self, w, v):
        """Pointwise Laurent evaluation for scalars or broadcastable arrays."""
        w = np.asarray(w, dtype=complex)
        v = np.asarray(v, dtype=complex)
        pw = np.arange(self.lo_w, self.hi_w + 1)
        pv = np.arange(self.lo_v, self.hi_v + 1)
        wpow = w[..., np.newaxis] ** pw
        vpow = v[..., np.newaxis] ** pv
        return np.einsum('...j,jk,...k->...', wpow, self.coeffs, vpow)

    def evaluate_xy(self, x, y, convention: Convention = 'half'):
        """
        Evaluates at angles: 'half' uses w = e^{i pi x/2}; 'full' uses
        w = e^{i pi x} and feeds its principal square root.
        """
        if convention not in ('half', 'full'):
            raise PreconditionError(f"unknown angle convention {convention!r}")
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if convention == 'half':
            return self.evaluate(np.exp(0.5j * np.pi * x), np.exp(0.5j * np.pi * y))
        return self.evaluate(np.sqrt(np.exp(1j * np.pi * x)), np.sqrt(np.exp(1j * np.pi * y)))

    def evaluate_operator(self, w: np.ndarray, v: np.ndarray) -> np.ndarray:
        """sum g_jk w^j v^k with w-powers to the left."""
        w = np.atleast_2d(np.asarray(w, dtype=complex))
        v = np.atleast_2d(np.asarray(v, dtype=complex))
        out = np.zeros_like(w)
        for a in range(self.coeffs.shape[0]):
            wj = np.linalg.matrix_power(w, self.lo_w + a)
            for b in range(self.coeffs.shape[1]):
                if self.coeffs[a, b] != 0:
                    out += self.coeffs[a, b] * wj @ np.linalg.matrix_power(v, self.lo_v + b)
        return out

    def to_dict(self) -> Dict[str, Any]:
        return {"lo_w": self.lo_w, "lo_v": self.lo_v, "coeffs": encode_matrix(self.coeffs)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'BivariatePoly':
        try:
            return cls(decode_matrix(data["coeffs"]), int(data.get("lo_w", 0)), int(data.get("lo_v", 0)))
        except KeyError as e:
            raise PreconditionError(f"bivariate polynomial missing field {e}")


@dataclass
class ArcsinSeries:
    """Coefficients b_0..b_Lmax of x^k in powers of sin(pi x / 2)."""
    k: int
    coeffs: np.ndarray

    @property
    def partial_sum(self) -> float:
        return float(np.sum(self.coeffs))


@dataclass
class ProductTerm:
    p: PolyMatrix  # 1 x 1 in w, sup |p| <= 1 on the circle
    q: PolyMatrix  # 1 x 1 monomial in v
    alpha: float


@dataclass
class ProductDecomposition:
    """g / scale = sum_k (alpha_k / scale) p_k(w) q_k(v)."""
    terms: List[ProductTerm] = field(default_factory=list)
    scale: float = 0.0

    @property
    def empty(self) -> bool:
        return not self.terms

    def weights(self) -> np.ndarray:
        if self.empty:
            return np.zeros(0)
        return np.array([t.alpha for t in self.terms]) / self.scale

    def reconstruct(self, w, v):
        """sum_k (alpha_k / scale) p_k(w) q_k(v) at scalar or array points."""
        w = np.asarray(w, dtype=complex)
        v = np.asarray(v, dtype=complex)
        out = np.zeros(np.broadcast(w, v).shape, dtype=complex)
        for weight, term in zip(self.weights(), self.terms):
            pw = _eval_scalar_poly(term.p, w)
            qv = _eval_scalar_poly(term.q, v)
            out = out + weight * pw * qv
        return out


def _eval_scalar_poly(p: PolyMatrix, z):
    z = np.asarray(z, dtype=complex)
    powers = np.arange(p.lo, p.hi + 1)
    return (z[..., np.newaxis] ** powers) @ p.coeffs[:, 0, 0]


# --- analytic expansion -------------------------------------------------------

def arcsin_coeffs(k: int, lmax: int) -> ArcsinSeries:
    """
    b^(k): x^k = sum_l b^(k)_l sin^l(pi x / 2) for |x| <= 1, truncated at lmax.

    b^(1)_{2l+1} = C(2l, l) 4^{-l} / (2l + 1) * 2/pi, and higher powers are
    repeated truncated convolutions. All entries are nonnegative.
    """
    if k < 0 or lmax < k:
        raise PreconditionError(f"need 0 <= k <= lmax, got k = {k}, lmax = {lmax}", k=k, lmax=lmax)
    base = np.zeros(lmax + 1)
    central = 1.0
    for l in range((lmax - 1) // 2 + 1):
        if l > 0:
            central *= (2 * l - 1) / (2 * l)
        base[2 * l + 1] = central / (2 * l + 1) * 2 / np.pi
    series = np.zeros(lmax + 1)
    series[0] = 1.0
    for _ in range(k):
        series = np.convolve(series, base)[:lmax + 1]
    return ArcsinSeries(k=k, coeffs=series)


def sin_power_fourier(power: int, d: int) -> np.ndarray:
    """
    Fourier coefficients of sin^power(z) in e^{isz}, |s| <= d, indexed s + d.

    The coefficient of e^{isz} is i^power (-1)^{(s+power)/2} 2^{-power} C(power, (s+power)/2).
    """
    if power < 0 or d < 0:
        raise PreconditionError(f"need nonnegative power and truncation, got {power}, {d}")
    out = np.zeros(2 * d + 1, dtype=complex)
    s = np.arange(-min(d, power), min(d, power) + 1)
    s = s[(s + power) % 2 == 0]
    j = (s + power) // 2
    out[s + d] = (1j ** power) * (-1.0) ** j * scipy.stats.binom.pmf(j, power, 0.5)
    return out


def sin_power_tail_bound(power: int, d: int) -> float:
    """
    Sup-norm bound 2 exp(-d^2 / (2 power)) on the dropped Fourier modes |s| > d.

    Modes are s = 2j - power with j binomial, so |s| > d means |j - power/2| > d/2;
    Hoeffding on j gives this exponent, not the tighter-looking 2 exp(-2 d^2 / power)
    that counts the deviation of j itself.
    """
    if power == 0:
        return 0.0
    return float(min(1.0, 2.0 * np.exp(-d * d / (2.0 * power))))


def approximation_parameters(norm1: float, delta: float, eps: float) -> Tuple[int, int]:
    """L = ceil(log(5 ||f||_1 / eps) / (2 delta^2)) and d = ceil(delta L / sqrt 2)."""
    if not 0.0 < delta < 1.0:
        raise PreconditionError(f"delta must lie in (0, 1), got {delta}", delta=delta)
    if not 0.0 < eps < 1.0:
        raise PreconditionError(f"eps must lie in (0, 1), got {eps}", eps=eps)
    big_l = max(1, int(np.ceil(np.log(max(5.0 * norm1 / eps, 1.0)) / (2.0 * delta ** 2))))
    d = max(1, int(np.ceil(delta * big_l / np.sqrt(2.0))))
    return big_l, d


def _power_expansions(max_power: int, big_l: int, d: int) -> np.ndarray:
    """Row j: Fourier coefficients (in w, powers -d..d) of the truncated expansion of x^j."""
    sines = np.array([sin_power_fourier(l, d) for l in range(big_l + 1)])
    rows = np.zeros((max_power + 1, 2 * d + 1), dtype=complex)
    for j in range(max_power + 1):
        rows[j] = arcsin_coeffs(j, max(big_l, j)).coeffs[:big_l + 1] @ sines
    return rows


def _build_approximation(f: BivariatePoly, big_l: int, d: int) -> BivariatePoly:
    expansions = _power_expansions(max(f.coeffs.shape) - 1, big_l, d)
    g = np.zeros((2 * d + 1, 2 * d + 1), dtype=complex)
    for j, k in zip(*np.nonzero(f.coeffs)):
        g += f.coeffs[j, k] * np.outer(expansions[j], expansions[k])
    return BivariatePoly(g, lo_w=-d, lo_v=-d)


def approximation_error(f: BivariatePoly, g: BivariatePoly, delta: float,
                        points: int = APPROX_GRID_POINTS) -> float:
    """Grid sup of |f(x, y) - g(e^{i pi x/2}, e^{i pi y/2})| on [-1 + delta, 1 - delta]^2."""
    axis = np.linspace(-1.0 + delta, 1.0 - delta, points)
    xx, yy = np.meshgrid(axis, axis, indexing='ij')
    exact = f.evaluate(xx.astype(complex), yy.astype(complex))
    approx = g.evaluate_xy(xx, yy, 'half')
    return float(np.max(np.abs(exact - approx)))


def approximate_bivariate(f: BivariatePoly, delta: float, eps: float) -> Tuple[BivariatePoly, int, int]:
    """
    Laurent approximation g(w, v) of the power series f(x, y) on [-1 + delta, 1 - delta]^2.

    Starts from approximation_parameters; if the grid error still exceeds eps,
    widens d, and once d reaches L grows L.

    Returns:
        (g, d, L) with the degrees actually used.
    """
    if f.lo_w < 0 or f.lo_v < 0:
        raise PreconditionError("the target must be a power series in x and y (nonnegative powers)")
    big_l, d = approximation_parameters(f.one_norm, delta, eps)
    for attempt in range(MAX_ADAPT_STEPS):
        g = _build_approximation(f, big_l, d)
        err = approximation_error(f, g, delta)
        logger.debug(f"Approximation with L = {big_l}, d = {d}: grid error {err:.3e}")
        if err <= eps:
            logger.info(f"Bivariate approximation: L = {big_l}, d = {d}, error {err:.3e}, "
                        f"one-norm {g.one_norm:.6f} (target {f.one_norm:.6f})")
            return g, d, big_l
        if d < big_l:
            d = min(big_l, d + max(1, d // 2))
        else:
            big_l = int(np.ceil(1.5 * big_l))
        logger.warning(f"Grid error {err:.3e} exceeds {eps:.1e}; retrying with L = {big_l}, d = {d}")
    raise ConvergenceError(f"approximation error {err:.3e} still exceeds {eps:.1e}", best_residual=err)


def product_obstruction_example() -> BivariatePoly:
    """F(w, v) = 1 - (2 - w - 1/w)(2 - v - 1/v) / 16, which needs a scale above 1."""
    bump = np.array([-1.0, 2.0, -1.0])
    coeffs = -np.outer(bump, bump) / 16.0
    coeffs[1, 1] += 1.0
    return BivariatePoly(coeffs, lo_w=-1, lo_v=-1)


# --- product decomposition ------------------------------------------------------

def circle_sup(p: PolyMatrix, points: int = None) -> float:
    """Grid sup of |p| on the unit circle refined by a parabola through the argmax and its neighbours."""
    points = config.SUP_GRID_POINTS if points is None else points
    theta = 2 * np.pi * np.arange(points) / points
    mags = np.abs(_eval_scalar_poly(p, np.exp(1j * theta)))
    i = int(np.argmax(mags))
    left, mid, right = mags[i - 1], mags[i], mags[(i + 1) % points]
    curvature = left - 2 * mid + right
    best = mid
    if curvature < 0:
        offset = 0.5 * (left - right) / curvature
        refined = theta[i] + offset * (2 * np.pi / points)
        best = max(mid, float(np.abs(_eval_scalar_poly(p, np.exp(1j * refined)))))
    return float(best)


def decompose_products(g: BivariatePoly) -> ProductDecomposition:
    """
    Groups g by powers of v: h_k(w) = sum_j g_jk w^j, alpha_k = sup |h_k|,
    p_k = h_k / alpha_k and q_k = v^k, with scale alpha = sum alpha_k.
    """
    terms = []
    for col in range(g.coeffs.shape[1]):
        column = g.coeffs[:, col]
        if not np.any(column):
            continue
        h = PolyMatrix.scalar(column, lo=g.lo_w)
        alpha = circle_sup(h) * (1.0 + SUP_MARGIN)
        if alpha == 0.0:
            continue
        terms.append(ProductTerm(p=h.scale(1.0 / alpha), q=PolyMatrix.scalar([1.0], lo=g.lo_v + col), alpha=alpha))
    dec = ProductDecomposition(terms=terms, scale=float(sum(t.alpha for t in terms)))
    if dec.empty:
        logger.warning("Zero bivariate polynomial: empty decomposition with scale 0")
    else:
        logger.info(f"Product decomposition: {len(terms)} terms, scale {dec.scale:.10f}")
    return dec


def _row_and_column(dec: ProductDecomposition) -> Tuple[PolyMatrix, PolyMatrix]:
    """Row [sqrt(a_k/a) p_k(w)] (1 x r) and column [sqrt(a_k/a) v^k] (r x 1)."""
    roots = np.sqrt(dec.weights())
    lo_p = min(t.p.lo for t in dec.terms)
    hi_p = max(t.p.hi for t in dec.terms)
    lo_q = min(t.q.lo for t in dec.terms)
    hi_q = max(t.q.hi for t in dec.terms)
    r = len(dec.terms)
    row = np.zeros((hi_p - lo_p + 1, 1, r), dtype=complex)
    col = np.zeros((hi_q - lo_q + 1, r, 1), dtype=complex)
    for k, (root, term) in enumerate(zip(roots, dec.terms)):
        row[:, 0, k] = root * term.p.padded(lo_p, hi_p)[:, 0, 0]
        col[:, k, 0] = root * term.q.padded(lo_q, hi_q)[:, 0, 0]
    return PolyMatrix(row, lo=lo_p), PolyMatrix(col, lo=lo_q)


def _embed(u: np.ndarray, n_from: int, n_to: int, dim: int) -> np.ndarray:
    return scipy.linalg.block_diag(u, np.eye((n_to - n_from) * dim)) if n_to > n_from else u


def compose_block_encodings(dec: ProductDecomposition, w, v, convention: Convention = 'half',
                            tol: float = None) -> np.ndarray:
    """
    Block encoding of g(w, v) / scale as the product of a row encoding in w and
    a column encoding in v that share the term register.

    Registers are ordered (column flag, row flag, term register, system); the
    row circuit acts on (row flag, term, system) and the column circuit on
    (column flag, term, system). The all-zero block of the product is returned.

    Raises:
        PreconditionError: w, v not unitary or not commuting.
    """
    w = require_unitary(np.atleast_2d(np.asarray(w, dtype=complex)), 1e-10, name="w")
    v = require_unitary(np.atleast_2d(np.asarray(v, dtype=complex)), 1e-10, name="v")
    if w.shape != v.shape:
        raise ShapeError(f"w is {w.shape} but v is {v.shape}")
    if np.linalg.norm(w @ v - v @ w, 2) > 1e-10:
        raise PreconditionError("w and v must commute for the product construction")
    dim = w.shape[0]
    if dec.empty:
        return np.zeros((dim, dim), dtype=complex)
    if convention == 'full':
        w, v = principal_sqrt_unitary(w), principal_sqrt_unitary(v)
    elif convention != 'half':
        raise PreconditionError(f"unknown angle convention {convention!r}")

    row, col = _row_and_column(dec)
    r = len(dec.terms)
    params_row, _, _ = synthesize_laurent(row, tol)
    params_col, _, _ = synthesize_laurent(col, tol)
    # both circuits live on r + 1 ancilla levels, embedded in flag (x) term = 2r levels
    u_row = _embed(forward_eval_laurent(params_row, w), params_row.n_dim, 2 * r, dim)
    u_col = _embed(forward_eval_laurent(params_col, v), params_col.n_dim, 2 * r, dim)

    size = 4 * r * dim
    first = np.kron(np.eye(2), u_row)
    col_tensor = u_col.reshape(2, r, dim, 2, r, dim)
    second = np.einsum('abcdef,gh->agbcdhef', col_tensor, np.eye(2)).reshape(size, size)
    total = first @ second
    block = total[:dim, :dim]
    logger.debug(f"Composed product block encoding on {size} levels")
    return block


def lcu_combine_generic(unitaries: Sequence[np.ndarray], weights: Sequence[float]) -> np.ndarray:
    """
    V^dagger (sum_j |j><j| (x) U_j) V with V|0> = sum_j sqrt(w_j)|j>; returns the
    |0>-block, sum_j w_j U_j.
    """
    weights = np.asarray(weights, dtype=float)
    if len(unitaries) != weights.size or weights.size == 0:
        raise PreconditionError(f"need one weight per unitary, got {weights.size} for {len(unitaries)}")
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
        raise PreconditionError(f"weights must be nonnegative and sum to 1 (sum {weights.sum():.15f})",
                                weight_sum=float(weights.sum()))
    mats = [np.atleast_2d(np.asarray(u, dtype=complex)) for u in unitaries]
    dim = mats[0].shape[0]
    if any(m.shape != (dim, dim) for m in mats):
        raise ShapeError("all unitaries must share one square shape")
    prep = complete_isometry(np.sqrt(weights)[:, np.newaxis])
    select = scipy.linalg.block_diag(*mats)
    lifted = np.kron(prep, np.eye(dim))
    full = lifted.conj().T @ select @ lifted
    return full[:dim, :dim]
