#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
QSP Workbench - Amplitude Estimation Module
Outcome families {P_m(x)} of amplitude estimation circuits, their Bayesian
estimators and errors, the generalized-eigenvalue lower bounds r(y), r_eps(y)
and delta_eps, and the construction of a circuit realizing a given family.

The unknown is x = cos^2(theta/2) in [0, 1] with a uniform prior; the signal
unitary is the rotation W(theta) = [[cos(theta/2), -sin(theta/2)],
[sin(theta/2), cos(theta/2)]]. All families use shifted Chebyshev
coefficients in T_k(2x - 1) = T_k(cos theta) = cos(k theta).
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from cachetools import LRUCache, cached
from numpy.polynomial import chebyshev as npcheb
from typing_extensions import Literal

from modules.qsvt import BlockEncoding, QsvtParams, RealPolyMatrix, circuit_unitary, synthesize_pq
from utils.errors import ConditioningError, PreconditionError, RangeError, VerificationError
from utils.numerics import bisect, simpson
from utils.polymat import ChebPoly, cheb_moments, cheb_window_integrals, half_angle_split
from utils.specfact import fejer_riesz, trig_eval

try:
    import config
except ImportError:
    class MockConfig:
        FAMILY_GRID_POINTS = 257
        SIMPSON_POINTS = 201
        WHITENER_CACHE_SIZE = 16
        QAE_VERIFY_ANGLES = 33
        VERIFY_TOL = 1e-6
    config = MockConfig()
    logging.warning("config.py not found, using default amplitude estimation settings.")

logger = logging.getLogger(__name__)

Weight = Literal['one', 'square', 'indicator']
BoundKind = Literal['r', 'r_eps', 'delta_tilde', 'std', 'window']

FAMILY_TOL = 1e-9
MASS_FLOOR = 1e-14
# Eigenvalues of the denominator below this fraction of the largest are dropped.
WHITEN_CUTOFF = 1e-12


# --- types --------------------------------------------------------------------

@dataclass
class ProbabilityFamily:
    """Outcome probabilities P_m(x), m = 0..M-1, as polynomials of degree <= N."""
    N: int
    members: List[ChebPoly]
    labels: List[Any] = field(default_factory=list)

    def __post_init__(self):
        if not self.members:
            raise PreconditionError("a probability family needs at least one outcome")
        if not self.labels:
            self.labels = list(range(len(self.members)))
        top = max(m.degree for m in self.members)
        if top > self.N:
            raise PreconditionError(f"member degree {top} exceeds the bound N = {self.N}", degree=top, N=self.N)

    @property
    def size(self) -> int:
        return len(self.members)

    def coeff_matrix(self) -> np.ndarray:
        """Chebyshev coefficients, one row per outcome, padded to N + 1 columns."""
        out = np.zeros((self.size, self.N + 1))
        for i, member in enumerate(self.members):
            out[i, :member.coeffs.size] = member.coeffs
        return out

    def values(self, x) -> np.ndarray:
        """P_m(x) for every outcome; shape (M, len(x))."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return npcheb.chebval(2 * x - 1, self.coeff_matrix().T)

    def check(self, points: int = None) -> None:
        points = config.FAMILY_GRID_POINTS if points is None else points
        x = np.linspace(0.0, 1.0, points)
        vals = self.values(x)
        worst = np.unravel_index(np.argmin(vals), vals.shape)
        if vals[worst] < -FAMILY_TOL:
            raise PreconditionError(f"outcome {self.labels[worst[0]]} is negative ({vals[worst]:.3e}) at x = {x[worst[1]]:.6f}",
                                    worst_point=float(x[worst[1]]), value=float(vals[worst]))
        total = np.abs(vals.sum(axis=0) - 1.0)
        if np.max(total) > FAMILY_TOL:
            i = int(np.argmax(total))
            raise PreconditionError(f"outcome probabilities sum to {vals[:, i].sum():.12f} at x = {x[i]:.6f}",
                                    worst_point=float(x[i]))


@dataclass
class EstimatorSummary:
    x_tilde: np.ndarray
    mass: np.ndarray
    delta_x: float
    window: List[Tuple[float, float]] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "x_tilde": [float(v) for v in self.x_tilde],
            "mass": [float(v) for v in self.mass],
            "delta_x": float(self.delta_x),
            "window": [[float(e), float(d)] for e, d in self.window],
        }


@dataclass
class BoundTable:
    """Rows of (N, parameter, value) for one bound kind."""
    kind: BoundKind
    rows: List[Tuple[int, float, float]] = field(default_factory=list)

    HEADERS = {
        'r': ("N", "y", "r"),
        'r_eps': ("N", "y", "r_eps"),
        'delta_tilde': ("N", "eps", "delta_tilde"),
        'std': ("N", "delta_x", "ratio"),
        'window': ("N", "delta", "eps"),
    }

    @property
    def header(self) -> Tuple[str, str, str]:
        return self.HEADERS[self.kind]

    def add(self, n: int, parameter: float, value: float) -> None:
        if not np.isfinite(value) or value < 0:
            raise RangeError(f"{self.kind} value {value} at N = {n}, parameter {parameter} is not a finite nonnegative number")
        self.rows.append((int(n), float(parameter), float(value)))


# --- Chebyshev moment matrices and generalized eigenvalues ----------------------

def cheb_moment_matrices(N: int, weight: Weight = 'one', y: float = 0.5, eps: float = 0.0) -> np.ndarray:
    """
    (N + 1) x (N + 1) Toeplitz matrix with entries int_0^1 w(x) T_|j-k|(2x - 1) dx.

    Weights: 'one' (w = 1), 'square' (w = (x - y)^2) and 'indicator'
    (w = 1 where |x - y| > eps).
    """
    if not 0.0 <= y <= 1.0:
        raise PreconditionError(f"y must lie in [0, 1], got {y}", y=y)
    m0 = cheb_moments(N, 0)
    if weight == 'one':
        column = m0
    elif weight == 'square':
        column = cheb_moments(N, 2) - 2 * y * cheb_moments(N, 1) + y * y * m0
    elif weight == 'indicator':
        if eps <= 0.0:
            raise PreconditionError(f"window half-width must be positive, got {eps}", eps=eps)
        column = m0 - cheb_window_integrals(y - eps, y + eps, N)[0]
    else:
        raise PreconditionError(f"unknown weight {weight!r}")
    return scipy.linalg.toeplitz(column)


def _whitener(b: np.ndarray) -> np.ndarray:
    """W with W^T B W = I on the numerically nonsingular part of B."""
    try:
        lower = scipy.linalg.cholesky(b, lower=True)
        return scipy.linalg.solve_triangular(lower, np.eye(b.shape[0]), lower=True).T
    except np.linalg.LinAlgError:
        pass
    evals, evecs = scipy.linalg.eigh(b)
    top = float(np.max(np.abs(evals)))
    if evals[0] < -1e-8 * top:
        raise ConditioningError(f"denominator matrix is indefinite (eigenvalue {evals[0]:.3e})",
                                min_eigenvalue=float(evals[0]))
    keep = evals > WHITEN_CUTOFF * top
    logger.warning(f"Cholesky failed; whitening on {int(keep.sum())} of {b.shape[0]} eigen-directions")
    return evecs[:, keep] / np.sqrt(evals[keep])


@cached(cache=LRUCache(maxsize=config.WHITENER_CACHE_SIZE))
def unit_whitener(N: int) -> np.ndarray:
    """Cached whitener of the unit-weight moment matrix of size N + 1."""
    w = _whitener(cheb_moment_matrices(N, 'one'))
    w.setflags(write=False)
    return w


def min_gen_eig(a: np.ndarray, b: np.ndarray, whitener: Optional[np.ndarray] = None) -> Tuple[float, np.ndarray]:
    """
    Smallest generalized eigenvalue min a^T A a / a^T B a and an attaining vector.

    Args:
        a: symmetric positive semidefinite numerator.
        b: symmetric positive definite denominator.
        whitener: precomputed W with W^T B W = I.
    """
    w = _whitener(b) if whitener is None else whitener
    reduced = w.T @ a @ w
    reduced = (reduced + reduced.T) / 2
    vals, vecs = scipy.linalg.eigh(reduced, subset_by_index=[0, 0])
    value = float(vals[0])
    vector = w @ vecs[:, 0]
    residual = float(np.linalg.norm(a @ vector - value * (b @ vector)))
    if residual > 1e-8 * np.linalg.norm(vector):
        logger.debug(f"Generalized eigenpair residual {residual:.2e}")
    return value, vector


def r_of_y(N: int, y: float) -> float:
    """r(y): the smallest normalized variance (x - y)^2 reachable with degree N."""
    value, _ = min_gen_eig(cheb_moment_matrices(N, 'square', y), cheb_moment_matrices(N, 'one'), unit_whitener(N))
    return max(value, 0.0)


def r_eps_of_y(N: int, y: float, eps: float) -> float:
    """r_eps(y): the smallest probability mass outside [y - eps, y + eps]."""
    if not 0.0 < eps < 1.0:
        raise PreconditionError(f"eps must lie in (0, 1), got {eps}", eps=eps)
    if eps >= max(y, 1.0 - y):
        return 0.0
    value, _ = min_gen_eig(cheb_moment_matrices(N, 'indicator', y, eps), cheb_moment_matrices(N, 'one'),
                           unit_whitener(N))
    return max(value, 0.0)


def _r_eps_profile(N: int, eps: float, ys: np.ndarray) -> np.ndarray:
    """r_eps on a grid symmetric about 1/2; only the lower half is solved."""
    n = ys.size
    out = np.empty(n)
    for i in range((n + 1) // 2):
        out[i] = r_eps_of_y(N, float(ys[i]), eps)
        out[n - 1 - i] = out[i]
    return out


def r_eps_peak(N: int, eps: float, points: int = None) -> Tuple[float, float, float]:
    """
    Largest r_eps over the Simpson y-grid.

    Returns:
        (peak, y at the peak, r_eps(1/2)). The profile is usually largest at
        the centre but not always; peak >= r_eps(1/2) by construction.
    """
    points = config.SIMPSON_POINTS if points is None else points
    ys = np.linspace(0.0, 1.0, points)
    profile = _r_eps_profile(N, eps, ys)
    centre = r_eps_of_y(N, 0.5, eps)
    top = int(np.argmax(profile))
    return max(float(profile[top]), centre), float(ys[top]), centre


def delta_tilde(N: int, eps: float, points: int = None, check: bool = False) -> float:
    """
    delta_eps = (int_0^1 r_eps(y) dy) / (1 + max_y r_eps(y)), the window-error lower bound.

    The maximum is taken over the integration grid together with y = 1/2. A
    warning is logged when it sits away from the centre by more than 1e-9.

    Args:
        points: Simpson grid size (odd).
        check: also integrate on the doubled grid and warn if the relative
            change exceeds 1e-3.
    """
    points = config.SIMPSON_POINTS if points is None else points
    if not 0.0 < eps < 1.0:
        raise PreconditionError(f"eps must lie in (0, 1), got {eps}", eps=eps)
    intervals = points - 1
    peak = [0.0, 0.5]

    def profile(ys: np.ndarray) -> np.ndarray:
        vals = _r_eps_profile(N, eps, ys)
        top = int(np.argmax(vals))
        if vals[top] > peak[0]:
            peak[:] = [float(vals[top]), float(ys[top])]
        return vals

    total = simpson(profile, 0.0, 1.0, intervals)
    if check:
        finer = simpson(profile, 0.0, 1.0, 2 * intervals)
        change = abs(finer - total) / max(abs(finer), 1e-300)
        if change > 1e-3:
            logger.warning(f"Simpson integral of r_eps changed by {change:.2e} on grid doubling (N = {N}, eps = {eps})")
        total = finer
    centre = r_eps_of_y(N, 0.5, eps)
    if peak[0] > centre + 1e-9:
        logger.warning(f"r_eps peaks off centre (N = {N}, eps = {eps:.6g}): {peak[0]:.6g} at y = {peak[1]:.4f} "
                       f"against {centre:.6g} at y = 1/2; dividing by the peak")
    value = total / (1.0 + max(peak[0], centre))
    logger.debug(f"delta_tilde(N = {N}, eps = {eps:.6g}) = {value:.8f}")
    return value


def eps_for_delta(N: int, delta: float, points: int = None) -> float:
    """Window half-width at which delta_tilde(N, eps) = delta, by bisection to 1e-4/N."""
    if not 0.0 < delta < 1.0:
        raise PreconditionError(f"delta must lie in (0, 1), got {delta}", delta=delta)

    def gap(eps: float) -> float:
        if eps >= 1.0:
            return -delta
        return delta_tilde(N, eps, points) - delta

    # delta_tilde tends to 1/2 as eps shrinks to 0
    lo = 1e-4 / N
    if abs(gap(lo)) <= 1e-4:
        return lo
    hi = min(8.0 / N, 1.0)
    while gap(hi) > 0 and hi < 1.0:
        hi = min(2 * hi, 1.0)
    eps = bisect(gap, lo, hi, 1e-4 / N)
    logger.info(f"eps_for_delta(N = {N}, delta = {delta}): eps = {eps:.8f} (N eps = {N * eps:.4f})")
    return eps


# --- families -------------------------------------------------------------------

def _fit_family(N: int, probabilities) -> List[ChebPoly]:
    """Fits each outcome column of probabilities(theta) at N + 1 Chebyshev nodes of x."""
    u = npcheb.chebpts1(N + 1)
    x = (u + 1) / 2
    theta = 2 * np.arccos(np.sqrt(x))
    probs = np.array([probabilities(t) for t in theta])
    coeffs = npcheb.chebfit(u, probs, N)
    return [ChebPoly(coeffs[:, m]) for m in range(coeffs.shape[1])]


def sine_state(N: int) -> np.ndarray:
    m = np.arange(N)
    return np.sqrt(2.0 / (N + 1)) * np.sin((m + 1) * np.pi / (N + 1))


def qpe_sine_probabilities(N: int, theta: float) -> np.ndarray:
    """
    Phase estimation with an N-level sine-weighted register on the rotation by
    theta, starting from |0>; outcome k has probability
    (|F[s cos(m theta)]_k|^2 + |F[s sin(m theta)]_k|^2) / N.
    """
    s = sine_state(N)
    m = np.arange(N)
    first = np.fft.fft(s * np.cos(m * theta))
    second = np.fft.fft(s * np.sin(m * theta))
    return (np.abs(first) ** 2 + np.abs(second) ** 2) / N


def qpe_sine_probabilities_closed_form(N: int, theta: float) -> np.ndarray:
    """
    The same outcome probabilities through the eigenphases +/- theta, with the
    sine window summed as two geometric series.
    """
    a = np.pi / (N + 1)
    k = np.arange(N)

    def geometric(ratio: np.ndarray) -> np.ndarray:
        near_one = np.abs(1 - ratio) < 1e-12
        safe = np.where(near_one, 0.5, ratio)
        return np.where(near_one, N, (1 - safe ** N) / (1 - safe))

    def amplitude(phase: float) -> np.ndarray:
        psi = phase - 2 * np.pi * k / N
        up = np.exp(1j * a) * geometric(np.exp(1j * (a + psi)))
        down = np.exp(-1j * a) * geometric(np.exp(1j * (psi - a)))
        return np.sqrt(2.0 / (N + 1)) * (up - down) / (2j) / np.sqrt(N)

    return (np.abs(amplitude(theta)) ** 2 + np.abs(amplitude(-theta)) ** 2) / 2


def qpe_sine_family(N: int) -> ProbabilityFamily:
    """Outcome family of sine-state phase estimation with an N-level register."""
    if N < 2:
        raise PreconditionError(f"phase estimation needs N >= 2, got {N}", N=N)
    members = _fit_family(N, lambda t: qpe_sine_probabilities(N, t))
    fam = ProbabilityFamily(N=N, members=members)
    fam.check()
    logger.info(f"Built sine-state phase estimation family with {N} outcomes")
    return fam


def amplitude_amplification_family(k: int) -> ProbabilityFamily:
    """
    k Grover iterates after the initial W: outcomes (1 - T_{2k+1}(2x - 1)) / 2
    for reading |1> and (1 + T_{2k+1}(2x - 1)) / 2 for reading |0>.
    """
    if k < 0:
        raise PreconditionError(f"iterate count must be nonnegative, got {k}", k=k)
    degree = 2 * k + 1
    top = np.zeros(degree + 1)
    top[-1] = 0.5
    half = np.zeros(degree + 1)
    half[0] = 0.5
    return ProbabilityFamily(N=degree, members=[ChebPoly(half - top), ChebPoly(half + top)], labels=[1, 0])


def simulate_amplitude_amplification(k: int, theta: float) -> np.ndarray:
    """Probabilities of reading |1> and |0> after (W Z W^dagger Z)^k W |0>."""
    w = BlockEncoding.from_rotation(theta).u
    z = np.diag([1.0, -1.0])
    grover = w @ z @ w.conj().T @ z
    state = np.linalg.matrix_power(grover, k) @ w[:, 0]
    return np.array([abs(state[1]) ** 2, abs(state[0]) ** 2])


# --- estimators and errors ------------------------------------------------------

def bayes_and_errors(fam: ProbabilityFamily, eps: Sequence[float] = ()) -> EstimatorSummary:
    """
    Posterior means x_m = int x P_m / int P_m under the uniform prior, and the
    mean squared error sum_m int P_m (x - x_m)^2, with exact Chebyshev moments.

    Outcomes with mass below 1e-14 get x_m = 1/2.
    """
    coeffs = fam.coeff_matrix()
    mass = coeffs @ cheb_moments(fam.N, 0)
    first = coeffs @ cheb_moments(fam.N, 1)
    second = coeffs @ cheb_moments(fam.N, 2)
    live = mass >= MASS_FLOOR
    x_tilde = np.full(fam.size, 0.5)
    x_tilde[live] = first[live] / mass[live]
    variance = float(np.sum(second - 2 * x_tilde * first + x_tilde ** 2 * mass))
    summary = EstimatorSummary(x_tilde=x_tilde, mass=mass, delta_x=float(np.sqrt(max(variance, 0.0))))
    for e in eps:
        summary.window.append((float(e), chebyshev_window_error(fam, x_tilde, e)))
    logger.debug(f"Bayesian summary: {fam.size} outcomes, delta_x = {summary.delta_x:.8f}")
    return summary


def chebyshev_window_error(fam: ProbabilityFamily, x_tilde: np.ndarray, eps: float) -> float:
    """sum_m int P_m(x) [|x - x_m| > eps] dx by exact piecewise integration."""
    coeffs = fam.coeff_matrix()
    mass = coeffs @ cheb_moments(fam.N, 0)
    inside = cheb_window_integrals(np.asarray(x_tilde) - eps, np.asarray(x_tilde) + eps, fam.N)
    return float(np.sum(mass - np.sum(inside * coeffs, axis=1)))


def window_epsilon(fam: ProbabilityFamily, delta: float, summary: EstimatorSummary = None) -> float:
    """Smallest eps with window error <= delta, by bisection to 1e-4/N."""
    if not 0.0 < delta < 1.0:
        raise PreconditionError(f"delta must lie in (0, 1), got {delta}", delta=delta)
    summary = bayes_and_errors(fam) if summary is None else summary
    return bisect(lambda e: chebyshev_window_error(fam, summary.x_tilde, e) - delta, 0.0, 1.0,
                  1e-4 / max(fam.N, 1))


# --- circuit construction -------------------------------------------------------

def decompose_prob_AB(p: ChebPoly, N: int, tol: float = 1e-10) -> Tuple[np.ndarray, np.ndarray]:
    """
    A, B with P(cos^2(theta/2)) = |A(c)|^2 + sin^2(theta/2) |B(c)|^2, c = cos(theta/2).

    P(cos^2(theta/2)) = sum_k p_k cos(k theta) is factored by Fejer-Riesz and the
    factor split into its even and odd parts in theta/2.

    Returns:
        Monomial coefficients in c: A of length N + 1 (parity N), B of length
        max(N, 1) (parity N - 1).
    """
    if p.degree > N:
        raise PreconditionError(f"degree {p.degree} exceeds the bound N = {N}", degree=p.degree, N=N)
    x = np.linspace(0.0, 1.0, config.FAMILY_GRID_POINTS)
    low = float(np.min(p(x)))
    if low < -FAMILY_TOL:
        raise PreconditionError(f"outcome polynomial is negative ({low:.3e}) on [0, 1]", value=low)
    trig = np.zeros(N + 1)
    trig[0] = p.coeffs[0]
    trig[1:p.coeffs.size] = p.coeffs[1:] / 2
    factor = fejer_riesz(trig, tol=tol)
    a, b = half_angle_split(factor.reshape(-1, 1, 1), N)
    a, b = a[:, 0, 0], b[:, 0, 0]

    theta = np.linspace(0.0, 2 * np.pi, 65)
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    rebuilt = np.abs(np.polyval(a[::-1], c)) ** 2 + s ** 2 * np.abs(np.polyval(b[::-1], c)) ** 2
    err = float(np.max(np.abs(rebuilt - trig_eval(trig, theta))))
    if err > 1e-8:
        raise VerificationError(f"A/B decomposition misses P by {err:.3e}", error=err)
    return a, b


def simulate_qae_circuit(params: QsvtParams, theta: float) -> np.ndarray:
    """Outcome probabilities (one per ancilla level) of the circuit on W(theta) from |0>|0>."""
    full = circuit_unitary(params, BlockEncoding.from_rotation(theta))
    column = full[:, 0].reshape(params.n_dim, 2)
    return np.sum(np.abs(column) ** 2, axis=1)


def build_qae_circuit(fam: ProbabilityFamily, tol: float = None) -> QsvtParams:
    """
    QSVT parameters whose ancilla measurement on W(theta) reproduces fam.

    Stacks the (A_m, B_m) of every outcome into one column pair (P, Q) with
    P^dagger P + (1 - c^2) Q^dagger Q = 1 and synthesizes it at degree N.

    Raises:
        VerificationError: simulated probabilities miss the family beyond tol
            at some theta (the worst theta is reported).
    """
    tol = config.VERIFY_TOL if tol is None else tol
    fam.check()
    parts = [decompose_prob_AB(member, fam.N) for member in fam.members]
    p = np.array([a for a, _ in parts]).T[:, :, np.newaxis]
    q = np.array([b for _, b in parts]).T[:, :, np.newaxis]
    params = synthesize_pq(RealPolyMatrix(p), RealPolyMatrix(q), degree=fam.N, tol=1e-6)

    thetas = np.linspace(0.0, np.pi, config.QAE_VERIFY_ANGLES)
    errors = []
    for theta in thetas:
        expected = fam.values(np.cos(theta / 2) ** 2)[:, 0]
        errors.append(float(np.max(np.abs(simulate_qae_circuit(params, theta) - expected))))
    worst = int(np.argmax(errors))
    if errors[worst] > tol:
        raise VerificationError(f"QAE circuit misses outcome probabilities by {errors[worst]:.3e} "
                                f"at theta = {thetas[worst]:.6f}", worst_point=float(thetas[worst]),
                                error=errors[worst])
    logger.info(f"Built QAE circuit: {fam.size} outcomes, degree {fam.N}, max error {errors[worst]:.2e}")
    return params
