#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
QSP Workbench - U(N) Singular Value Transformation Module
Simulation and synthesis of circuits

    C(V_L) U^(+/-) ... C(V_2) U^dagger C(V_1) U (V_0 (x) I)

that apply polynomial matrices P(x) to the singular values of a block-encoded
matrix A. Inside one qubitized subspace the signal unitary acts as the
rotation [[x, -sqrt(1-x^2)], [sqrt(1-x^2), x]], and the ancilla state carries
P(x) along the encoded direction and sqrt(1-x^2) Q(x) along its complement.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import scipy.linalg
from numpy.polynomial import chebyshev as npcheb
from typing_extensions import Literal

from modules.bivariate import lcu_combine_generic
from utils.errors import DegeneracyError, DomainError, PreconditionError, ShapeError
from utils.numerics import (chebyshev_nodes, complete_isometry, numerical_rank, polar_unitary,
                            psd_sqrt, require_unitary)
from utils.polymat import (PolyMatrix, cos_half_angle_expand, gram_defect, half_angle_split,
                           poly_parity, real_poly_from_chebyshev)
from utils.specfact import spectral_factor
from utils.storage import decode_matrix, encode_matrix

try:
    import config
except ImportError:
    class MockConfig:
        DEFAULT_TOL = 1e-8
        CHEB_GRID_POINTS = 129
        VERIFY_TOL = 1e-6
        ZERO_TRIM_REL = 1e-13
    config = MockConfig()
    logging.warning("config.py not found, using default QSVT settings.")

logger = logging.getLogger(__name__)

Parity = Literal['even', 'odd']

# Tolerance on a dropped coefficient during degree reduction, relative to scale.
REDUCTION_TOL = 1e-6
# Factorization target used by the completion step.
COMPLETION_TOL = 1e-10


class RealPolyMatrix:
    """
    Matrix polynomial in a real variable x, monomial basis:
    coeffs[k] is the rows x cols coefficient of x^k.
    """

    def __init__(self, coeffs):
        arr = np.array(coeffs, dtype=complex)
        if arr.ndim == 1:
            arr = arr[:, np.newaxis, np.newaxis]
        elif arr.ndim == 2:
            arr = arr[np.newaxis]
        if arr.ndim != 3 or arr.shape[0] == 0:
            raise ShapeError(f"coefficients must have shape (powers, rows, cols), got {arr.shape}")
        self.coeffs = arr

    @classmethod
    def scalar(cls, coeffs) -> 'RealPolyMatrix':
        return cls(np.asarray(coeffs, dtype=complex).reshape(-1, 1, 1))

    @classmethod
    def from_chebyshev(cls, cheb_coeffs) -> 'RealPolyMatrix':
        """Scalar polynomial from Chebyshev coefficients on [-1, 1]."""
        return cls.scalar(real_poly_from_chebyshev(cheb_coeffs))

    @classmethod
    def from_poly(cls, p: PolyMatrix) -> 'RealPolyMatrix':
        if p.lo < 0:
            raise PreconditionError(f"a polynomial in x cannot have negative powers (lo = {p.lo})")
        return cls(p.padded(0, p.hi))

    @property
    def rows(self) -> int:
        return self.coeffs.shape[1]

    @property
    def cols(self) -> int:
        return self.coeffs.shape[2]

    @property
    def degree(self) -> int:
        mags = np.max(np.abs(self.coeffs), axis=(1, 2))
        scale = mags.max()
        if scale == 0.0:
            return 0
        return int(np.nonzero(mags > config.ZERO_TRIM_REL * scale)[0][-1])

    @property
    def parity(self) -> Optional[Parity]:
        """'even', 'odd', or None for mixed parity; the zero polynomial counts as even."""
        return poly_parity(self.coeffs, tol=1e-10)

    def has_parity(self, odd: int) -> bool:
        return self.is_zero() or self.parity == ('odd' if odd else 'even')

    def is_zero(self) -> bool:
        return not np.any(np.abs(self.coeffs) > 0)

    def padded(self, length: int) -> np.ndarray:
        """Coefficients zero-filled to at least `length` powers."""
        out = np.zeros((max(length, self.coeffs.shape[0]), self.rows, self.cols), dtype=complex)
        out[:self.coeffs.shape[0]] = self.coeffs
        return out

    def __call__(self, x: float) -> np.ndarray:
        acc = self.coeffs[-1].copy()
        for c in self.coeffs[-2::-1]:
            acc = acc * x + c
        return acc

    def eval_grid(self, xs) -> np.ndarray:
        xs = np.atleast_1d(np.asarray(xs))
        vander = xs[:, np.newaxis] ** np.arange(self.coeffs.shape[0])[np.newaxis, :]
        return np.einsum('mk,kij->mij', vander, self.coeffs)

    def reflected(self) -> 'RealPolyMatrix':
        """P(-x)."""
        signs = (-1.0) ** np.arange(self.coeffs.shape[0])
        return RealPolyMatrix(self.coeffs * signs[:, np.newaxis, np.newaxis])

    def block(self, rows: slice, cols: slice) -> 'RealPolyMatrix':
        return RealPolyMatrix(self.coeffs[:, rows, cols])

    def coeff_distance(self, other: 'RealPolyMatrix') -> float:
        length = max(self.coeffs.shape[0], other.coeffs.shape[0])
        a = np.zeros((length, self.rows, self.cols), dtype=complex)
        b = np.zeros_like(a)
        a[:self.coeffs.shape[0]] = self.coeffs
        b[:other.coeffs.shape[0]] = other.coeffs
        return float(np.max(np.abs(a - b)))

    def __add__(self, other: 'RealPolyMatrix') -> 'RealPolyMatrix':
        length = max(self.coeffs.shape[0], other.coeffs.shape[0])
        out = np.zeros((length, self.rows, self.cols), dtype=complex)
        out[:self.coeffs.shape[0]] += self.coeffs
        out[:other.coeffs.shape[0]] += other.coeffs
        return RealPolyMatrix(out)

    def __sub__(self, other: 'RealPolyMatrix') -> 'RealPolyMatrix':
        return self + other.scale(-1.0)

    def scale(self, factor: complex) -> 'RealPolyMatrix':
        return RealPolyMatrix(self.coeffs * factor)

    def to_poly(self) -> PolyMatrix:
        return PolyMatrix(self.coeffs)

    def __repr__(self) -> str:
        return f"RealPolyMatrix(rows={self.rows}, cols={self.cols}, degree={self.degree})"


@dataclass
class QsvtParams:
    """Ancilla unitaries V_0..V_L in circuit order."""
    n_dim: int
    unitaries: List[np.ndarray] = field(default_factory=list)

    @property
    def length(self) -> int:
        return len(self.unitaries) - 1

    @property
    def parity(self) -> int:
        return self.length % 2

    def check(self, tol: float = 1e-10) -> None:
        if not self.unitaries:
            raise PreconditionError("QSVT parameters need at least V_0")
        for k, v in enumerate(self.unitaries):
            require_unitary(v, tol, name=f"V_{k}")
            if v.shape[0] != self.n_dim:
                raise ShapeError(f"V_{k} has shape {v.shape}, expected ancilla dimension {self.n_dim}")

    def to_dict(self) -> Dict[str, Any]:
        return {"n_dim": self.n_dim, "parity": self.parity,
                "unitaries": [encode_matrix(v) for v in self.unitaries]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'QsvtParams':
        try:
            unitaries = [decode_matrix(v) for v in data["unitaries"]]
        except KeyError as e:
            raise PreconditionError(f"QSVT parameters missing field {e}")
        return cls(n_dim=int(data.get("n_dim", unitaries[0].shape[0])), unitaries=unitaries)


@dataclass
class BlockEncoding:
    """Unitary u whose top-left rows x cols block is A; rows/cols span the |0~> and |0> subspaces."""
    u: np.ndarray
    rows: int
    cols: int

    @property
    def dim(self) -> int:
        return self.u.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        return self.u[:self.rows, :self.cols]

    def input_projector(self) -> np.ndarray:
        return np.diag((np.arange(self.dim) < self.cols).astype(float))

    def output_projector(self) -> np.ndarray:
        return np.diag((np.arange(self.dim) < self.rows).astype(float))

    @classmethod
    def from_matrix(cls, a: np.ndarray) -> 'BlockEncoding':
        """
        Unitary dilation [[A, (I - AA^dagger)^{1/2}], [(I - A^dagger A)^{1/2}, -A^dagger]]
        of A zero-padded to a square contraction.
        """
        a = np.atleast_2d(np.asarray(a, dtype=complex))
        norm = float(np.linalg.norm(a, 2))
        if norm > 1.0 + 1e-10:
            raise PreconditionError(f"block-encoded matrix must be a contraction (norm {norm:.12f})", norm=norm)
        m, n = a.shape
        s = max(m, n)
        padded = np.zeros((s, s), dtype=complex)
        padded[:m, :n] = a
        eye = np.eye(s)
        top = np.hstack([padded, psd_sqrt(eye - padded @ padded.conj().T)])
        bottom = np.hstack([psd_sqrt(eye - padded.conj().T @ padded), -padded.conj().T])
        return cls(np.vstack([top, bottom]), rows=m, cols=n)

    @classmethod
    def from_rotation(cls, theta: float) -> 'BlockEncoding':
        """W(theta) = [[cos(theta/2), -sin(theta/2)], [sin(theta/2), cos(theta/2)]]."""
        c, s = np.cos(theta / 2), np.sin(theta / 2)
        return cls(np.array([[c, -s], [s, c]], dtype=complex), rows=1, cols=1)


# --- forward ------------------------------------------------------------------

def _signal_step(k: int, p, q, x):
    """One U (odd k) or U^dagger (even k) application in the qubitized frame."""
    if k % 2:
        return x * p - (1 - x * x) * q, p + x * q
    return x * p + (1 - x * x) * q, -p + x * q


def forward_pq(params: QsvtParams, x: float) -> Tuple[np.ndarray, np.ndarray]:
    """Values P(x), Q(x) of the realized polynomial matrices for any real x."""
    p = np.array(params.unitaries[0], dtype=complex)
    q = np.zeros_like(p)
    for k, v in enumerate(params.unitaries[1:], start=1):
        p, q = _signal_step(k, p, q, x)
        p = v @ p
    return p, q


def forward_2x2(params: QsvtParams, lam: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Simulates one qubitized subspace with singular value lam.

    Returns:
        (P(lam), sqrt(1 - lam^2) Q(lam)); each column has unit norm jointly.
    """
    if not 0.0 <= lam <= 1.0:
        raise DomainError(f"singular value must lie in [0, 1], got {lam}", lam=lam)
    p, q = forward_pq(params, lam)
    return p, np.sqrt(1.0 - lam * lam) * q


def _coeff_signal_step(k: int, p: np.ndarray, q: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """_signal_step on monomial coefficient arrays (axis 0 = power)."""
    length = max(p.shape[0], q.shape[0] + 1) + 1
    xp = np.zeros((length,) + p.shape[1:], dtype=complex)
    xp[1:p.shape[0] + 1] = p
    pp = np.zeros_like(xp)
    pp[:p.shape[0]] = p
    qq = np.zeros_like(xp)
    qq[:q.shape[0]] = q
    xq = np.zeros_like(xp)
    xq[1:q.shape[0] + 1] = q
    q_damped = qq.copy()
    q_damped[2:] -= qq[:-2]
    if k % 2:
        return xp - q_damped, pp + xq
    return xp + q_damped, -pp + xq


def forward_symbolic(params: QsvtParams) -> Tuple[RealPolyMatrix, RealPolyMatrix]:
    """Exact realized (P, Q) by running the recurrences on coefficients."""
    p = np.array(params.unitaries[0], dtype=complex)[np.newaxis]
    q = np.zeros_like(p)
    for k, v in enumerate(params.unitaries[1:], start=1):
        p, q = _coeff_signal_step(k, p, q)
        p = np.einsum('ij,kjl->kil', v, p)
    return RealPolyMatrix(p), RealPolyMatrix(q)


def fit_realized(params: QsvtParams) -> RealPolyMatrix:
    """Realized P recovered from samples at L + 1 Chebyshev nodes."""
    degree = params.length
    nodes = chebyshev_nodes(degree + 1)
    values = np.array([forward_pq(params, x)[0] for x in nodes])
    flat = values.reshape(degree + 1, -1)
    cheb = npcheb.chebfit(nodes, flat.real, degree) + 1j * npcheb.chebfit(nodes, flat.imag, degree)
    mono = np.array([real_poly_from_chebyshev(cheb[:, i].real) + 1j * real_poly_from_chebyshev(cheb[:, i].imag)
                     for i in range(flat.shape[1])]).T
    return RealPolyMatrix(mono.reshape((-1,) + values.shape[1:]))


def circuit_unitary(params: QsvtParams, be: BlockEncoding) -> np.ndarray:
    """
    Full-space circuit on ancilla (x) system: V_0 (x) I, then for k = 1..L the
    signal unitary U (odd k) or U^dagger (even k) followed by V_k controlled on
    the output (odd k) or input (even k) zero subspace.
    """
    eye_n = np.eye(params.n_dim)
    eye_s = np.eye(be.dim)
    pi_in, pi_out = be.input_projector(), be.output_projector()
    out = np.kron(params.unitaries[0], eye_s)
    for k, v in enumerate(params.unitaries[1:], start=1):
        signal = be.u if k % 2 else be.u.conj().T
        control = pi_out if k % 2 else pi_in
        out = np.kron(eye_n, signal) @ out
        out = (np.kron(v, control) + np.kron(eye_n, eye_s - control)) @ out
    return out


def _blocks(full: np.ndarray, n_dim: int, dim: int, out_dim: int, in_dim: int) -> np.ndarray:
    """blocks[k, j] = <k, 0_out| full |j, 0_in>, shape (n_dim, n_dim, out_dim, in_dim)."""
    grid = full.reshape(n_dim, dim, n_dim, dim)
    return np.transpose(grid[:, :out_dim, :, :in_dim], (0, 2, 1, 3))


def forward_full(params: QsvtParams, be: BlockEncoding) -> np.ndarray:
    """
    Outcome blocks of the full circuit: <k, 0~| C |j, 0> for odd L (shape
    rows x cols of A) and <k, 0| C |j, 0> for even L.
    """
    full = circuit_unitary(params, be)
    out_dim = be.rows if params.parity else be.cols
    return _blocks(full, params.n_dim, be.dim, out_dim, be.cols)


def blocks_to_matrix(blocks: np.ndarray) -> np.ndarray:
    """(R, C, a, b) block array to the (R a) x (C b) matrix."""
    r, c, a, b = blocks.shape
    return np.transpose(blocks, (0, 2, 1, 3)).reshape(r * a, c * b)


# --- oracle -------------------------------------------------------------------

def svt_oracle(a: np.ndarray, p: RealPolyMatrix, parity: Optional[Parity] = None) -> np.ndarray:
    """
    Singular value transformation by explicit SVD A = sum s_j |w_j><v_j|.

    Even parity gives sum P(s_j)|v_j><v_j| (zero singular values padded to the
    column count); odd parity gives sum P(s_j)|w_j><v_j|. Returns blocks of
    shape (p.rows, p.cols, out, cols(A)).
    """
    a = np.atleast_2d(np.asarray(a, dtype=complex))
    norm = float(np.linalg.norm(a, 2))
    if norm > 1.0 + 1e-10:
        raise PreconditionError(f"A must be a contraction (norm {norm:.12f})", norm=norm)
    parity = parity or p.parity
    if parity is None:
        raise PreconditionError("polynomial entries must share one definite parity")
    m, n = a.shape
    w, s, vh = scipy.linalg.svd(a)
    r = min(m, n)
    if parity == 'even':
        sigma = np.zeros(n)
        sigma[:r] = s
        vals = p.eval_grid(sigma)
        return np.einsum('ai,ikl,ib->klab', vh.conj().T, vals, vh)
    vals = p.eval_grid(s)
    return np.einsum('ai,ikl,ib->klab', w[:, :r], vals, vh[:r])


# --- synthesis ----------------------------------------------------------------

def constraint_residual(p: RealPolyMatrix, q: RealPolyMatrix, points: int = None) -> Tuple[float, float]:
    """
    Max over Chebyshev nodes of ||P^dagger P + (1 - x^2) Q^dagger Q - I|| and the
    worst node.
    """
    points = config.CHEB_GRID_POINTS if points is None else points
    xs = chebyshev_nodes(points)
    pv, qv = p.eval_grid(xs), q.eval_grid(xs)
    gram = np.conjugate(np.transpose(pv, (0, 2, 1))) @ pv
    gram += (1 - xs ** 2)[:, np.newaxis, np.newaxis] * (np.conjugate(np.transpose(qv, (0, 2, 1))) @ qv)
    err = np.linalg.norm(gram - np.eye(p.cols), ord=2, axis=(1, 2))
    worst = int(np.argmax(err))
    return float(err[worst]), float(xs[worst])


def _match_unitary(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Unitary V with X = V Y for X^dagger X = Y^dagger Y, by pairing singular directions."""
    n_dim = x.shape[0]
    _, s, wh = scipy.linalg.svd(y, full_matrices=False)
    rank = numerical_rank(s)
    if rank == 0:
        return np.eye(n_dim, dtype=complex)
    w = wh.conj().T[:, :rank]
    xs = polar_unitary(x @ w / s[:rank], strict=False)
    ys = polar_unitary(y @ w / s[:rank], strict=False)
    return complete_isometry(xs) @ complete_isometry(ys).conj().T


def _zero_parity(coeffs: np.ndarray, parity: int) -> np.ndarray:
    coeffs[(1 - parity)::2] = 0.0
    return coeffs


def synthesize_pq(p: RealPolyMatrix, q: RealPolyMatrix, degree: int = None, tol: float = 1e-8) -> QsvtParams:
    """
    Ancilla unitaries realizing (P, Q) with P^dagger P + (1 - x^2) Q^dagger Q = I.

    P and Q are N x c (c = N for full unitaries); P has parity L and Q parity
    L - 1. Each step picks V_L with V_L^dagger P_L = +/- Q_{L-1} on the leading
    coefficients and undoes one signal step, lowering the degree by one.

    Raises:
        PreconditionError: constraint or parity violated.
        DegeneracyError: leading Gram mismatch or a dropped coefficient that is not negligible.
    """
    if p.rows != q.rows or p.cols != q.cols:
        raise ShapeError(f"P is {p.rows}x{p.cols} but Q is {q.rows}x{q.cols}")
    if p.cols > p.rows:
        raise ShapeError(f"P must have at least as many rows as columns, got {p.rows}x{p.cols}")
    if degree is None:
        degree = max(p.degree, q.degree + 1 if not q.is_zero() else 0)
    for name, poly, want in (("P", p, degree % 2), ("Q", q, (degree - 1) % 2)):
        if not poly.has_parity(want):
            raise PreconditionError(f"{name} must have {'odd' if want else 'even'} parity, got {poly.parity or 'mixed'}")
    residual, worst = constraint_residual(p, q)
    if residual > tol:
        raise PreconditionError(f"P^dagger P + (1 - x^2) Q^dagger Q deviates from I by {residual:.3e} at x = {worst:.6f}",
                                residual=residual, worst_point=worst)

    n_dim = p.rows
    pc = p.padded(degree + 1)[:degree + 1].copy()
    qc = q.padded(max(degree, 1))[:max(degree, 1)].copy()
    scale = max(1.0, float(np.max(np.abs(pc))), float(np.max(np.abs(qc))))
    peeled = []
    for level in range(degree, 0, -1):
        lead_p = pc[level]
        lead_q = qc[level - 1] if level % 2 else -qc[level - 1]
        mismatch = float(np.linalg.norm(lead_p.conj().T @ lead_p - lead_q.conj().T @ lead_q, 2))
        if mismatch > 1e-8 * scale ** 2:
            raise DegeneracyError(f"leading Gram matrices differ by {mismatch:.3e} at degree {level}",
                                  step=level, mismatch=mismatch)
        v = _match_unitary(lead_p, lead_q)
        a = np.einsum('ij,kjl->kil', v.conj().T, pc)
        # undo the signal step: odd levels ended with U, even ones with U^dagger
        new_p, new_q = _coeff_signal_step(level + 1, a, qc[:level])
        dropped = max(float(np.max(np.abs(new_p[level:]))), float(np.max(np.abs(new_q[level - 1:]))))
        if dropped > REDUCTION_TOL * scale:
            raise DegeneracyError(f"degree did not drop at step {level} (residual {dropped:.3e})",
                                  step=level, dropped=dropped)
        logger.debug(f"QSVT reduction step {level}: Gram mismatch {mismatch:.2e}, dropped {dropped:.2e}")
        peeled.append(v)
        pc = _zero_parity(new_p[:level].copy(), (level - 1) % 2)
        qc = _zero_parity(new_q[:level - 1].copy(), level % 2) if level > 1 else np.zeros((0,) + pc.shape[1:], dtype=complex)

    if qc.size and float(np.max(np.abs(qc))) > REDUCTION_TOL * scale:
        raise DegeneracyError(f"Q does not vanish at degree 0 ({np.max(np.abs(qc)):.3e})", step=0)
    base = pc[0]
    seed = complete_isometry(polar_unitary(base))
    params = QsvtParams(n_dim=n_dim, unitaries=[seed] + peeled[::-1])
    logger.info(f"Synthesized QSVT sequence of length {degree} on ancilla dimension {n_dim}")
    return params


def complete_qsvt(p: RealPolyMatrix, degree: int = None,
                  tol: float = None) -> Tuple[RealPolyMatrix, RealPolyMatrix, QsvtParams]:
    """
    Completes an r x c polynomial with parity L and ||P(x)|| <= 1 on [-1, 1].

    With x = cos(theta/2), e^{i L theta/2} P(x) is a polynomial in e^{i theta};
    its complementary spectral factor splits into P1(x) + sin(theta/2) Q1(x),
    and [P; P1], [0; Q1] are synthesized on r + c ancilla levels. The target
    is the top-left r x c block of the realized P.
    """
    tol = COMPLETION_TOL if tol is None else tol
    degree = p.degree if degree is None else degree
    if not p.has_parity(degree % 2):
        raise PreconditionError(f"polynomial parity {p.parity or 'mixed'} does not match degree {degree}")
    if p.degree > degree:
        raise PreconditionError(f"polynomial degree {p.degree} exceeds requested degree {degree}")
    xs = chebyshev_nodes(config.CHEB_GRID_POINTS)
    vals = p.eval_grid(xs)
    low = np.linalg.eigvalsh(np.eye(p.cols) - np.conjugate(np.transpose(vals, (0, 2, 1))) @ vals)[:, 0]
    if low.min() < -1e-9:
        worst = int(np.argmin(low))
        raise PreconditionError(f"I - P^dagger P is indefinite at x = {xs[worst]:.6f} (eigenvalue {low[worst]:.3e})",
                                worst_point=float(xs[worst]), eigenvalue=float(low[worst]))

    coeffs = _zero_parity(p.padded(degree + 1)[:degree + 1], degree % 2)
    circle = cos_half_angle_expand(coeffs, degree)
    factor = spectral_factor(gram_defect(PolyMatrix(circle)), tol)
    q_tilde = np.zeros((degree + 1, p.cols, p.cols), dtype=complex)
    span = min(factor.Q.coeffs.shape[0], degree + 1)
    q_tilde[:span] = factor.Q.coeffs[:span]
    p1, q1 = half_angle_split(q_tilde, degree)

    p_stack = np.concatenate([coeffs, p1], axis=1)
    q_stack = np.concatenate([np.zeros((q1.shape[0], p.rows, p.cols), dtype=complex), q1], axis=1)
    params = synthesize_pq(RealPolyMatrix(p_stack), RealPolyMatrix(q_stack), degree=degree)
    logger.info(f"Completed {p.rows}x{p.cols} QSVT target of degree {degree}, factor residual {factor.residual:.2e}")
    return RealPolyMatrix(p1), RealPolyMatrix(q1), params


# --- parity combination -------------------------------------------------------

def parity_split(p: RealPolyMatrix) -> Tuple[RealPolyMatrix, RealPolyMatrix]:
    """(P(x) + P(-x), P(x) - P(-x)); their average is P."""
    mirror = p.reflected()
    return p + mirror, p - mirror


def synthesize_parity_parts(p: RealPolyMatrix, tol: float = None) -> Tuple[QsvtParams, QsvtParams]:
    """Params for both parity parts of a square polynomial with ||P|| < 1/2."""
    even, odd = parity_split(p)
    top = p.degree
    even_degree = top - (top % 2)
    odd_degree = top if top % 2 else max(top - 1, 1)
    _, _, params_even = complete_qsvt(even, degree=even_degree, tol=tol)
    _, _, params_odd = complete_qsvt(odd, degree=odd_degree, tol=tol)
    return params_even, params_odd


def _pad_ancilla(u: np.ndarray, dim: int, n_from: int, n_to: int) -> np.ndarray:
    """Extends a circuit on n_from ancilla levels to n_to levels by acting trivially on the new ones."""
    if n_from == n_to:
        return u
    return scipy.linalg.block_diag(u, np.eye((n_to - n_from) * dim))


def lcu_parity_combine(params_even: QsvtParams, params_odd: QsvtParams, a: np.ndarray,
                       rows: int = 1, cols: int = 1) -> np.ndarray:
    """
    Averages the even and odd circuits for Hermitian A with weights (1/2, 1/2).

    Returns:
        The designated (rows n) x (cols n) block, (P_even(A) + P_odd(A)) / 2.
    """
    a = np.atleast_2d(np.asarray(a, dtype=complex))
    if a.shape[0] != a.shape[1] or np.linalg.norm(a - a.conj().T, 2) > 1e-10:
        raise PreconditionError("parity combination needs a Hermitian A")
    be = BlockEncoding.from_matrix(a)
    n_dim = max(params_even.n_dim, params_odd.n_dim)
    parts = [_pad_ancilla(circuit_unitary(params, be), be.dim, params.n_dim, n_dim)
             for params in (params_even, params_odd)]
    combined = lcu_combine_generic(parts, [0.5, 0.5])
    return blocks_to_matrix(_blocks(combined, n_dim, be.dim, be.cols, be.cols)[:rows, :cols])


# --- verification -------------------------------------------------------------

def verify_qsvt(params: QsvtParams, a: np.ndarray, target: Optional[RealPolyMatrix] = None,
                tol: float = None) -> Dict[str, Any]:
    """
    Compares the full circuit on a dilation of A with the SVD oracle for the
    realized polynomial (and the target block, if given).
    """
    tol = config.VERIFY_TOL if tol is None else tol
    be = BlockEncoding.from_matrix(a)
    blocks = forward_full(params, be)
    realized, _ = forward_symbolic(params)
    parity = 'odd' if params.parity else 'even'
    oracle = svt_oracle(a, realized, parity=parity)
    oracle_error = float(np.max(np.abs(blocks - oracle)))
    report = {"oracle_error": oracle_error}
    if target is not None:
        block = realized.block(slice(0, target.rows), slice(0, target.cols))
        report["target_coeff_error"] = block.coeff_distance(target)
    report["ok"] = all(v <= tol for v in report.values())
    logger.info(f"QSVT verification: {report}")
    return report
