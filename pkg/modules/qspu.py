#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
QSP Workbench - U(N) Quantum Signal Processing Module
Forward evaluation and backward synthesis of projector-controlled circuits

    C_{Pi_L}(U) ... C_{Pi_1}(U) (V_0 (x) I),   C_Pi(U) = Pi (x) U + (I - Pi) (x) I,

whose (j, k) blocks are polynomials P_jk(U). Synthesis peels one degree per
projector: Pi is the projector onto the column space of the leading
coefficient, and the polynomial is replaced by Pi P_{l+1} + (I - Pi) P_l.
Sub-unitary targets are first completed with a spectral factor of I - P^dagger P;
Laurent targets use double-headed gates Pi (x) U^{1/2} + (I - Pi) (x) U^{-1/2}.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import scipy.linalg

from utils.errors import DegeneracyError, PreconditionError, ShapeError
from utils.numerics import (column_space_projector, complete_isometry, numerical_rank,
                            polar_unitary, principal_sqrt_unitary, require_unitary)
from utils.polymat import PolyMatrix, gram_defect, verification_grid, verification_grid_points, vstack
from utils.specfact import spectral_factor, sv_bound_check
from utils.storage import decode_matrix, encode_matrix

try:
    import config
except ImportError:
    class MockConfig:
        DEFAULT_TOL = 1e-8
        SYNTH_ORTHO_TOL = 1e-6
        UNITARY_TOL = 1e-8
        VERIFY_TOL = 1e-6
    config = MockConfig()
    logging.warning("config.py not found, using default synthesis settings.")

logger = logging.getLogger(__name__)

# Slack on the circle-max singular value accepted by the completion step.
SV_SLACK = 1e-9


@dataclass
class QspuParams:
    """Seed unitary V_0 and projectors Pi_1..Pi_L, in circuit order."""
    n_dim: int
    seed: np.ndarray
    projectors: List[np.ndarray] = field(default_factory=list)

    @property
    def length(self) -> int:
        return len(self.projectors)

    def check(self, tol: float = 1e-10) -> None:
        """Raises PreconditionError unless V_0 is unitary and every Pi_k is an orthogonal projector."""
        require_unitary(self.seed, tol, name="seed V_0")
        if self.seed.shape[0] != self.n_dim:
            raise ShapeError(f"seed is {self.seed.shape}, expected ancilla dimension {self.n_dim}")
        for k, pi in enumerate(self.projectors, start=1):
            if pi.shape != (self.n_dim, self.n_dim):
                raise ShapeError(f"projector {k} has shape {pi.shape}", index=k)
            defect = max(np.linalg.norm(pi @ pi - pi, 2), np.linalg.norm(pi - pi.conj().T, 2))
            if defect > tol:
                raise PreconditionError(f"projector {k} is not an orthogonal projector (defect {defect:.2e})",
                                        index=k, defect=float(defect))

    def ranks(self) -> List[int]:
        return [int(round(np.trace(pi).real)) for pi in self.projectors]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n_dim": self.n_dim,
            "seed": encode_matrix(self.seed),
            "projectors": [encode_matrix(pi) for pi in self.projectors],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'QspuParams':
        try:
            seed = decode_matrix(data["seed"])
            projectors = [decode_matrix(pi) for pi in data.get("projectors", [])]
            n_dim = int(data.get("n_dim", seed.shape[0]))
        except KeyError as e:
            raise PreconditionError(f"QSP parameters missing field {e}")
        return cls(n_dim=n_dim, seed=seed, projectors=projectors)


@dataclass
class EmbeddingInfo:
    """Where the target sits: rows 0..p_rows-1 and columns 0..p_cols-1, above the q_rows factor rows."""
    p_rows: int
    p_cols: int
    q_rows: int
    n_dim: int
    shift: int = 0

    def __post_init__(self):
        if self.p_rows + self.q_rows > self.n_dim:
            raise ShapeError(f"blocks of {self.p_rows} + {self.q_rows} rows do not fit in dimension {self.n_dim}")

    def to_dict(self) -> Dict[str, Any]:
        return {"p_rows": self.p_rows, "p_cols": self.p_cols, "q_rows": self.q_rows,
                "n_dim": self.n_dim, "shift": self.shift}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'EmbeddingInfo':
        return cls(int(data["p_rows"]), int(data["p_cols"]), int(data["q_rows"]),
                   int(data["n_dim"]), int(data.get("shift", 0)))


# --- forward ------------------------------------------------------------------

def forward_symbolic(params: QspuParams) -> PolyMatrix:
    """N x N polynomial matrix implemented by the circuit, built gate by gate."""
    eye = np.eye(params.n_dim)
    coeffs = np.asarray(params.seed, dtype=complex)[np.newaxis]
    for pi in params.projectors:
        grown = np.zeros((coeffs.shape[0] + 1,) + coeffs.shape[1:], dtype=complex)
        grown[1:] += np.einsum('ij,kjl->kil', pi, coeffs)
        grown[:-1] += np.einsum('ij,kjl->kil', eye - pi, coeffs)
        coeffs = grown
    return PolyMatrix(coeffs)


def forward_eval(params: QspuParams, u: np.ndarray) -> np.ndarray:
    """
    The (N d) x (N d) circuit unitary for a d x d signal unitary U.

    Block (j, k) equals P_jk(U) for P = forward_symbolic(params).
    """
    u = require_unitary(u, 1e-10, name="signal unitary U")
    eye_d = np.eye(u.shape[0])
    eye_n = np.eye(params.n_dim)
    out = np.kron(params.seed, eye_d)
    for pi in params.projectors:
        out = (np.kron(pi, u) + np.kron(eye_n - pi, eye_d)) @ out
    return out


def forward_eval_laurent(params: QspuParams, u: np.ndarray, sqrt_u: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Circuit with double-headed gates Pi (x) U^{1/2} + (I - Pi) (x) U^{-1/2}.

    The principal square root of U is used unless one is supplied.
    """
    u = require_unitary(u, 1e-10, name="signal unitary U")
    half = principal_sqrt_unitary(u) if sqrt_u is None else require_unitary(sqrt_u, 1e-10, name="U^(1/2)")
    half_inv = half.conj().T
    eye_n = np.eye(params.n_dim)
    out = np.kron(params.seed, np.eye(u.shape[0]))
    for pi in params.projectors:
        out = (np.kron(pi, half) + np.kron(eye_n - pi, half_inv)) @ out
    return out


def laurent_symbolic(params: QspuParams) -> PolyMatrix:
    """Laurent polynomial realized by double-headed gates: z^{-L/2} times the ordinary one."""
    if params.length % 2:
        raise PreconditionError(f"double-headed circuits need an even gate count, got {params.length}")
    return forward_symbolic(params).shift(-params.length // 2)


def designated_block(p: PolyMatrix, info: EmbeddingInfo) -> PolyMatrix:
    return p.block(slice(0, info.p_rows), slice(0, info.p_cols))


def designated_operator_block(full: np.ndarray, info: EmbeddingInfo, d: int) -> np.ndarray:
    return full[:info.p_rows * d, :info.p_cols * d]


# --- synthesis ----------------------------------------------------------------

def _reduce_columns(coeffs: np.ndarray) -> Tuple[np.ndarray, List[np.ndarray]]:
    """
    Column-only degree reduction of an N x c polynomial with orthonormal
    columns on the unit circle. Returns the N x N seed and the projectors in
    circuit order.
    """
    coeffs = np.array(coeffs, dtype=complex)
    n_dim, cols = coeffs.shape[1], coeffs.shape[2]
    eye = np.eye(n_dim)
    scale = max(1.0, float(np.max(np.abs(coeffs))))
    peeled = []
    while coeffs.shape[0] > 1:
        degree = coeffs.shape[0] - 1
        lead = coeffs[-1]
        if numerical_rank(scipy.linalg.svdvals(lead)) == 0:
            logger.warning(f"Leading coefficient at degree {degree} is negligible "
                           f"({np.max(np.abs(lead)):.1e}); trimming")
            coeffs = coeffs[:-1]
            continue
        pi, rank = column_space_projector(lead)
        leak = float(np.linalg.norm(pi @ coeffs[0], 2))
        if leak > config.SYNTH_ORTHO_TOL * scale:
            raise DegeneracyError(f"projector at degree {degree} is not orthogonal to the constant term "
                                  f"(||Pi P_0|| = {leak:.3e})", step=degree, leak=leak)
        # (I - Pi) C_L would stay at degree L after the step
        dropped = float(np.linalg.norm((eye - pi) @ lead, 2))
        if dropped > config.SYNTH_ORTHO_TOL * scale:
            raise DegeneracyError(f"degree did not drop at step {degree} (||(I - Pi) P_L|| = {dropped:.3e})",
                                  step=degree, dropped=dropped)
        reduced = np.einsum('ij,kjl->kil', pi, coeffs[1:]) + np.einsum('ij,kjl->kil', eye - pi, coeffs[:-1])
        logger.debug(f"Reduction step {degree}: rank {rank}, leak {leak:.2e}")
        peeled.append(pi)
        coeffs = reduced

    base = coeffs[0]
    defect = float(np.linalg.norm(base.conj().T @ base - np.eye(cols), 2))
    if defect > config.SYNTH_ORTHO_TOL * scale:
        raise DegeneracyError(f"degree-0 remainder is not an isometry (defect {defect:.3e})", step=0, defect=defect)
    seed = complete_isometry(polar_unitary(base))
    return seed, peeled[::-1]


def _circle_unitarity_defect(p: PolyMatrix) -> float:
    vals = p.eval_grid(verification_grid(p.span))
    gram = np.conjugate(np.transpose(vals, (0, 2, 1))) @ vals
    return float(np.max(np.linalg.norm(gram - np.eye(p.cols), ord=2, axis=(1, 2))))


def synthesize_unitary(p: PolyMatrix) -> QspuParams:
    """
    Seed and projectors realizing a square polynomial matrix that is unitary on |z| = 1.

    Raises:
        PreconditionError: non-square, Laurent, or not unitary on the circle.
        DegeneracyError: a reduction step lost orthogonality.
    """
    if p.rows != p.cols:
        raise ShapeError(f"unitary synthesis needs a square target, got {p.rows}x{p.cols}")
    if p.lo != 0:
        raise PreconditionError(f"target has negative powers (lo = {p.lo}); use synthesize_laurent", lo=p.lo)
    defect = _circle_unitarity_defect(p)
    if defect >= config.UNITARY_TOL:
        raise PreconditionError(f"target is not unitary on the unit circle (defect {defect:.3e})", defect=defect)
    seed, projectors = _reduce_columns(p.coeffs)
    params = QspuParams(n_dim=p.rows, seed=seed, projectors=projectors)
    logger.info(f"Synthesized {p.rows}x{p.rows} unitary of degree {p.degree} with ranks {params.ranks()}")
    return params


def complete_and_synthesize(p: PolyMatrix, tol: float = None) -> Tuple[QspuParams, EmbeddingInfo]:
    """
    Block-encodes an r x c polynomial with circle singular values <= 1.

    The c x c factor Q of I - P^dagger P makes [P; Q] an isometry on the
    circle; only those r + c columns are synthesized.
    """
    tol = config.DEFAULT_TOL if tol is None else tol
    if p.lo < 0:
        raise PreconditionError(f"target has negative powers (lo = {p.lo}); use synthesize_laurent", lo=p.lo)
    top = sv_bound_check(p, 1.0)
    if top > 1.0 + SV_SLACK:
        raise PreconditionError(f"target singular values exceed 1 on the unit circle (max {top:.12f})",
                                sv_max=top)
    if p.lo > 0:
        p = PolyMatrix(p.padded(0, p.hi))

    factor = spectral_factor(gram_defect(p), tol)
    stacked = vstack([p, factor.Q])
    seed, projectors = _reduce_columns(stacked.padded(0, stacked.hi))
    params = QspuParams(n_dim=p.rows + p.cols, seed=seed, projectors=projectors)
    info = EmbeddingInfo(p_rows=p.rows, p_cols=p.cols, q_rows=p.cols, n_dim=params.n_dim)
    logger.info(f"Completed {p.rows}x{p.cols} target of degree {p.degree}: ancilla dimension {params.n_dim}, "
                f"{params.length} projectors, factor residual {factor.residual:.2e}")
    return params, info


def synthesize_laurent(p: PolyMatrix, tol: float = None) -> Tuple[QspuParams, EmbeddingInfo, bool]:
    """
    Laurent target with powers in [-d, d]: synthesizes z^d P(z) and pads the
    projector list to exactly 2d gates so the double-headed circuit applies
    U^{-d} overall.

    Returns:
        (params, info, half_step) where half_step says the gates are
        double-headed.
    """
    d = max(-p.lo, p.hi, 0)
    shifted = PolyMatrix(p.padded(-d, d), lo=0)
    params, info = complete_and_synthesize(shifted, tol)
    if params.length > 2 * d:
        raise DegeneracyError(f"synthesis produced {params.length} gates for span {2 * d}", step=params.length)
    zero = np.zeros((params.n_dim, params.n_dim), dtype=complex)
    params.projectors.extend(zero.copy() for _ in range(2 * d - params.length))
    info.shift = d
    return params, info, d > 0


# --- verification -------------------------------------------------------------

def verify_params(params: QspuParams, target: PolyMatrix, info: Optional[EmbeddingInfo] = None,
                  grid: int = 33, laurent: bool = False) -> Dict[str, Any]:
    """
    Compares the realized designated block with the target.

    Returns:
        {"coeff_error", "grid_error", "ok"}; ok means both errors are within
        config.VERIFY_TOL.
    """
    if info is None:
        info = EmbeddingInfo(target.rows, target.cols, 0, params.n_dim)
    realized = laurent_symbolic(params) if laurent else forward_symbolic(params)
    block = designated_block(realized, info)
    coeff_error = block.coeff_distance(target)
    zs = verification_grid_points(grid)
    diff = block.eval_grid(zs) - target.eval_grid(zs)
    grid_error = float(np.max(np.linalg.norm(diff, ord=2, axis=(1, 2))))
    ok = coeff_error <= config.VERIFY_TOL and grid_error <= config.VERIFY_TOL
    logger.info(f"QSP verification: coefficient error {coeff_error:.2e}, grid error {grid_error:.2e}")
    return {"coeff_error": coeff_error, "grid_error": grid_error, "ok": ok}
