#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
QSP Workbench - Error Types
All failures raised by the toolkit derive from QspError. Each error keeps a
details dict so the CLI can report it as a machine-readable status dict.
"""

from typing import Any, Dict


class QspError(Exception):
    """Base class for toolkit errors."""

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details: Dict[str, Any] = details

    def to_dict(self) -> Dict[str, Any]:
        payload = {"status": "error", "error": type(self).__name__, "message": self.message}
        payload.update({k: _plain(v) for k, v in self.details.items()})
        return payload


class PreconditionError(QspError):
    """Input violates an operation precondition."""


class DomainError(PreconditionError):
    """Argument outside the domain of a function (e.g. z = 0 for a Laurent polynomial)."""


class ShapeError(PreconditionError):
    """Incompatible matrix or polynomial shapes."""


class DegeneracyError(QspError):
    """A synthesis reduction step lost orthogonality or Gram consistency."""

    def __init__(self, message: str, step: int, **details: Any):
        super().__init__(message, step=step, **details)
        self.step = step


class ConvergenceError(QspError):
    """An iterative solver did not reach its tolerance."""

    def __init__(self, message: str, best_residual: float, **details: Any):
        super().__init__(message, best_residual=best_residual, **details)
        self.best_residual = best_residual


class ConditioningError(QspError):
    """A matrix expected to be positive definite is not, numerically."""


class RangeError(QspError):
    """A root search was not bracketed."""


class VerificationError(QspError):
    """A synthesized object failed its forward check."""


def _plain(value: Any) -> Any:
    # numpy scalars and arrays are not JSON serializable
    if hasattr(value, 'tolist'):
        return value.tolist()
    if isinstance(value, complex):
        return [value.real, value.imag]
    return value
