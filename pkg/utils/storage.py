#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
QSP Workbench - Storage Module
Reads and writes the JSON and CSV artifacts produced by the CLI. Writes are
atomic (temporary file in the target directory, then rename) so an
interrupted run never leaves a truncated artifact behind.
"""

import csv
import io
import json
import logging
import os
import tempfile
from datetime import datetime, timezone
from typing import Any, Dict, Iterable, List, Sequence

import numpy as np

from utils.errors import PreconditionError, ShapeError
from utils.polymat import PolyMatrix

try:
    import config
except ImportError:
    class MockConfig:
        CSV_FLOAT_FORMAT = '%.12g'
    config = MockConfig()
    logging.warning("config.py not found, using default storage settings.")

logger = logging.getLogger(__name__)


# --- codecs -------------------------------------------------------------------

def encode_matrix(m) -> List[List[List[float]]]:
    """Complex matrix as nested rows of [re, im] pairs."""
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    return [[[float(v.real), float(v.imag)] for v in row] for row in m]


def decode_matrix(data) -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as e:
        raise PreconditionError(f"malformed complex matrix: {e}")
    if arr.ndim == 2:
        # plain real matrix
        return arr.astype(complex)
    if arr.ndim != 3 or arr.shape[-1] != 2:
        raise ShapeError(f"complex matrix must be rows x cols x [re, im], got shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def encode_poly(p: PolyMatrix) -> Dict[str, Any]:
    return {
        "rows": p.rows,
        "cols": p.cols,
        "lo": p.lo,
        "coeffs": [encode_matrix(c) for c in p.coeffs],
    }


def decode_poly(data: Dict[str, Any]) -> PolyMatrix:
    try:
        coeffs = np.array([decode_matrix(c) for c in data["coeffs"]])
        lo = int(data.get("lo", 0))
    except (KeyError, TypeError) as e:
        raise PreconditionError(f"malformed polynomial matrix: missing or invalid field {e}")
    if coeffs.ndim != 3:
        raise ShapeError(f"polynomial coefficients must share one shape, got {coeffs.shape}")
    rows, cols = data.get("rows", coeffs.shape[1]), data.get("cols", coeffs.shape[2])
    if (rows, cols) != coeffs.shape[1:]:
        raise ShapeError(f"declared shape {rows}x{cols} does not match coefficients {coeffs.shape[1:]}")
    return PolyMatrix(coeffs, lo=lo)


# --- files --------------------------------------------------------------------

def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix='.tmp-', suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='') as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def artifact(kind: str, payload: Dict[str, Any], timestamp: bool = False) -> Dict[str, Any]:
    """Wraps a payload with its kind tag; the creation timestamp is opt-in so reruns stay byte-identical."""
    doc = {"kind": kind}
    if timestamp:
        doc["created"] = datetime.now(timezone.utc).strftime('%Y-%m-%dT%H:%M:%SZ')
    doc.update(payload)
    return doc


def save_json(path: str, kind: str, payload: Dict[str, Any], timestamp: bool = False) -> str:
    text = json.dumps(artifact(kind, payload, timestamp), indent=2, ensure_ascii=False) + "\n"
    _atomic_write(path, text)
    logger.info(f"Saved {kind} artifact to {path}")
    return path


def load_json(path: str) -> Dict[str, Any]:
    if not os.path.exists(path):
        raise PreconditionError(f"input file not found: {path}", path=path)
    try:
        with open(path, 'r', encoding='utf-8') as fh:
            data = json.load(fh)
    except json.JSONDecodeError as e:
        raise PreconditionError(f"malformed JSON in {path}: {e}", path=path)
    logger.debug(f"Loaded {data.get('kind', 'untyped') if isinstance(data, dict) else 'list'} artifact from {path}")
    return data


def format_cell(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return config.CSV_FLOAT_FORMAT % value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_cell(v) for v in row])
    return buffer.getvalue()


def save_csv(path: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    rows = list(rows)
    _atomic_write(path, csv_text(header, rows))
    logger.info(f"Saved {len(rows)} rows to {path}")
    return path

