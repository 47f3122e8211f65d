#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
QSP Workbench - Configuration File
This file contains all configuration settings for the toolkit.

Every constant can be overridden through an environment variable of the same
name (or a .env file next to this one).
"""

import os
from dotenv import load_dotenv

load_dotenv()


def _env_float(name: str, default: float) -> float:
    return float(os.environ.get(name, default))


def _env_int(name: str, default: int) -> int:
    return int(os.environ.get(name, default))


# Reproducibility and parallelism
DEFAULT_SEED = _env_int('QSP_DEFAULT_SEED', 42)
DEFAULT_JOBS = _env_int('QSP_DEFAULT_JOBS', 1)

# Tolerances
DEFAULT_TOL = _env_float('QSP_DEFAULT_TOL', 1e-8)  # spectral factorization residual
SV_RANK_REL_TOL = _env_float('QSP_SV_RANK_REL_TOL', 1e-10)  # relative to leading singular value
SV_RANK_ABS_TOL = _env_float('QSP_SV_RANK_ABS_TOL', 1e-9)
SYNTH_ORTHO_TOL = _env_float('QSP_SYNTH_ORTHO_TOL', 1e-6)  # ||Pi_L P_0|| during reduction
UNITARY_TOL = _env_float('QSP_UNITARY_TOL', 1e-8)
VERIFY_TOL = _env_float('QSP_VERIFY_TOL', 1e-6)
ZERO_TRIM_REL = 1e-13  # coefficient trimming, relative to largest coefficient

# Spectral factorization
BAUER_DEPTH_FACTOR = _env_int('QSP_BAUER_DEPTH_FACTOR', 32)
BAUER_MAX_DOUBLINGS = _env_int('QSP_BAUER_MAX_DOUBLINGS', 3)

# Grids
CHEB_GRID_POINTS = _env_int('QSP_CHEB_GRID_POINTS', 129)
SUP_GRID_POINTS = _env_int('QSP_SUP_GRID_POINTS', 1024)
SIMPSON_POINTS = _env_int('QSP_SIMPSON_POINTS', 201)
FAMILY_GRID_POINTS = _env_int('QSP_FAMILY_GRID_POINTS', 257)
QAE_VERIFY_ANGLES = 33

# Caches
WHITENER_CACHE_SIZE = _env_int('QSP_WHITENER_CACHE_SIZE', 16)
BASIS_CACHE_SIZE = _env_int('QSP_BASIS_CACHE_SIZE', 256)

# Logging configuration
LOG_LEVEL = os.environ.get('QSP_LOG_LEVEL', 'INFO')  # Options: DEBUG, INFO, WARNING, ERROR, CRITICAL

# Output formatting
CSV_FLOAT_FORMAT = '%.12g'
