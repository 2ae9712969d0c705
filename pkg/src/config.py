"""Centralized configuration for the inextensible structures simulator."""

import os
from pathlib import Path
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

# ==================== Logging ====================
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO").upper()
LOG_FORMAT = os.getenv("LOG_FORMAT", "%(asctime)s - %(name)s - %(levelname)s - %(message)s")

# ==================== Tracing ====================
OTEL_SERVICE_NAME = os.getenv("OTEL_SERVICE_NAME", "inextensible-sim")
# Unset means spans stay in-process
OTEL_EXPORTER_OTLP_ENDPOINT = os.getenv("OTEL_EXPORTER_OTLP_ENDPOINT")

# ==================== Discretization ====================
QUADRATURE_FACTOR = int(os.getenv("QUADRATURE_FACTOR", "4"))
QUADRATURE_PAD = int(os.getenv("QUADRATURE_PAD", "16"))
ROOT_TOLERANCE = float(os.getenv("ROOT_TOLERANCE", "1e-14"))
SLOPE_GUARD = float(os.getenv("SLOPE_GUARD", "1e-8"))

# ==================== Time Integration ====================
NEWTON_TOLERANCE = float(os.getenv("NEWTON_TOLERANCE", "1e-11"))
NEWTON_MAX_ITERATIONS = int(os.getenv("NEWTON_MAX_ITERATIONS", "25"))
NEWTON_CONTRACTION = float(os.getenv("NEWTON_CONTRACTION", "0.1"))
NEWTON_CHORD_LIMIT = int(os.getenv("NEWTON_CHORD_LIMIT", "3"))
FD_STEP = float(os.getenv("FD_STEP", "1e-7"))
PROJECTION_TOLERANCE = float(os.getenv("PROJECTION_TOLERANCE", "1e-12"))
PROJECTION_MAX_ITERATIONS = int(os.getenv("PROJECTION_MAX_ITERATIONS", "8"))

# ==================== Statics ====================
STATIC_TOLERANCE = float(os.getenv("STATIC_TOLERANCE", "1e-10"))
STATIC_MAX_ITERATIONS = int(os.getenv("STATIC_MAX_ITERATIONS", "50"))
CONTINUATION_START = float(os.getenv("CONTINUATION_START", "0.1"))
CONTINUATION_MIN_STEP = float(os.getenv("CONTINUATION_MIN_STEP", "1e-4"))

# ==================== Output ====================
PROJECT_ROOT = Path(__file__).parent.parent
OUTPUT_DIR = PROJECT_ROOT / os.getenv("OUTPUT_DIR", "runs")
CSV_SCHEMA_VERSION = os.getenv("CSV_SCHEMA_VERSION", "1")
CSV_FLOAT_FORMAT = os.getenv("CSV_FLOAT_FORMAT", "%.16e")
N_JOBS = int(os.getenv("N_JOBS", "1"))
CODE_VERSION = "0.1.0"

# ==================== Validation ====================
if QUADRATURE_FACTOR < 2 or QUADRATURE_PAD < 0:
    raise ValueError("QUADRATURE_FACTOR must be >= 2 and QUADRATURE_PAD >= 0.")
if not 0.0 < NEWTON_CONTRACTION < 1.0 or NEWTON_CHORD_LIMIT < 1:
    raise ValueError("NEWTON_CONTRACTION must lie in (0, 1) and NEWTON_CHORD_LIMIT must be >= 1.")
if PROJECTION_TOLERANCE > 1e-9:
    raise ValueError("PROJECTION_TOLERANCE must not exceed 1e-9.")
if not 0.0 < CONTINUATION_MIN_STEP < CONTINUATION_START <= 1.0:
    raise ValueError("Continuation steps must satisfy 0 < CONTINUATION_MIN_STEP < CONTINUATION_START <= 1.")

# ==================== Export commonly used groups ====================
__all__ = [
    'LOG_LEVEL', 'LOG_FORMAT',
    'OTEL_SERVICE_NAME', 'OTEL_EXPORTER_OTLP_ENDPOINT',
    'QUADRATURE_FACTOR', 'QUADRATURE_PAD', 'ROOT_TOLERANCE', 'SLOPE_GUARD',
    'NEWTON_TOLERANCE', 'NEWTON_MAX_ITERATIONS', 'NEWTON_CONTRACTION', 'NEWTON_CHORD_LIMIT', 'FD_STEP',
    'PROJECTION_TOLERANCE', 'PROJECTION_MAX_ITERATIONS',
    'STATIC_TOLERANCE', 'STATIC_MAX_ITERATIONS', 'CONTINUATION_START', 'CONTINUATION_MIN_STEP',
    'OUTPUT_DIR', 'CSV_SCHEMA_VERSION', 'CSV_FLOAT_FORMAT', 'N_JOBS', 'CODE_VERSION',
]
