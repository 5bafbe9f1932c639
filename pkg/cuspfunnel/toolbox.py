"""
A few toys the workbench will use.
"""

# Standard Library
import os

# Third Party
import numpy as np

# Local
from .constants import RATIO_SERIES_CUTOFF, THREADS_ENV


def bracket(x):
    """Japanese bracket <x> = sqrt(1 + |x|^2), elementwise"""
    x = np.asarray(x, dtype=float)
    return np.sqrt(1.0 + x * x)


def one_minus_sqrt(ratio):
    """1 - sqrt(r), switching to (1 - r)/(1 + sqrt(r)) when r is close to 1"""
    ratio = np.asarray(ratio, dtype=float)
    root = np.sqrt(ratio)
    close = np.abs(1.0 - ratio) < RATIO_SERIES_CUTOFF
    return np.where(close, (1.0 - ratio) / (1.0 + root), 1.0 - root)


def relative_variation(first, second):
    """Relative change between two nonnegative magnitudes, 0 when both vanish"""
    scale = max(abs(first), abs(second))
    if scale == 0.0:
        return 0.0
    return abs(first - second) / scale


def thread_count(default=1):
    """Worker count for grid scans, read from the environment"""
    value = os.environ.get(THREADS_ENV)
    if not value:
        return default
    try:
        return max(1, int(value))
    except ValueError:
        return default


def jsonable(value):
    """Convert numpy scalars, arrays and complex numbers into JSON friendly values"""
    # pylint: disable=too-many-return-statements
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return {"real": float(value.real), "imag": float(value.imag)}
    if isinstance(value, (np.floating, float)):
        value = float(value)
        if np.isfinite(value):
            return value
        return str(value)
    return value


def format_float(value):
    """17 significant digits, enough to round trip a double"""
    return "%.17g" % value
