"""Input validation helpers.

All public entry points funnel their array arguments through these checks so
error messages name the offending argument and the rest of the code can assume
well-formed float64 buffers.
"""

import numpy as np

from .errors import ValidationError


def check_points(points, name="points", min_points=1):
    """Validate and return an (N, 3) float64 point array.

    Accepts anything ``np.asarray`` understands. Rejects wrong shapes,
    non-finite values and clouds smaller than ``min_points``.
    """
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValidationError(
            f"{name}: expected an (N, 3) array, got shape {arr.shape}"
        )
    if arr.shape[0] < min_points:
        raise ValidationError(
            f"{name}: need at least {min_points} point(s), got {arr.shape[0]}"
        )
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name}: contains NaN or infinite coordinates")
    return arr


def check_signal(signal, n, name="signal"):
    """Validate a per-node signal: shape (n,) or (n, d), finite, float64."""
    arr = np.asarray(signal, dtype=np.float64)
    if arr.ndim not in (1, 2) or arr.shape[0] != n:
        raise ValidationError(
            f"{name}: expected shape ({n},) or ({n}, d), got {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name}: contains NaN or infinite values")
    return arr


def check_taps(taps, name="taps"):
    """Validate filter coefficients: 1-D, at least one tap, all finite."""
    arr = np.asarray(taps, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 1:
        raise ValidationError(f"{name}: expected a non-empty 1-D coefficient array")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name}: coefficients must be finite")
    return arr


def check_count(value, name, low=1, high=None):
    """Validate an integer count in [low, high]."""
    count = int(value)
    if count != value:
        raise ValidationError(f"{name}: expected an integer, got {value!r}")
    if count < low or (high is not None and count > high):
        bound = f"[{low}, {high}]" if high is not None else f">= {low}"
        raise ValidationError(f"{name}: {count} out of range {bound}")
    return count


def check_positive(value, name):
    val = float(value)
    if not np.isfinite(val) or val <= 0:
        raise ValidationError(f"{name}: expected a positive finite value, got {value!r}")
    return val
