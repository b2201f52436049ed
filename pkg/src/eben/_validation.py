"""Input validation helpers in the spirit of ``sklearn.utils.validation``."""
import numbers

import numpy as np

from .exceptions import ShapeError


def check_audio(x, name="signal", allow_empty=False):
    """Return ``x`` as a finite 1-D float64 array."""
    if hasattr(x, "samples"):
        x = x.samples
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ShapeError(f"{name} must be 1-D, got shape {arr.shape}")
    if not allow_empty and arr.size == 0:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf")
    return arr


def check_audio_batch(X, name="X"):
    """Accept one signal (1-D) or a batch (2-D, one signal per row).

    Returns the 2-D array and a flag telling whether the input was 1-D.
    """
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 1:
        return arr[None, :], True
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be 1-D or 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf")
    return arr, False


def check_positive_int(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_sample_rate(fs):
    return check_positive_int(fs, "sample_rate_hz")


def check_same_length(a, b, names=("reference", "estimate")):
    if a.shape != b.shape:
        raise ValueError(
            f"{names[0]} and {names[1]} lengths differ: {a.shape[0]} != {b.shape[0]}"
        )


def is_power_of_two(n):
    return isinstance(n, numbers.Integral) and n > 0 and (n & (n - 1)) == 0
