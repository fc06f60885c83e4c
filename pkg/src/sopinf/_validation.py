"""Input validation helpers used across the package."""

import numpy as np

from .errors import DimensionMismatchError, NonFiniteError

__all__ = ["as_matrix", "as_vector", "check_finite", "check_square", "frozen"]


def as_matrix(a, name="array"):
    """Coerce to a 2-D float64 ndarray."""
    out = np.asarray(a, dtype=np.float64)
    if out.ndim != 2:
        raise DimensionMismatchError(f"{name} must be 2-D, got ndim={out.ndim}")
    return out


def as_vector(a, name="array"):
    """Coerce to a 1-D float64 ndarray."""
    out = np.asarray(a, dtype=np.float64)
    if out.ndim != 1:
        raise DimensionMismatchError(f"{name} must be 1-D, got ndim={out.ndim}")
    return out


def check_finite(a, name="array"):
    if not np.all(np.isfinite(a)):
        raise NonFiniteError(f"{name} contains NaN or Inf entries")


def check_square(a, name="matrix"):
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"{name} must be square, got shape {a.shape}")


def frozen(a):
    """Return a C-contiguous float64 copy marked read-only."""
    out = np.array(a, dtype=np.float64, order="C", copy=True)
    out.setflags(write=False)
    return out
