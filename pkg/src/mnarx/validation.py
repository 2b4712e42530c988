"""Input validation helpers shared across the package."""

import numpy as np

from .exceptions import DtMismatchError, LengthMismatchError, ValidationError

# Relative tolerance used when comparing time steps / origins of two series.
TIME_RTOL = 1e-9


def as_float_array(values, name="values", ndim=None):
    """Coerce to a C-contiguous float64 array and check finiteness."""
    arr = np.ascontiguousarray(values, dtype=np.float64)
    if ndim is not None and arr.ndim != ndim:
        raise ValidationError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    return arr


def check_positive(value, name):
    if not value > 0:
        raise ValidationError(f"{name} must be > 0, got {value!r}")
    return value


def check_positive_int(value, name):
    if int(value) != value or value < 1:
        raise ValidationError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def close(a, b, rtol=TIME_RTOL):
    return abs(a - b) <= rtol * max(1.0, abs(a), abs(b))


def check_same_axis(a, b, names=("first series", "second series")):
    """Require two series to share dt, t0 and length."""
    if not close(a.dt, b.dt):
        raise DtMismatchError(f"{names[0]} dt={a.dt!r} != {names[1]} dt={b.dt!r}")
    if not close(a.t0, b.t0):
        raise ValidationError(f"{names[0]} t0={a.t0!r} != {names[1]} t0={b.t0!r}")
    if a.n_steps != b.n_steps:
        raise LengthMismatchError(
            f"{names[0]} has {a.n_steps} steps, {names[1]} has {b.n_steps}"
        )


def check_seed(seed):
    if seed is None:
        return None
    if int(seed) != seed or seed < 0:
        raise ValidationError(f"seed must be a non-negative integer, got {seed!r}")
    return int(seed)
