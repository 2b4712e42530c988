"""Built-in direct transforms for manifold construction.

Each transform maps one input channel to one or more output channels on the
same time axis and is strictly causal (no future reads). Multi-output
transforms name their channels ``<stage>_<suffix>``.
"""

import numpy as np

from .exceptions import (
    UnknownTransformError,
    ValidationError,
    WindowTooLongError,
)
from .series import UniformSeries

__all__ = ["TRANSFORM_IDS", "apply_transform", "transform_output_names"]


def _integrate(x, dt, params):
    # Left rectangle rule: out[t] = sum_{s < t} x[s] * dt, out[0] = 0.
    out = np.empty_like(x)
    out[0] = 0.0
    np.cumsum(x[:-1] * dt, out=out[1:])
    return out


def _differentiate(x, dt, params):
    # First difference / dt; step 0 has no predecessor and is set to 0.
    out = np.empty_like(x)
    out[0] = 0.0
    out[1:] = np.diff(x) / dt
    return out


def _moving_average(x, dt, params):
    window = int(params["window"])
    if window < 1:
        raise ValidationError(f"window must be >= 1, got {window}")
    if window > x.shape[0]:
        raise WindowTooLongError(f"window {window} > series length {x.shape[0]}")
    # Causal mean over the last `window` samples, shorter during warm-up.
    csum = np.concatenate([[0.0], np.cumsum(x)])
    t = np.arange(x.shape[0])
    lo = np.maximum(t - window + 1, 0)
    return (csum[t + 1] - csum[lo]) / (t + 1 - lo)


def _lag_shift(x, dt, params):
    steps = int(params["steps"])
    if steps < 0:
        raise ValidationError(f"steps must be >= 0, got {steps}")
    out = np.zeros_like(x)
    if steps < x.shape[0]:
        out[steps:] = x[: x.shape[0] - steps]
    return out


def _polynomial(x, dt, params):
    coefficients = np.asarray(params["coefficients"], dtype=np.float64)
    if coefficients.ndim != 1 or coefficients.size == 0:
        raise ValidationError("coefficients must be a non-empty 1-D sequence")
    # coefficients[k] multiplies x**k
    return np.polynomial.polynomial.polyval(x, coefficients)


def _harmonics(x, dt, params):
    k_max = int(params["k_max"])
    if k_max < 1:
        raise ValidationError(f"k_max must be >= 1, got {k_max}")
    out = {}
    for k in range(1, k_max + 1):
        out[f"cos{k}"] = np.cos(k * x)
        out[f"sin{k}"] = np.sin(k * x)
    return out


_REGISTRY = {
    "integrate": _integrate,
    "differentiate": _differentiate,
    "moving_average": _moving_average,
    "lag_shift": _lag_shift,
    "polynomial": _polynomial,
    "harmonics": _harmonics,
}

TRANSFORM_IDS = tuple(sorted(_REGISTRY))


def _lookup(transform_id):
    try:
        return _REGISTRY[transform_id]
    except KeyError:
        raise UnknownTransformError(
            f"unknown transform {transform_id!r}; available: {TRANSFORM_IDS}"
        ) from None


def transform_output_names(transform_id, name, params):
    """Output channel names a transform stage will produce."""
    _lookup(transform_id)
    if transform_id == "harmonics":
        k_max = int(params["k_max"])
        return tuple(
            f"{name}_{trig}{k}" for k in range(1, k_max + 1) for trig in ("cos", "sin")
        )
    return (name,)


def apply_transform(transform_id, series, params=None, name=None):
    """Apply a built-in transform to a single-channel series.

    Returns a series on the same time axis; output channels are named
    ``name`` (single output) or ``name_<suffix>`` (multi output).
    """
    params = params or {}
    fn = _lookup(transform_id)
    if series.n_channels != 1:
        raise ValidationError(
            f"transform {transform_id!r} takes one input channel, "
            f"got {series.n_channels}"
        )
    name = name or f"{transform_id}({series.channel_names[0]})"
    result = fn(series.values[:, 0], series.dt, params)
    if isinstance(result, dict):
        channels = {f"{name}_{suffix}": arr for suffix, arr in result.items()}
    else:
        channels = {name: result}
    return UniformSeries.from_channels(series.dt, series.t0, channels)
