"""2D discrete cosine transform of spatial field frames.

The synthesis (inverse) convention is fixed with unit weights:

    v[k, l] = sum_{i,j} c[i, j] * cos(pi*(k+1/2)*i / nu_y)
                               * cos(pi*(l+1/2)*j / nu_z)

The forward transform is the exact algebraic inverse of that synthesis.
With ``C[k, i] = cos(pi*(k+1/2)*i/n)`` the columns of ``C`` are orthogonal,
``C.T @ C = diag(n, n/2, ..., n/2)``, so the closed-form forward weights
are

    c[i, j] = (C_y.T @ V @ C_z)[i, j] / (d_i * d_j),
    d_0 = n,  d_{i>0} = n/2,

which makes coefficients reproducible across implementations. Reduction
keeps the low-frequency block ``i < n_i, j < n_j`` of every frame as
time-dependent channels named ``mode_<i>_<j>`` in row-major order.
"""

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator

from .exceptions import DimensionMismatchError, ValidationError
from .series import UniformSeries
from .validation import as_float_array, check_positive, check_positive_int

__all__ = [
    "FieldSequence",
    "DctReduction",
    "DctReducer",
    "dct2_forward",
    "dct2_inverse",
    "reduce_fields",
    "mode_channel_names",
    "write_fields",
    "read_fields",
]


def _cosine_matrix(n):
    k = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    return np.cos(np.pi * (k + 0.5) * i / n)


def _weights(n):
    d = np.full(n, n / 2.0)
    d[0] = float(n)
    return d


def dct2_forward(frame):
    """Coefficients of a frame under the unit-weight synthesis convention."""
    frame = as_float_array(frame, "frame", ndim=2)
    nu_y, nu_z = frame.shape
    cy, cz = _cosine_matrix(nu_y), _cosine_matrix(nu_z)
    raw = cy.T @ frame @ cz
    return raw / np.outer(_weights(nu_y), _weights(nu_z))


def dct2_inverse(coeffs, dims=None):
    """Evaluate the synthesis sum; truncated coefficients are zero-padded."""
    coeffs = as_float_array(coeffs, "coeffs", ndim=2)
    if dims is None:
        dims = coeffs.shape
    nu_y, nu_z = dims
    if coeffs.shape[0] > nu_y or coeffs.shape[1] > nu_z:
        raise DimensionMismatchError(
            f"coefficient block {coeffs.shape} exceeds frame dims {dims}"
        )
    full = np.zeros((nu_y, nu_z))
    full[: coeffs.shape[0], : coeffs.shape[1]] = coeffs
    cy, cz = _cosine_matrix(nu_y), _cosine_matrix(nu_z)
    return cy @ full @ cz.T


@dataclass(frozen=True)
class FieldSequence:
    """A time sequence of 2D field frames on a uniform time axis."""

    dt: float
    t0: float
    frames: np.ndarray  # (n_frames, nu_y, nu_z)

    def __post_init__(self):
        check_positive(self.dt, "dt")
        frames = as_float_array(self.frames, "frames")
        if frames.ndim != 3:
            raise ValidationError(f"frames must be 3-D, got shape {frames.shape}")
        frames.setflags(write=False)
        object.__setattr__(self, "frames", frames)

    @property
    def n_frames(self):
        return self.frames.shape[0]

    @property
    def dims(self):
        return self.frames.shape[1:]


@dataclass(frozen=True)
class DctReduction:
    """Retained low-frequency mode counts for given source dimensions."""

    n_i: int
    n_j: int
    nu_y: int
    nu_z: int

    def __post_init__(self):
        for name in ("n_i", "n_j", "nu_y", "nu_z"):
            check_positive_int(getattr(self, name), name)
        if not (self.n_i <= self.nu_y and self.n_j <= self.nu_z):
            raise DimensionMismatchError(
                f"retained modes ({self.n_i}, {self.n_j}) exceed grid "
                f"({self.nu_y}, {self.nu_z})"
            )

    @property
    def channel_names(self):
        return mode_channel_names(self.n_i, self.n_j)


def mode_channel_names(n_i, n_j):
    """Row-major channel labels ``mode_<i>_<j>`` for a retained block."""
    return tuple(f"mode_{i}_{j}" for i in range(n_i) for j in range(n_j))


def reduce_fields(fields, reduction):
    """Time series of the retained spatial-mode coefficients.

    Channel ``mode_i_j`` holds the (i, j) coefficient of every frame;
    channels are ordered row-major in (i, j).
    """
    if fields.dims != (reduction.nu_y, reduction.nu_z):
        raise DimensionMismatchError(
            f"frames are {fields.dims}, reduction expects "
            f"({reduction.nu_y}, {reduction.nu_z})"
        )
    cy = _cosine_matrix(reduction.nu_y)[:, : reduction.n_i]
    cz = _cosine_matrix(reduction.nu_z)[:, : reduction.n_j]
    scale = np.outer(
        _weights(reduction.nu_y)[: reduction.n_i],
        _weights(reduction.nu_z)[: reduction.n_j],
    )
    block = np.einsum("tkl,ki,lj->tij", fields.frames, cy, cz) / scale
    values = block.reshape(fields.n_frames, reduction.n_i * reduction.n_j)
    return UniformSeries(fields.dt, fields.t0, values, reduction.channel_names)


class DctReducer(BaseEstimator):
    """Transformer wrapper around the spatial-mode reduction.

    Parameters
    ----------
    n_i, n_j : int
        Retained mode counts in the two spatial directions.
    """

    def __init__(self, n_i=3, n_j=3):
        self.n_i = n_i
        self.n_j = n_j

    def fit(self, fields, y=None):
        nu_y, nu_z = fields.dims
        self.reduction_ = DctReduction(self.n_i, self.n_j, nu_y, nu_z)
        return self

    def transform(self, fields):
        if not hasattr(self, "reduction_"):
            self.fit(fields)
        return reduce_fields(fields, self.reduction_)

    def fit_transform(self, fields, y=None):
        return self.fit(fields).transform(fields)

    def inverse_transform(self, series):
        """Reconstruct frames from retained modes (higher modes zero)."""
        red = self.reduction_
        block = series.select(red.channel_names).values.reshape(
            series.n_steps, red.n_i, red.n_j
        )
        frames = np.stack(
            [dct2_inverse(b, (red.nu_y, red.nu_z)) for b in block]
        )
        return FieldSequence(series.dt, series.t0, frames)


def write_fields(fields, path_base, fmt="csv"):
    """Persist a frame sequence with a JSON header.

    ``csv`` stores one row-major flattened frame per row; ``npy`` stores
    the raw (n_frames, nu_y, nu_z) array.
    """
    base = Path(path_base)
    base.parent.mkdir(parents=True, exist_ok=True)
    nu_y, nu_z = fields.dims
    header = {
        "nu_y": nu_y,
        "nu_z": nu_z,
        "dt": fields.dt,
        "t0": fields.t0,
        "n_frames": fields.n_frames,
        "format": fmt,
    }
    with open(base.with_suffix(".json"), "w") as fh:
        json.dump(header, fh, indent=2)
        fh.write("\n")
    if fmt == "csv":
        with open(base.with_suffix(".csv"), "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            for frame in fields.frames:
                writer.writerow([repr(float(v)) for v in frame.ravel()])
    elif fmt == "npy":
        np.save(base.with_suffix(".npy"), fields.frames)
    else:
        raise ValidationError(f"unknown field format {fmt!r}")


def read_fields(path_base):
    base = Path(path_base)
    with open(base.with_suffix(".json")) as fh:
        header = json.load(fh)
    shape = (header["n_frames"], header["nu_y"], header["nu_z"])
    if header.get("format", "csv") == "npy":
        frames = np.load(base.with_suffix(".npy"))
    else:
        with open(base.with_suffix(".csv"), newline="") as fh:
            rows = [[float(v) for v in row] for row in csv.reader(fh) if row]
        frames = np.asarray(rows)
    if frames.size != np.prod(shape):
        raise DimensionMismatchError(
            f"field payload has {frames.size} values, header implies {shape}"
        )
    return FieldSequence(header["dt"], header["t0"], frames.reshape(shape))
