"""Uniformly sampled time series container and its CSV/JSON serialization.

A :class:`UniformSeries` stores values on the implicit time axis
``{t0, t0 + dt, ..., t0 + (n - 1) dt}``; no per-row timestamps are kept.
The on-disk format is a CSV with header ``t,<channel>,...`` plus a JSON
sidecar ``{"dt": ..., "t0": ..., "n_steps": ...}``; readers verify the row
count against ``n_steps``.
"""

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import ChannelMissingError, EmptySeriesError, ValidationError
from .validation import as_float_array, check_positive, close

__all__ = ["UniformSeries", "read_series", "write_series", "resample_linear"]


@dataclass(frozen=True)
class UniformSeries:
    """A scalar or vector time series on a uniform discrete time axis.

    Parameters
    ----------
    dt : float
        Time step in seconds, strictly positive.
    t0 : float
        Time of the first sample, seconds.
    values : ndarray of shape (n_steps, n_channels)
        Finite sample values; a 1-D array is accepted and treated as a
        single channel.
    channel_names : tuple of str
        One label per channel. Defaults to ``("y",)`` for single-channel
        data and ``("c0", "c1", ...)`` otherwise.
    """

    dt: float
    t0: float
    values: np.ndarray
    channel_names: tuple = field(default=None)

    def __post_init__(self):
        check_positive(self.dt, "dt")
        vals = as_float_array(self.values, "values")
        if vals.ndim == 1:
            vals = vals[:, None]
        if vals.ndim != 2:
            raise ValidationError(f"values must be 1-D or 2-D, got shape {vals.shape}")
        if vals.shape[0] < 1 or vals.shape[1] < 1:
            raise EmptySeriesError(
                f"series needs at least one step and one channel, got {vals.shape}"
            )
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        names = self.channel_names
        if names is None:
            names = ("y",) if vals.shape[1] == 1 else tuple(f"c{i}" for i in range(vals.shape[1]))
        names = tuple(str(n) for n in names)
        if len(names) != vals.shape[1]:
            raise ValidationError(
                f"{len(names)} channel names for {vals.shape[1]} channels"
            )
        if len(set(names)) != len(names):
            raise ValidationError(f"duplicate channel names: {names}")
        object.__setattr__(self, "channel_names", names)

    @property
    def n_steps(self):
        return self.values.shape[0]

    @property
    def n_channels(self):
        return self.values.shape[1]

    @property
    def times(self):
        """The implied time axis ``t0 + dt * arange(n_steps)``."""
        return self.t0 + self.dt * np.arange(self.n_steps)

    def channel(self, name):
        """Return one channel as a 1-D array."""
        try:
            j = self.channel_names.index(name)
        except ValueError:
            raise ChannelMissingError(
                f"channel {name!r} not in {self.channel_names}"
            ) from None
        return self.values[:, j]

    def select(self, names):
        """Return a new series holding the named channels, in the given order."""
        cols = [self.channel(n) for n in names]
        return UniformSeries(self.dt, self.t0, np.column_stack(cols), tuple(names))

    def with_channels(self, extra):
        """Return a new series with additional named channels appended.

        ``extra`` maps channel name to a 1-D array of length ``n_steps``.
        """
        cols = [self.values]
        names = list(self.channel_names)
        for name, arr in extra.items():
            arr = as_float_array(arr, name)
            if arr.shape != (self.n_steps,):
                raise ValidationError(
                    f"channel {name!r} has shape {arr.shape}, expected ({self.n_steps},)"
                )
            cols.append(arr[:, None])
            names.append(name)
        return UniformSeries(self.dt, self.t0, np.hstack(cols), tuple(names))

    @staticmethod
    def from_channels(dt, t0, channels):
        """Build a series from an ordered ``{name: 1-D array}`` mapping."""
        names = tuple(channels)
        cols = np.column_stack([channels[n] for n in names])
        return UniformSeries(dt, t0, cols, names)


def write_series(series, path_base):
    """Write ``<base>.csv`` plus the ``<base>.json`` sidecar."""
    base = Path(path_base)
    base.parent.mkdir(parents=True, exist_ok=True)
    with open(base.with_suffix(".csv"), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", *series.channel_names])
        for t, row in zip(series.times, series.values):
            writer.writerow([repr(float(t)), *(repr(float(v)) for v in row)])
    sidecar = {"dt": series.dt, "t0": series.t0, "n_steps": series.n_steps}
    with open(base.with_suffix(".json"), "w") as fh:
        json.dump(sidecar, fh, indent=2)
        fh.write("\n")


def read_series(path_base):
    """Read a series written by :func:`write_series`.

    Raises ``ValidationError`` if the CSV row count disagrees with the
    sidecar's ``n_steps``.
    """
    base = Path(path_base)
    with open(base.with_suffix(".json")) as fh:
        sidecar = json.load(fh)
    with open(base.with_suffix(".csv"), newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[0] != "t":
            raise ValidationError(f"{base}.csv: first column must be 't', got {header[:1]}")
        names = tuple(header[1:])
        rows = [[float(v) for v in row] for row in reader if row]
    if len(rows) != sidecar["n_steps"]:
        raise ValidationError(
            f"{base}.csv has {len(rows)} rows, sidecar says n_steps={sidecar['n_steps']}"
        )
    data = np.asarray(rows, dtype=np.float64)
    series = UniformSeries(sidecar["dt"], sidecar["t0"], data[:, 1:], names)
    if not (close(data[0, 0], series.t0) and close(data[-1, 0], series.times[-1])):
        raise ValidationError(f"{base}.csv time column disagrees with sidecar dt/t0")
    return series


def resample_linear(series, dt_new):
    """Resample onto a finer/coarser uniform axis by linear interpolation.

    The interpolant choice is an assumption; the upsampling procedure this
    mirrors is not pinned to a specific scheme. The new axis starts at the
    same ``t0`` and ends at or before the original final time.
    """
    check_positive(dt_new, "dt_new")
    t_old = series.times
    n_new = int(np.floor((t_old[-1] - series.t0) / dt_new + 1e-9)) + 1
    t_new = series.t0 + dt_new * np.arange(n_new)
    cols = {
        name: np.interp(t_new, t_old, series.values[:, j])
        for j, name in enumerate(series.channel_names)
    }
    return UniformSeries.from_channels(dt_new, series.t0, cols)
