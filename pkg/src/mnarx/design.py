"""Lag structures, regressor vectors, design-matrix assembly and subsampling.

Lags are stored as integer step counts (never seconds) so there is no float
equality on the time axis; conversion to physical time happens only at the
API boundary. Regressor vectors are ordered autoregressive-terms-first, then
exogenous channels in declared order, each by its lag set.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    InvalidCountError,
    LagOutOfRangeError,
    TooShortError,
    ValidationError,
)
from .validation import as_float_array, check_same_axis, check_seed

__all__ = [
    "LagSet",
    "RegressorLayout",
    "DesignMatrix",
    "build_regressor",
    "assemble_design",
    "subsample",
]


@dataclass(frozen=True)
class LagSet:
    """A strictly increasing set of non-negative integer step lags.

    Gaps are allowed; the set may be empty (a model with no terms of the
    corresponding kind).
    """

    lags: tuple

    def __post_init__(self):
        lags = tuple(int(l) for l in self.lags)
        if any(l != orig for l, orig in zip(lags, self.lags)):
            raise ValidationError(f"lags must be integers, got {self.lags!r}")
        if any(l < 0 for l in lags):
            raise ValidationError(f"lags must be non-negative, got {lags}")
        if any(b <= a for a, b in zip(lags, lags[1:])):
            raise ValidationError(f"lags must be strictly increasing, got {lags}")
        object.__setattr__(self, "lags", lags)

    def __len__(self):
        return len(self.lags)

    def __iter__(self):
        return iter(self.lags)

    @property
    def max_lag(self):
        return self.lags[-1] if self.lags else 0

    @staticmethod
    def from_range(first, last):
        """Contiguous lags ``first..last`` inclusive."""
        return LagSet(tuple(range(first, last + 1)))


@dataclass(frozen=True)
class RegressorLayout:
    """Which past values feed one prediction.

    Parameters
    ----------
    autoregressive : LagSet
        Lags applied to the model's own output; all strictly positive
        (causality). May be empty for a purely exogenous model.
    exogenous : tuple of (channel name, LagSet)
        Lag sets per input channel, in declared order; lags may be zero
        (instantaneous input effect).
    """

    autoregressive: LagSet
    exogenous: tuple = field(default=())

    def __post_init__(self):
        ar = self.autoregressive
        if not isinstance(ar, LagSet):
            ar = LagSet(tuple(ar))
        if ar.lags and ar.lags[0] < 1:
            raise ValidationError(f"autoregressive lags must be >= 1, got {ar.lags}")
        exo = []
        for name, lags in self.exogenous:
            if not isinstance(lags, LagSet):
                lags = LagSet(tuple(lags))
            exo.append((str(name), lags))
        object.__setattr__(self, "autoregressive", ar)
        object.__setattr__(self, "exogenous", tuple(exo))
        if self.n_regressors < 1:
            raise ValidationError("layout has no regressors")

    @property
    def n_regressors(self):
        return len(self.autoregressive) + sum(len(l) for _, l in self.exogenous)

    @property
    def max_lag(self):
        exo_max = max((l.max_lag for _, l in self.exogenous), default=0)
        return max(self.autoregressive.max_lag, exo_max)

    @property
    def max_ar_lag(self):
        return self.autoregressive.max_lag

    @property
    def exo_channels(self):
        return tuple(name for name, _ in self.exogenous)

    def regressor_names(self):
        """Human-readable name per regressor, in vector order."""
        names = [f"y[t-{l}]" for l in self.autoregressive]
        for ch, lags in self.exogenous:
            names.extend(f"{ch}[t-{l}]" for l in lags)
        return names


@dataclass(frozen=True)
class DesignMatrix:
    """Stacked regressor vectors with aligned targets and provenance.

    ``provenance[i] = (realization index, time index)`` records where row
    ``i`` was read from, so subsampled fits stay auditable. Rows carry no
    temporal ordering requirement.
    """

    rows: np.ndarray
    targets: np.ndarray
    provenance: np.ndarray

    def __post_init__(self):
        rows = as_float_array(self.rows, "rows", ndim=2)
        targets = as_float_array(self.targets, "targets", ndim=1)
        prov = np.ascontiguousarray(self.provenance, dtype=np.int64)
        if prov.shape != (rows.shape[0], 2):
            raise ValidationError(
                f"provenance shape {prov.shape} != ({rows.shape[0]}, 2)"
            )
        if targets.shape[0] != rows.shape[0]:
            raise ValidationError(
                f"{targets.shape[0]} targets for {rows.shape[0]} rows"
            )
        for arr in (rows, targets, prov):
            arr.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "provenance", prov)

    @property
    def n_rows(self):
        return self.rows.shape[0]

    @property
    def n_regressors(self):
        return self.rows.shape[1]


def build_regressor(series_in, series_out, layout, t_index):
    """Assemble the regressor vector for one time index.

    Output-lag terms come first, then each exogenous channel's lags in
    declared order. Raises ``LagOutOfRangeError`` if ``t_index`` is smaller
    than the layout's maximum lag (a lagged read would leave the series).
    """
    check_same_axis(series_in, series_out, ("input series", "output series"))
    if t_index < layout.max_lag or t_index >= series_out.n_steps:
        raise LagOutOfRangeError(
            f"t_index={t_index} outside [{layout.max_lag}, {series_out.n_steps - 1}]"
        )
    y = series_out.values[:, 0]
    parts = [y[t_index - l] for l in layout.autoregressive]
    for ch, lags in layout.exogenous:
        x = series_in.channel(ch)
        parts.extend(x[t_index - l] for l in lags)
    return np.asarray(parts, dtype=np.float64)


def _realization_design(series_in, series_out, layout):
    """All admissible rows of one realization, vectorized over time."""
    check_same_axis(series_in, series_out, ("input series", "output series"))
    n = series_out.n_steps
    m = layout.max_lag
    if n <= m:
        raise TooShortError(f"realization has {n} steps, needs > max lag {m}")
    t = np.arange(m, n)
    y = series_out.values[:, 0]
    cols = [y[t - l] for l in layout.autoregressive]
    for ch, lags in layout.exogenous:
        x = series_in.channel(ch)
        cols.extend(x[t - l] for l in lags)
    rows = np.column_stack(cols)
    return rows, y[t], t


def assemble_design(realizations, layout):
    """Concatenate per-realization design matrices into one.

    Each realization is an ``(input series, output series)`` pair on a
    shared time axis. Row count is ``sum_i (N_i - max_lag)``; provenance
    records the originating (realization, time) pair per row.
    """
    if not realizations:
        raise ValidationError("need at least one realization")
    all_rows, all_targets, all_prov = [], [], []
    for i, (series_in, series_out) in enumerate(realizations):
        rows, targets, t = _realization_design(series_in, series_out, layout)
        all_rows.append(rows)
        all_targets.append(targets)
        all_prov.append(np.column_stack([np.full_like(t, i), t]))
    return DesignMatrix(
        np.vstack(all_rows), np.concatenate(all_targets), np.vstack(all_prov)
    )


def subsample(design, k, seed=None, mode="random"):
    """Draw ``k`` rows from a design matrix, provenance preserved.

    ``mode="random"`` draws uniformly without replacement from a
    counter-based generator keyed by ``seed`` (deterministic per seed);
    ``mode="strided"`` takes ``k`` evenly spaced rows, no randomness.
    """
    s = design.n_rows
    if not 1 <= k <= s:
        raise InvalidCountError(f"k={k} outside [1, {s}]")
    if mode == "random":
        rng = np.random.Generator(np.random.Philox(check_seed(seed)))
        idx = rng.choice(s, size=k, replace=False)
    elif mode == "strided":
        idx = (np.arange(k, dtype=np.int64) * s) // k
    else:
        raise ValidationError(f"unknown subsample mode {mode!r}")
    return DesignMatrix(design.rows[idx], design.targets[idx], design.provenance[idx])
