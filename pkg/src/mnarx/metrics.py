"""Validation metrics and method-comparison reports.

RMSE and peak extraction skip the initialization window (those steps are
copied truth, so scoring them would reward the copy). When several methods
are compared, the shared skip is the largest initialization length among
them, so every method is scored on the identical window.

A trace whose prediction trips the instability guard has no finite
prediction, so its RMSE is recorded as ``inf`` and it enters the summary
statistics that way: a method that diverges on more than half the traces
has infinite median error. Its predicted peak is undefined (``nan``) and
rank correlations are computed over stable traces only.
"""

import csv
import json
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .exceptions import (
    EmptySeriesError,
    LengthMismatchError,
    NumericBlowupError,
    ValidationError,
)

__all__ = [
    "rmse",
    "peak_abs",
    "TraceReport",
    "MethodSummary",
    "ComparisonReport",
    "compare",
    "write_report",
]


def _as_1d(values):
    arr = values.values[:, 0] if hasattr(values, "values") else np.asarray(values, float)
    if arr.ndim != 1:
        raise ValidationError(f"expected a 1-D signal, got shape {arr.shape}")
    return arr


def rmse(y_true, y_pred, skip=0):
    """Root-mean-squared pointwise difference over steps >= ``skip``."""
    a, b = _as_1d(y_true), _as_1d(y_pred)
    if a.shape != b.shape:
        raise LengthMismatchError(f"length {a.shape[0]} vs {b.shape[0]}")
    if not 0 <= skip < a.shape[0]:
        raise ValidationError(f"skip={skip} outside [0, {a.shape[0] - 1}]")
    d = a[skip:] - b[skip:]
    return float(np.sqrt(np.mean(d * d)))


def peak_abs(values, skip=0):
    """Largest absolute value over steps >= ``skip``."""
    arr = _as_1d(values)
    if skip >= arr.shape[0]:
        raise EmptySeriesError(f"skip={skip} leaves no samples of {arr.shape[0]}")
    return float(np.max(np.abs(arr[skip:])))


@dataclass(frozen=True)
class TraceReport:
    """Per-trace outcome of one method."""

    trace_id: int
    method: str
    rmse: float
    peak_true: float
    peak_pred: float
    stable: bool
    error: str = None


@dataclass(frozen=True)
class MethodSummary:
    method: str
    n_traces: int
    n_stable: int
    rmse_median: float
    rmse_mean: float
    rmse_q05: float
    rmse_q95: float
    peak_rank_correlation: float


@dataclass(frozen=True)
class ComparisonReport:
    """All methods evaluated on identical traces and initializations."""

    target: str
    skip: int
    traces: tuple
    summaries: dict = field(default_factory=dict)

    def for_method(self, method):
        return [t for t in self.traces if t.method == method]


def _summarize(method, reports):
    ok = [t for t in reports if t.stable]
    rmses = np.asarray([t.rmse for t in reports])  # inf for unstable traces
    if len(ok) >= 2:
        with warnings.catch_warnings():
            # constant peaks (e.g. a degenerate predictor) have no defined
            # rank correlation; nan is the right result, not a warning
            warnings.simplefilter("ignore", stats.ConstantInputWarning)
            rank = float(stats.spearmanr(
                [t.peak_true for t in ok], [t.peak_pred for t in ok]
            ).statistic)
    else:
        rank = float("nan")
    with np.errstate(invalid="ignore"):  # quantile interpolation between infs
        return MethodSummary(
            method=method,
            n_traces=len(reports),
            n_stable=len(ok),
            rmse_median=float(np.median(rmses)),
            rmse_mean=float(np.mean(rmses)),
            rmse_q05=float(np.quantile(rmses, 0.05)),
            rmse_q95=float(np.quantile(rmses, 0.95)),
            peak_rank_correlation=rank,
        )


def compare(methods, realizations, target, skip):
    """Evaluate every method on every validation trace.

    Parameters
    ----------
    methods : dict of str -> callable or sequence
        A callable maps one realization (a multi-channel series with the
        truth channels) to a single-channel predicted series, applying its
        own true-output initialization. A sequence supplies precomputed
        predictions aligned with ``realizations``; entries may be caught
        :class:`NumericBlowupError` instances. Either way, predictions
        that trip the instability guard are recorded per trace, not fatal.
    realizations : sequence of UniformSeries
        Shared validation set.
    target : str
        Truth channel the predictions are scored against.
    skip : int
        Initialization window excluded from all scores.
    """
    if not methods:
        raise ValidationError("need at least one method")
    traces = []
    for i, realization in enumerate(realizations):
        y_true = realization.channel(target)
        for name, fn in methods.items():
            try:
                pred = fn(realization) if callable(fn) else fn[i]
                if isinstance(pred, Exception):
                    raise pred
                traces.append(TraceReport(
                    trace_id=i,
                    method=name,
                    rmse=rmse(y_true, pred, skip),
                    peak_true=peak_abs(y_true, skip),
                    peak_pred=peak_abs(pred, skip),
                    stable=True,
                ))
            except NumericBlowupError as err:
                traces.append(TraceReport(
                    trace_id=i, method=name, rmse=float("inf"),
                    peak_true=peak_abs(y_true, skip), peak_pred=float("nan"),
                    stable=False, error=str(err),
                ))
    summaries = {
        name: _summarize(name, [t for t in traces if t.method == name])
        for name in methods
    }
    return ComparisonReport(target, skip, tuple(traces), summaries)


def _histogram(values, bins):
    values = np.asarray(values, float)
    if values.size == 0:
        return np.array([]), np.array([])
    counts, edges = np.histogram(values, bins=bins)
    return counts, edges


def write_report(reports, outdir, bins="fd", write_traces=None):
    """Write ``report.json``, ``scatter.csv`` and ``hist.csv``.

    ``reports`` is an ordered ``{target: ComparisonReport}`` mapping (a
    single report is also accepted). ``write_traces`` optionally maps
    ``(target, method, trace_id)`` to ``(times, y_true, y_pred)`` triples
    for per-trace CSVs under ``traces/``. Floats are serialized with
    ``repr`` (shortest round-trip form), so reruns are byte-identical.
    """
    if isinstance(reports, ComparisonReport):
        reports = {reports.target: reports}
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    payload = {}
    for target, report in reports.items():
        payload[target] = {
            "skip": report.skip,
            "methods": {m: asdict(s) for m, s in report.summaries.items()},
        }
    with open(outdir / "report.json", "w") as fh:
        json.dump(payload, fh, indent=2, allow_nan=True)
        fh.write("\n")

    with open(outdir / "scatter.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["target", "method", "trace", "peak_true", "peak_pred", "stable"])
        for target, report in reports.items():
            for t in report.traces:
                writer.writerow([
                    target, t.method, t.trace_id,
                    repr(t.peak_true), repr(t.peak_pred), int(t.stable),
                ])

    with open(outdir / "hist.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["target", "method", "bin_left", "bin_right", "count"])
        for target, report in reports.items():
            for method in report.summaries:
                vals = [t.rmse for t in report.for_method(method) if t.stable]
                counts, edges = _histogram(vals, bins)
                for c, lo, hi in zip(counts, edges[:-1], edges[1:]):
                    writer.writerow([target, method, repr(float(lo)),
                                     repr(float(hi)), int(c)])

    if write_traces:
        tracedir = outdir / "traces"
        tracedir.mkdir(exist_ok=True)
        for (target, method, trace_id), (times, y_true, y_pred) in write_traces.items():
            path = tracedir / f"{target}__{method}__{trace_id:04d}.csv"
            with open(path, "w", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(["t", "y_true", "y_pred"])
                for row in zip(times, y_true, y_pred):
                    writer.writerow([repr(float(v)) for v in row])
