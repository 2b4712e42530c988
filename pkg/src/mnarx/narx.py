"""Polynomial autoregressive-with-exogenous-input surrogate.

The estimator maps a regressor vector of lagged outputs and lagged
exogenous inputs through a truncated monomial basis and fits the weights
by ordinary least squares. Prediction is recursive: from step
``n = max autoregressive lag`` onward the model consumes its own previous
predictions (free run), initialized with the first ``n`` output values.
"""

import json
import warnings
from pathlib import Path

import numpy as np
import scipy.linalg
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .basis import BasisSpec, enumerate_basis, eval_monomials
from .design import LagSet, RegressorLayout, assemble_design, subsample
from .exceptions import (
    ChannelMissingError,
    DtMismatchError,
    LagOutOfRangeError,
    NumericBlowupError,
    UnderdeterminedError,
    ValidationError,
)
from .series import UniformSeries
from .validation import as_float_array, close

__all__ = ["PolynomialNarx", "save_model", "load_model"]

MODEL_SCHEMA = "mnarx-model-v1"

# Columns whose spread is below this are treated as constant and left
# unscaled (their centered values are exactly zero).
_SCALE_FLOOR = 1e-12


class PolynomialNarx(BaseEstimator):
    """Polynomial NARX model fitted by ordinary least squares.

    Parameters
    ----------
    ar_lags : sequence of int
        Autoregressive lags in steps, all >= 1. May be empty for a purely
        exogenous model.
    exo_lags : dict or sequence of (str, sequence of int)
        Lag sets (>= 0) per exogenous channel name, in declared order.
    degree : int, default=1
        Maximum total degree of the monomial basis.
    interaction : int, default=1
        Maximum number of regressors joined in one monomial.
    include_constant : bool, default=False
        Whether the basis contains the constant monomial.
    standardize : bool, default=True
        Standardize each regressor column to zero mean / unit variance
        (estimated from the training design) before monomials are formed,
        and solve in affine form: the target is centered and an internal
        intercept is fitted alongside the monomials (folded into
        ``target_shift_``, so the coefficient count is untouched). Controls
        conditioning for high-degree bases; without the affine offset,
        centering would bias bases that lack a constant term, since
        monomials of centered inputs generate constants of their own.
    sample_count : int or None, default=None
        If set, fit on this many design rows instead of all of them.
    sample_mode : {"random", "strided"}, default="random"
        Row subsampling scheme; "random" is uniform without replacement.
    seed : int, default=0
        Seed for the subsampling generator.
    blowup_factor : float, default=1e6
        Free-run instability guard: prediction magnitudes beyond
        ``blowup_factor`` times the training output scale raise
        :class:`~mnarx.exceptions.NumericBlowupError`.

    Attributes
    ----------
    exponents_ : ndarray of shape (n_terms, n_regressors)
        Multi-index rows of the fitted basis.
    coefficients_ : ndarray of shape (n_terms,)
        Fitted monomial weights.
    scaler_mean_, scaler_scale_ : ndarray of shape (n_regressors,)
        Standardization parameters (identity when disabled).
    target_shift_ : float
        Affine offset added back to predictions: training-target mean plus
        the internal intercept (0 when standardization is disabled).
    fit_report_ : dict
        Rows used, residual RMS, rank, condition estimate, output scale.
    layout_ : RegressorLayout
        Regressor structure resolved from the lag parameters.
    dt_ : float or None
        Training time step (None when fitted from a bare design matrix).
    output_name_ : str
        Channel name of the modelled output.
    """

    def __init__(
        self,
        ar_lags=(1,),
        exo_lags=None,
        degree=1,
        interaction=1,
        include_constant=False,
        standardize=True,
        sample_count=None,
        sample_mode="random",
        seed=0,
        blowup_factor=1e6,
    ):
        self.ar_lags = ar_lags
        self.exo_lags = exo_lags
        self.degree = degree
        self.interaction = interaction
        self.include_constant = include_constant
        self.standardize = standardize
        self.sample_count = sample_count
        self.sample_mode = sample_mode
        self.seed = seed
        self.blowup_factor = blowup_factor

    # ------------------------------------------------------------------ setup
    def _resolved_layout(self):
        exo = self.exo_lags or ()
        if isinstance(exo, dict):
            exo = tuple(exo.items())
        return RegressorLayout(
            LagSet(tuple(self.ar_lags)),
            tuple((name, LagSet(tuple(lags))) for name, lags in exo),
        )

    def _basis_spec(self, dim):
        return BasisSpec(dim, self.degree, self.interaction, self.include_constant)

    def _check_fitted(self):
        if not hasattr(self, "coefficients_"):
            raise NotFittedError("this PolynomialNarx instance is not fitted yet")

    # -------------------------------------------------------------------- fit
    def fit(self, realizations):
        """Fit from ``(input series, output series)`` realization pairs.

        The design matrices of all realizations are concatenated; when
        ``sample_count`` is set, rows are subsampled before solving.
        """
        layout = self._resolved_layout()
        design = assemble_design(realizations, layout)
        first_in, first_out = realizations[0]
        self._fit_design(design, layout)
        self.dt_ = first_in.dt
        self.output_name_ = first_out.channel_names[0]
        return self

    def fit_design(self, design):
        """Fit from a prebuilt :class:`~mnarx.design.DesignMatrix`."""
        self._fit_design(design, self._resolved_layout())
        self.dt_ = None
        self.output_name_ = "y"
        return self

    def _fit_design(self, design, layout):
        if design.n_regressors != layout.n_regressors:
            raise ValidationError(
                f"design has {design.n_regressors} columns, "
                f"layout expects {layout.n_regressors}"
            )
        if self.sample_count is not None:
            design = subsample(design, self.sample_count, self.seed, self.sample_mode)
        exponents = enumerate_basis(self._basis_spec(layout.n_regressors))
        n_terms = exponents.shape[0]
        # an internal intercept accompanies standardization unless the basis
        # already carries an explicit constant monomial
        use_intercept = self.standardize and not self.include_constant
        n_unknowns = n_terms + int(use_intercept)
        if design.n_rows < n_unknowns:
            raise UnderdeterminedError(
                f"{design.n_rows} rows for {n_unknowns} unknowns"
            )
        rows, targets = design.rows, design.targets
        if self.standardize:
            mean = rows.mean(axis=0)
            scale = rows.std(axis=0)
            scale = np.where(scale > _SCALE_FLOOR, scale, 1.0)
            target_shift = float(targets.mean())
        else:
            mean = np.zeros(layout.n_regressors)
            scale = np.ones(layout.n_regressors)
            target_shift = 0.0
        psi = eval_monomials(exponents, (rows - mean) / scale)
        system = np.hstack([np.ones((psi.shape[0], 1)), psi]) if use_intercept else psi
        solution, _, rank, sval = scipy.linalg.lstsq(
            system, targets - target_shift, lapack_driver="gelsd"
        )
        rank_deficient = rank < n_unknowns
        if rank_deficient:
            warnings.warn(
                f"rank-deficient basis (rank {rank} < {n_unknowns}); "
                "minimum-norm solution returned",
                stacklevel=2,
            )
        if use_intercept:
            target_shift += float(solution[0])
            coef = solution[1:]
        else:
            coef = solution
        residual = (targets - target_shift) - psi @ coef
        self.layout_ = layout
        self.exponents_ = exponents
        self.coefficients_ = coef
        self.scaler_mean_ = mean
        self.scaler_scale_ = scale
        self.target_shift_ = target_shift
        self.output_scale_ = max(float(np.sqrt(np.mean(targets**2))), _SCALE_FLOOR)
        self.fit_report_ = {
            "n_rows": int(design.n_rows),
            "n_coefficients": int(n_terms),
            "residual_rms": float(np.sqrt(np.mean(residual**2))),
            "rank": int(rank),
            "rank_deficient": bool(rank_deficient),
            "condition": float(sval[0] / sval[-1]) if sval[-1] > 0 else float("inf"),
            "output_scale": self.output_scale_,
        }
        return self

    # -------------------------------------------------------------- predictors
    def predict_one_step(self, phi):
        """Evaluate the fitted polynomial at raw regressor vector(s).

        Standardization is applied internally; ``phi`` is in raw units and
        ordered like the layout (output lags first, then exogenous).
        """
        self._check_fitted()
        phi = as_float_array(phi, "phi")
        z = (phi - self.scaler_mean_) / self.scaler_scale_
        return eval_monomials(self.exponents_, z) @ self.coefficients_ + self.target_shift_

    def _free_run_start(self):
        """First predictable step; rejects layouts whose exogenous lags
        reach back further than the initialization window covers."""
        n = self.layout_.max_ar_lag
        if self.layout_.max_lag > n:
            raise LagOutOfRangeError(
                f"maximum exogenous lag {self.layout_.max_lag} exceeds the "
                f"initialization window of {n} steps; the first prediction "
                "would read before the start of the series"
            )
        return n

    def _prepare_init(self, init, n):
        if init is None:
            return np.zeros(n)
        init = as_float_array(init, "init", ndim=1)
        if init.shape[0] != n:
            raise ValidationError(
                f"init has {init.shape[0]} values, model needs exactly {n}"
            )
        return init

    def _check_dt(self, series):
        if self.dt_ is not None and not close(series.dt, self.dt_):
            raise DtMismatchError(
                f"series dt={series.dt!r} differs from training dt={self.dt_!r}"
            )

    def free_run(self, exogenous, init=None):
        """Recursive prediction over the full exogenous horizon.

        The first ``n = max AR lag`` output steps are copied from ``init``
        (zeros when omitted); every later step is predicted from prior
        predictions and the exogenous series. Strictly sequential.
        """
        self._check_fitted()
        self._check_dt(exogenous)
        n = self._free_run_start()
        n_steps = exogenous.n_steps
        if n_steps <= n:
            raise ValidationError(f"horizon of {n_steps} steps is within the "
                                  f"{n}-step initialization window")
        y = np.empty(n_steps)
        y[:n] = self._prepare_init(init, n)
        ar = np.asarray(self.layout_.autoregressive.lags, dtype=np.int64)
        exo_cols, exo_lags = self._exo_index(exogenous)
        guard = self.blowup_factor * self.output_scale_
        exo_vals = exogenous.values
        for t in range(n, n_steps):
            phi = np.concatenate([y[t - ar], exo_vals[t - exo_lags, exo_cols]])
            value = float(self.predict_one_step(phi))
            if not np.isfinite(value) or abs(value) > guard:
                raise NumericBlowupError(
                    f"|prediction| {abs(value):.3e} exceeded the instability "
                    f"guard {guard:.3e} at step {t}"
                )
            y[t] = value
        return UniformSeries(
            exogenous.dt, exogenous.t0, y, (getattr(self, "output_name_", "y"),)
        )

    predict = free_run  # sklearn-flavoured alias

    def teacher_forced(self, exogenous, output):
        """One-step predictions with true outputs as the autoregressive feed.

        Steps below the layout's maximum lag are copied from ``output``;
        each later step applies :meth:`predict_one_step` to the regressor
        built from the *true* series, never from prior predictions.
        """
        self._check_fitted()
        self._check_dt(exogenous)
        m = self.layout_.max_lag
        y_true = output.values[:, 0]
        n_steps = output.n_steps
        y = np.empty(n_steps)
        y[:m] = y_true[:m]
        ar = np.asarray(self.layout_.autoregressive.lags, dtype=np.int64)
        exo_cols, exo_lags = self._exo_index(exogenous)
        exo_vals = exogenous.values
        for t in range(m, n_steps):
            phi = np.concatenate([y_true[t - ar], exo_vals[t - exo_lags, exo_cols]])
            y[t] = float(self.predict_one_step(phi))
        return UniformSeries(exogenous.dt, exogenous.t0, y, output.channel_names)

    def _exo_index(self, exogenous):
        """Flattened (column, lag) index pairs for the exogenous terms."""
        cols, lags = [], []
        for ch, lagset in self.layout_.exogenous:
            if ch not in exogenous.channel_names:
                raise ChannelMissingError(
                    f"channel {ch!r} not in {exogenous.channel_names}"
                )
            j = exogenous.channel_names.index(ch)
            for l in lagset:
                cols.append(j)
                lags.append(l)
        return np.asarray(cols, dtype=np.int64), np.asarray(lags, dtype=np.int64)

    # --------------------------------------------------------------------- io
    def to_dict(self):
        """Self-describing JSON-ready payload (explicit exponent vectors)."""
        self._check_fitted()
        return {
            "schema": MODEL_SCHEMA,
            "ar_lags": list(self.layout_.autoregressive.lags),
            "exo_lags": [[ch, list(lags)] for ch, lags in self.layout_.exogenous],
            "degree": self.degree,
            "interaction": self.interaction,
            "include_constant": self.include_constant,
            "standardize": self.standardize,
            "blowup_factor": self.blowup_factor,
            "exponents": self.exponents_.tolist(),
            "coefficients": [float(c) for c in self.coefficients_],
            "scaler_mean": [float(v) for v in self.scaler_mean_],
            "scaler_scale": [float(v) for v in self.scaler_scale_],
            "target_shift": self.target_shift_,
            "output_scale": self.output_scale_,
            "output_name": getattr(self, "output_name_", "y"),
            "dt": self.dt_,
            "fit_report": self.fit_report_,
        }

    @classmethod
    def from_dict(cls, payload):
        if payload.get("schema") != MODEL_SCHEMA:
            raise ValidationError(f"unsupported model schema {payload.get('schema')!r}")
        model = cls(
            ar_lags=tuple(payload["ar_lags"]),
            exo_lags=tuple((ch, tuple(lags)) for ch, lags in payload["exo_lags"]),
            degree=payload["degree"],
            interaction=payload["interaction"],
            include_constant=payload["include_constant"],
            standardize=payload["standardize"],
            blowup_factor=payload["blowup_factor"],
        )
        exponents = np.asarray(payload["exponents"], dtype=np.int64)
        coefficients = np.asarray(payload["coefficients"], dtype=np.float64)
        if exponents.shape[0] != coefficients.shape[0]:
            raise ValidationError(
                f"{coefficients.shape[0]} coefficients for "
                f"{exponents.shape[0]} basis terms"
            )
        model.layout_ = model._resolved_layout()
        model.exponents_ = exponents
        model.coefficients_ = coefficients
        model.scaler_mean_ = np.asarray(payload["scaler_mean"], dtype=np.float64)
        model.scaler_scale_ = np.asarray(payload["scaler_scale"], dtype=np.float64)
        model.target_shift_ = payload["target_shift"]
        model.output_scale_ = payload["output_scale"]
        model.output_name_ = payload["output_name"]
        model.dt_ = payload["dt"]
        model.fit_report_ = payload["fit_report"]
        return model


def save_model(model, path):
    """Write a fitted model to a JSON file (coefficient round-trip exact)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(model.to_dict(), fh, indent=2)
        fh.write("\n")


def load_model(path):
    with open(path) as fh:
        return PolynomialNarx.from_dict(json.load(fh))
