"""Chained surrogate over an incrementally built exogenous-input manifold.

A plan lists auxiliary stages in construction order. Each stage is either a
direct transform of earlier channels or an intermediate model whose output
becomes a new manifold channel; a final model targets the quantity of
interest. Training processes stages in order against experimental-design
ground truth (teacher forcing: intermediate models are fitted on, and later
stages consume, the *true* auxiliary series). Prediction evaluates the
fitted chain sequentially, each stage consuming *predicted* upstream
channels.

Chains are acyclic by construction: a stage may reference only raw channels
and outputs of strictly earlier stages. Mutually dependent auxiliary
quantities (alternating one-step prediction of a coupled pair) are a
documented extension point, not implemented here.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .dct2 import DctReduction
from .exceptions import (
    ChannelMissingError,
    CyclicPlanError,
    MissingGroundTruthError,
    MnarxError,
    ValidationError,
)
from .narx import PolynomialNarx
from .transforms import apply_transform, transform_output_names

__all__ = [
    "TransformStage",
    "ModelStage",
    "ManifoldPlan",
    "ManifoldNarx",
    "save_manifold",
    "load_manifold",
    "plan_to_dict",
    "plan_from_dict",
]

PLAN_SCHEMA = "mnarx-plan-v1"


@dataclass(frozen=True)
class TransformStage:
    """Direct transform of existing manifold channels (no fitted parameters)."""

    name: str
    transform: str
    inputs: tuple
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        if len(self.inputs) != 1:
            raise ValidationError(
                f"stage {self.name!r}: transforms take exactly one input channel"
            )
        # Validates the transform id and parameter shape up front.
        transform_output_names(self.transform, self.name, self.params)

    @property
    def output_names(self):
        return transform_output_names(self.transform, self.name, self.params)


@dataclass(frozen=True)
class ModelStage:
    """Intermediate (or final) polynomial NARX stage.

    ``narx`` holds :class:`~mnarx.narx.PolynomialNarx` constructor
    parameters; its ``exo_lags`` keys are the manifold channels the stage
    consumes. The stage's own name is its output channel, and during
    training the experimental design must supply that channel as ground
    truth.
    """

    name: str
    narx: dict
    init: str = "zeros"

    def __post_init__(self):
        if self.init not in ("zeros", "provided"):
            raise ValidationError(
                f"stage {self.name!r}: init must be 'zeros' or 'provided'"
            )
        if "exo_lags" not in self.narx:
            raise ValidationError(f"stage {self.name!r}: narx params need exo_lags")
        # Canonical immutable form so equal plans compare equal after IO.
        narx = dict(self.narx)
        exo = narx["exo_lags"] or ()
        if isinstance(exo, dict):
            exo = tuple(exo.items())
        narx["exo_lags"] = tuple((str(ch), tuple(lags)) for ch, lags in exo)
        if "ar_lags" in narx:
            narx["ar_lags"] = tuple(narx["ar_lags"])
        object.__setattr__(self, "narx", narx)

    @property
    def inputs(self):
        exo = self.narx["exo_lags"]
        return tuple(exo) if isinstance(exo, dict) else tuple(ch for ch, _ in exo)

    @property
    def output_names(self):
        return (self.name,)


@dataclass(frozen=True)
class ManifoldPlan:
    """Ordered stage list culminating in the final surrogate.

    Parameters
    ----------
    raw_channels : tuple of str
        Exogenous input channels the chain starts from. When ``reduction``
        is set these are the spatial-mode channels it produces.
    stages : tuple of TransformStage/ModelStage
        Auxiliary stages in construction order.
    final : ModelStage
        The surrogate for the quantity of interest; may reference any
        manifold channel.
    reduction : DctReduction or None
        Optional spatial reduction applied upstream (by the CLI or caller)
        to turn field-valued inputs into the raw channels; recorded here so
        persisted chains are self-describing.
    """

    raw_channels: tuple
    stages: tuple = ()
    final: ModelStage = None
    reduction: DctReduction = None

    def __post_init__(self):
        object.__setattr__(self, "raw_channels", tuple(self.raw_channels))
        object.__setattr__(self, "stages", tuple(self.stages))
        if self.final is None or not isinstance(self.final, ModelStage):
            raise ValidationError("plan needs a final ModelStage")
        available = set(self.raw_channels)
        if len(available) != len(self.raw_channels):
            raise ValidationError(f"duplicate raw channels: {self.raw_channels}")
        for pos, stage in enumerate(self.stages):
            for ch in stage.inputs:
                if ch not in available:
                    raise CyclicPlanError(
                        f"stage {stage.name!r} (position {pos}) references "
                        f"channel {ch!r}, which is not a raw channel or an "
                        "earlier stage output"
                    )
            for out in stage.output_names:
                if out in available:
                    raise ValidationError(
                        f"stage {stage.name!r} output {out!r} clashes with an "
                        "existing channel"
                    )
                available.add(out)
        for ch in self.final.inputs:
            if ch not in available:
                raise CyclicPlanError(
                    f"final stage {self.final.name!r} references channel "
                    f"{ch!r}, which no stage provides"
                )

    @property
    def model_stages(self):
        return tuple(s for s in self.stages if isinstance(s, ModelStage))


def _stage_to_dict(stage):
    if isinstance(stage, TransformStage):
        return {
            "kind": "transform",
            "name": stage.name,
            "transform": stage.transform,
            "inputs": list(stage.inputs),
            "params": stage.params,
        }
    return {
        "kind": "model",
        "name": stage.name,
        "init": stage.init,
        "narx": _narx_params_to_dict(stage.narx),
    }


def _narx_params_to_dict(narx):
    out = dict(narx)
    exo = out.get("exo_lags") or ()
    if isinstance(exo, dict):
        exo = tuple(exo.items())
    out["exo_lags"] = [[ch, list(lags)] for ch, lags in exo]
    if "ar_lags" in out:
        out["ar_lags"] = list(out["ar_lags"])
    return out


def _stage_from_dict(payload):
    kind = payload.get("kind")
    if kind == "transform":
        return TransformStage(
            payload["name"],
            payload["transform"],
            tuple(payload["inputs"]),
            dict(payload.get("params", {})),
        )
    if kind == "model":
        narx = dict(payload["narx"])
        narx["exo_lags"] = tuple((ch, tuple(lags)) for ch, lags in narx["exo_lags"])
        if "ar_lags" in narx:
            narx["ar_lags"] = tuple(narx["ar_lags"])
        return ModelStage(payload["name"], narx, payload.get("init", "zeros"))
    raise ValidationError(f"unknown stage kind {kind!r}")


def plan_to_dict(plan):
    payload = {
        "schema": PLAN_SCHEMA,
        "raw_channels": list(plan.raw_channels),
        "reduction": None,
        "stages": [_stage_to_dict(s) for s in plan.stages],
        "final": _stage_to_dict(plan.final),
    }
    if plan.reduction is not None:
        r = plan.reduction
        payload["reduction"] = {
            "n_i": r.n_i, "n_j": r.n_j, "nu_y": r.nu_y, "nu_z": r.nu_z,
        }
    return payload


def plan_from_dict(payload):
    if payload.get("schema") != PLAN_SCHEMA:
        raise ValidationError(f"unsupported plan schema {payload.get('schema')!r}")
    reduction = None
    if payload.get("reduction"):
        r = payload["reduction"]
        reduction = DctReduction(r["n_i"], r["n_j"], r["nu_y"], r["nu_z"])
    return ManifoldPlan(
        tuple(payload["raw_channels"]),
        tuple(_stage_from_dict(s) for s in payload["stages"]),
        _stage_from_dict(payload["final"]),
        reduction,
    )


class ManifoldNarx(BaseEstimator):
    """Chain of transforms and polynomial NARX models executed over a plan.

    Parameters
    ----------
    plan : ManifoldPlan
        Stage definitions; an empty stage list degenerates to a plain
        polynomial NARX on the raw channels.
    sample_count, sample_mode, seed
        Default design-row subsampling applied to every model stage that
        does not set its own (see :class:`~mnarx.narx.PolynomialNarx`).

    Attributes
    ----------
    stage_models_ : dict
        Fitted :class:`PolynomialNarx` per intermediate model stage.
    final_model_ : PolynomialNarx
        Fitted surrogate for the target channel.
    fit_log_ : list of dict
        Per-stage record of what each training step consumed; intermediate
        inputs always read the experimental design's ground truth.
    last_predict_log_ : list of dict
        Same record for the most recent prediction; intermediate inputs
        are the chain's own upstream predictions.
    """

    def __init__(self, plan, sample_count=None, sample_mode="random", seed=0):
        self.plan = plan
        self.sample_count = sample_count
        self.sample_mode = sample_mode
        self.seed = seed

    def _check_fitted(self):
        if not hasattr(self, "final_model_"):
            raise NotFittedError("this ManifoldNarx instance is not fitted yet")

    def _make_stage_model(self, stage):
        params = dict(stage.narx)
        params.setdefault("sample_count", self.sample_count)
        params.setdefault("sample_mode", self.sample_mode)
        params.setdefault("seed", self.seed)
        return PolynomialNarx(**params)

    @staticmethod
    def _channels_of(realization, names, what):
        for ch in names:
            if ch not in realization.channel_names:
                raise ChannelMissingError(f"{what}: channel {ch!r} missing")
        return realization.select(names)

    def fit(self, realizations):
        """Train every stage in plan order on experimental-design data.

        Each realization is one multi-channel series holding the raw
        channels, ground truth for every model stage (its name), and the
        final target channel. Transform stages extend the manifold from
        the data; model stages are fitted with the true series as both
        regression target and downstream input (teacher forcing).
        """
        plan = self.plan
        if not realizations:
            raise ValidationError("need at least one realization")
        manifolds = []
        for r in realizations:
            for ch in plan.raw_channels:
                if ch not in r.channel_names:
                    raise ChannelMissingError(f"realization lacks raw channel {ch!r}")
            for stage in plan.model_stages + (plan.final,):
                if stage.name not in r.channel_names:
                    raise MissingGroundTruthError(
                        f"experimental design lacks ground truth for "
                        f"intermediate output {stage.name!r}"
                    )
            manifolds.append(r.select(plan.raw_channels))
        self.stage_models_ = {}
        self.fit_log_ = []
        for stage in plan.stages:
            if isinstance(stage, TransformStage):
                manifolds = [
                    self._extend(m, apply_transform(
                        stage.transform, m.select(stage.inputs),
                        stage.params, stage.name,
                    ))
                    for m in manifolds
                ]
                self.fit_log_.append(
                    {"stage": stage.name, "kind": "transform", "inputs": "ed-truth"}
                )
            else:
                model = self._make_stage_model(stage)
                model.fit([
                    (m, r.select([stage.name]))
                    for m, r in zip(manifolds, realizations)
                ])
                self.stage_models_[stage.name] = model
                # Later stages read the true series, not this fit's output.
                manifolds = [
                    self._extend(m, r.select([stage.name]))
                    for m, r in zip(manifolds, realizations)
                ]
                self.fit_log_.append(
                    {"stage": stage.name, "kind": "model",
                     "inputs": "ed-truth", "target": "ed-truth"}
                )
        final = self._make_stage_model(plan.final)
        final.fit([
            (m, r.select([plan.final.name]))
            for m, r in zip(manifolds, realizations)
        ])
        self.final_model_ = final
        self.fit_log_.append(
            {"stage": plan.final.name, "kind": "model",
             "inputs": "ed-truth", "target": "ed-truth"}
        )
        return self

    @staticmethod
    def _extend(manifold, extra):
        return manifold.with_channels(
            {ch: extra.channel(ch) for ch in extra.channel_names}
        )

    def predict_with_traces(self, x, inits=None, final_init=None):
        """Run the fitted chain on raw inputs, returning all stage traces.

        Stages execute in plan order, each consuming *predicted* upstream
        channels. ``inits`` maps a model stage name to its initialization
        values (required for stages declared ``init="provided"``, zeros
        otherwise); ``final_init`` initializes the final surrogate.

        Returns ``(prediction, traces)`` where ``traces`` maps every
        auxiliary channel name to its series.
        """
        self._check_fitted()
        plan = self.plan
        inits = dict(inits or {})
        manifold = self._channels_of(x, plan.raw_channels, "input")
        traces = {}
        log = []
        for stage in plan.stages:
            if isinstance(stage, TransformStage):
                out = apply_transform(
                    stage.transform, manifold.select(stage.inputs),
                    stage.params, stage.name,
                )
                log.append(
                    {"stage": stage.name, "kind": "transform", "inputs": "predicted"}
                )
            else:
                init = self._stage_init(stage, inits)
                model = self.stage_models_[stage.name]
                try:
                    out = model.free_run(manifold, init)
                except MnarxError as err:
                    raise type(err)(f"stage {stage.name!r}: {err}") from err
                log.append(
                    {"stage": stage.name, "kind": "model", "inputs": "predicted"}
                )
            manifold = self._extend(manifold, out)
            for ch in out.channel_names:
                traces[ch] = out.select([ch])
        prediction = self.final_model_.free_run(manifold, final_init)
        log.append(
            {"stage": plan.final.name, "kind": "model", "inputs": "predicted"}
        )
        self.last_predict_log_ = log  # single assignment: thread-safe to read
        return prediction, traces

    def predict(self, x, inits=None, final_init=None):
        """The final-stage prediction only (see :meth:`predict_with_traces`)."""
        return self.predict_with_traces(x, inits, final_init)[0]

    def _stage_init(self, stage, inits):
        if stage.name in inits:
            return np.asarray(inits[stage.name], dtype=np.float64)
        if stage.init == "provided":
            raise ValidationError(
                f"stage {stage.name!r} requires provided initial conditions"
            )
        return None


def save_manifold(manifold, outdir):
    """Persist a fitted chain as a directory: plan + one model file per stage."""
    from .narx import save_model

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "plan.json", "w") as fh:
        json.dump(plan_to_dict(manifold.plan), fh, indent=2)
        fh.write("\n")
    for name, model in manifold.stage_models_.items():
        save_model(model, outdir / f"stage_{name}.json")
    save_model(manifold.final_model_, outdir / "final.json")


def load_manifold(indir):
    from .narx import load_model

    indir = Path(indir)
    with open(indir / "plan.json") as fh:
        plan = plan_from_dict(json.load(fh))
    manifold = ManifoldNarx(plan)
    manifold.stage_models_ = {
        stage.name: load_model(indir / f"stage_{stage.name}.json")
        for stage in plan.model_stages
    }
    manifold.final_model_ = load_model(indir / "final.json")
    manifold.fit_log_ = None
    return manifold
