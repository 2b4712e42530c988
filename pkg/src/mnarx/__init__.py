"""Chained polynomial NARX surrogates over an exogenous-input manifold."""

from .basis import BasisSpec, basis_cardinality, enumerate_basis, eval_monomials
from .dct2 import (
    DctReducer,
    DctReduction,
    FieldSequence,
    dct2_forward,
    dct2_inverse,
    mode_channel_names,
    read_fields,
    reduce_fields,
    write_fields,
)
from .design import (
    DesignMatrix,
    LagSet,
    RegressorLayout,
    assemble_design,
    build_regressor,
    subsample,
)
from .manifold import (
    ManifoldNarx,
    ManifoldPlan,
    ModelStage,
    TransformStage,
    load_manifold,
    plan_from_dict,
    plan_to_dict,
    save_manifold,
)
from .metrics import ComparisonReport, TraceReport, compare, peak_abs, rmse, write_report
from .narx import PolynomialNarx, load_model, save_model
from .series import UniformSeries, read_series, resample_linear, write_series
from .springmass import (
    EdRealization,
    SimConfig,
    SineExcitation,
    SpringMassParams,
    build_ed,
    sample_excitation,
    simulate,
)
from .transforms import TRANSFORM_IDS, apply_transform, transform_output_names

__version__ = "0.1.0"

__all__ = [
    "BasisSpec",
    "basis_cardinality",
    "enumerate_basis",
    "eval_monomials",
    "DctReducer",
    "DctReduction",
    "FieldSequence",
    "dct2_forward",
    "dct2_inverse",
    "mode_channel_names",
    "read_fields",
    "reduce_fields",
    "write_fields",
    "DesignMatrix",
    "LagSet",
    "RegressorLayout",
    "assemble_design",
    "build_regressor",
    "subsample",
    "ManifoldNarx",
    "ManifoldPlan",
    "ModelStage",
    "TransformStage",
    "load_manifold",
    "plan_from_dict",
    "plan_to_dict",
    "save_manifold",
    "ComparisonReport",
    "TraceReport",
    "compare",
    "peak_abs",
    "rmse",
    "write_report",
    "PolynomialNarx",
    "load_model",
    "save_model",
    "UniformSeries",
    "read_series",
    "resample_linear",
    "write_series",
    "EdRealization",
    "SimConfig",
    "SineExcitation",
    "SpringMassParams",
    "build_ed",
    "sample_excitation",
    "simulate",
    "TRANSFORM_IDS",
    "apply_transform",
    "transform_output_names",
]
