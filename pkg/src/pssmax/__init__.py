"""Transforms at the maximum of a spectrally negative self-similar process
absorbed at zero, verified against an exact-simulation Monte Carlo oracle."""

from .errors import (
    ConsistencyError,
    Degenerate,
    DomainError,
    ModelError,
    NoConvergence,
    NotFiniteVariation,
    PssmaxError,
    SchemaError,
    Unsupported,
)
from .factorization import (
    CallPayoff,
    ConstantPayoff,
    IndicatorPayoff,
    JumpAtMaxLaw,
    PowerPayoff,
    SupremumLaw,
    TabulatedPayoff,
    absorption_transform,
    absorption_transform_given,
    confined_absorption_transform,
    expected_peak_transform,
    expected_residual_transform,
    jump_at_max_law,
    lookback_price,
    peak_time_transform,
    residual_time_transform,
    residual_transform_iv,
    sup_moment_transform,
    supremum_law,
    upcross_transform,
)
from .models import (
    ExponentialNegative,
    FiniteMixture,
    JumpSpec,
    LevyModel,
    PointMassNegative,
    PssmpModel,
    atom_at_maximum,
    first_passage_transform,
    ladder_down_exponent,
    ladder_up_exponent,
    load_model,
    model_from_dict,
    model_to_dict,
)
from .series import SeriesTable, series_table

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "PssmaxError", "ModelError", "SchemaError", "NoConvergence", "Degenerate",
    "DomainError", "NotFiniteVariation", "ConsistencyError", "Unsupported",
    # models
    "ExponentialNegative", "PointMassNegative", "FiniteMixture", "JumpSpec",
    "LevyModel", "PssmpModel", "first_passage_transform", "atom_at_maximum",
    "ladder_up_exponent", "ladder_down_exponent", "load_model",
    "model_from_dict", "model_to_dict",
    # series
    "SeriesTable", "series_table",
    # factorization
    "SupremumLaw", "supremum_law", "JumpAtMaxLaw", "jump_at_max_law",
    "confined_absorption_transform", "residual_transform_iv", "upcross_transform",
    "peak_time_transform", "residual_time_transform", "absorption_transform_given",
    "absorption_transform", "sup_moment_transform", "lookback_price",
    "expected_peak_transform", "expected_residual_transform",
    "ConstantPayoff", "PowerPayoff", "CallPayoff", "IndicatorPayoff", "TabulatedPayoff",
]
