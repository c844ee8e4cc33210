"""Symbolic regression by uniform random global search."""

from srurgs.errors import (
    ConfigurationError,
    DatasetError,
    ExpressionSyntaxError,
    FitFailed,
    GenerationError,
    MergeError,
    NonFiniteEvaluation,
    SchemaError,
    SRURGSError,
    StoreError,
)
from srurgs.space import SearchSpaceConfig

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "DatasetError",
    "ExpressionSyntaxError",
    "FitFailed",
    "GenerationError",
    "MergeError",
    "NonFiniteEvaluation",
    "SchemaError",
    "SRURGSError",
    "SearchSpaceConfig",
    "StoreError",
]
