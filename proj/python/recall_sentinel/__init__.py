"""Predicting drug recalls from aggregated search-query signals."""

from ._core import (
    ATTRIBUTE_COUNT,
    INTERACTION_DIM,
    Ensemble,
    Error,
    ParseError,
    ValidationError,
    attribute_names,
    interaction_map,
    kmeans,
    lift_at,
    normalize_text,
    rank_regression,
    roc_auc,
    run_command,
    spearman,
    spike_ratio,
    window_slope,
)

__all__ = [
    "ATTRIBUTE_COUNT",
    "INTERACTION_DIM",
    "Ensemble",
    "Error",
    "ParseError",
    "ValidationError",
    "attribute_names",
    "interaction_map",
    "kmeans",
    "lift_at",
    "normalize_text",
    "rank_regression",
    "roc_auc",
    "run_command",
    "spearman",
    "spike_ratio",
    "window_slope",
]
