"""Sustainable basket recommendations via multi-objective optimization."""

from .domain import (
    AnchorContext,
    Catalog,
    Recommendation,
    evaluate_objectives,
    feature_ratio,
    feature_totals,
)
from .evo import GaConfig, run_rnsga2
from .g3a import G3aConfig, run_g3a
from .mones import NesConfig, run_mones
from .pareto import acceptability_filter, dominates, non_dominated_sort

__version__ = "0.1.0"

__all__ = [
    "AnchorContext",
    "Catalog",
    "GaConfig",
    "G3aConfig",
    "NesConfig",
    "Recommendation",
    "acceptability_filter",
    "dominates",
    "evaluate_objectives",
    "feature_ratio",
    "feature_totals",
    "non_dominated_sort",
    "run_g3a",
    "run_mones",
    "run_rnsga2",
]
