"""Which lexical categories attention heads point at, layer by layer."""

from ._lexattn import (
    Analysis,
    AnalysisError,
    BundleError,
    CategoryMap,
    CategoryMapError,
    ReportError,
    Violation,
    analyze,
    compare,
    gen_fixture,
    mean_over_heads,
    plot,
    select_attended_word,
    top_layers,
    validate,
)

__all__ = [
    "Analysis",
    "AnalysisError",
    "BundleError",
    "CategoryMap",
    "CategoryMapError",
    "ReportError",
    "Violation",
    "analyze",
    "compare",
    "gen_fixture",
    "mean_over_heads",
    "plot",
    "select_attended_word",
    "top_layers",
    "validate",
]
