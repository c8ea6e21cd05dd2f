"""Process-statistic risk scoring for census quality tables."""

from __future__ import annotations

from .model import (
    DEFAULT_VARIANT,
    ENTITIES,
    PUBLISHED_RULES,
    Phase,
    PsDef,
    SpsResult,
    TieBreak,
    UsSps,
    VariantConfig,
    canonical_index,
    catalog,
    default_variant_grid,
    extended_variant_grid,
)

__all__ = [
    "DEFAULT_VARIANT",
    "ENTITIES",
    "PUBLISHED_RULES",
    "Phase",
    "PsDef",
    "SpsResult",
    "TieBreak",
    "UsSps",
    "VariantConfig",
    "canonical_index",
    "catalog",
    "default_variant_grid",
    "extended_variant_grid",
    "__version__",
]

__version__ = "0.1.0"
