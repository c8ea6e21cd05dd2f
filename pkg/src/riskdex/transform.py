"""Ranking, quintile conversion and weight adjustment."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, NamedTuple

from .model import (
    US,
    PsDef,
    RiskdexError,
    TieBreak,
    VariantConfig,
    canonical_index,
    catalog,
)

N52_SCHEME: tuple[int, ...] = (11, 10, 10, 10, 11)
COMPONENT_SLACK = 0.005


class DegenerateWeightsError(RiskdexError, ValueError):
    def __init__(self, entity: str | None = None):
        self.entity = entity
        who = f" for {entity}" if entity else ""
        super().__init__(f"all weights are zero{who}; cannot scale")


@dataclass(frozen=True)
class RankedEntry:
    entity: str
    value: float
    rank: int


@dataclass(frozen=True)
class RankedColumn:
    ps_id: int | None
    entries: tuple[RankedEntry, ...]

    @property
    def n(self) -> int:
        return len(self.entries)

    @property
    def order(self) -> list[str]:
        return [e.entity for e in self.entries]

    def rank_of(self, code: str) -> int:
        for e in self.entries:
            if e.entity == code:
                return e.rank
        raise KeyError(code)


def _sort_key(tie_break: TieBreak, tie_order: Mapping[str, int] | None):
    if tie_break is TieBreak.REVERSE_CANONICAL:
        return lambda item: (item[1], -canonical_index(item[0]))
    if tie_break is TieBreak.PUBLISHED and tie_order:
        # entities missing from the published order go after it, canonically
        n = len(tie_order)
        return lambda item: (item[1], tie_order.get(item[0], n + canonical_index(item[0])))
    return lambda item: (item[1], canonical_index(item[0]))


def rank_entities(column: Mapping[str, float], include_us: bool = True,
                  tie_break: TieBreak = TieBreak.CANONICAL,
                  ps_id: int | None = None,
                  tie_order: Mapping[str, int] | None = None) -> RankedColumn:
    """Rank a column ascending.

    Equal values are ordered by canonical entity order, its reverse, or a
    supplied position map (``tie_order``) for the published tie-break.
    """
    items = [(code, v) for code, v in column.items() if include_us or code != US]
    items.sort(key=_sort_key(TieBreak(tie_break), tie_order))
    return RankedColumn(ps_id, tuple(
        RankedEntry(code, value, rank) for rank, (code, value) in enumerate(items, start=1)
    ))


def bucket_sizes(n: int, cfg: VariantConfig | None = None) -> tuple[int, ...]:
    if n == 52:
        return N52_SCHEME
    if n == 51:
        return (cfg or VariantConfig()).quintile_n51_scheme
    raise ValueError(f"no quintile scheme defined for {n} entities (expected 51 or 52)")


def quintiles_from_ranking(ranked: RankedColumn, sizes: tuple[int, ...]) -> dict[str, int]:
    if sum(sizes) != ranked.n:
        raise ValueError(f"bucket sizes {sizes} do not sum to {ranked.n}")
    out: dict[str, int] = {}
    bounds = []
    upper = 0
    for size in sizes:
        upper += size
        bounds.append(upper)
    bucket = 0
    for entry in ranked.entries:
        while entry.rank > bounds[bucket]:
            bucket += 1
        out[entry.entity] = bucket + 1
    return out


def quintile_transform(column: Mapping[str, float], cfg: VariantConfig | None = None,
                       tie_order: Mapping[str, int] | None = None) -> dict[str, int]:
    """Positional quintiles 1..5 for one statistic.

    With US included, 52 entities are bucketed 11/10/10/10/11 from the
    smallest value up; with US excluded the configured 51-entity scheme is
    used and US gets no quintile.
    """
    cfg = cfg or VariantConfig()
    ranked = rank_entities(column, cfg.include_us_in_quintiles, cfg.tie_break,
                           tie_order=tie_order)
    return quintiles_from_ranking(ranked, bucket_sizes(ranked.n, cfg))


class Component2010(NamedTuple):
    value: float
    inconsistent: bool


def derive_2010_component(c2020: float, diff: float) -> Component2010:
    value = c2020 - diff
    return Component2010(value, value < -COMPONENT_SLACK)


def zeroed_ids(ps_values: Mapping[int, float], defs: list[PsDef] | None = None,
               nonpositive: bool = False) -> frozenset[int]:
    kinds = {d.id: d for d in (defs or catalog())}
    return frozenset(
        ps for ps, v in ps_values.items()
        if kinds[ps].is_difference and (v <= 0 if nonpositive else v < 0)
    )


def zero_negative_weights(weights: Mapping[int, float], ps_values: Mapping[int, float],
                          defs: list[PsDef] | None = None,
                          nonpositive: bool = False) -> dict[int, float]:
    """Set the weight of a 2020-minus-2010 statistic to 0 where the difference is negative.

    ``nonpositive`` also zeroes exact zero differences.
    """
    if set(weights) != set(ps_values):
        raise ValueError("weight and value rows are not aligned on the same statistics")
    drop = zeroed_ids(ps_values, defs, nonpositive)
    return {ps: 0.0 if ps in drop else w for ps, w in weights.items()}


def scale_weights(weights: Mapping[int, float], entity: str | None = None) -> dict[int, float]:
    total = sum(weights.values())
    if total <= 0:
        raise DegenerateWeightsError(entity)
    return {ps: w / total for ps, w in weights.items()}


def ps1_from_maf_counts(deletes: float, adds: float, common: float) -> float:
    """Percent of addresses found on only one of the two address-file snapshots."""
    if min(deletes, adds, common) < 0:
        raise ValueError("address counts must be nonnegative")
    total = deletes + adds + common
    if total <= 0:
        raise ValueError("address counts are all zero")
    return 100.0 * (deletes + adds) / total
