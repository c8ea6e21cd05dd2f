"""Summary statistic, phase decomposition and variant reconciliation."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .analysis import spearman
from .ingest import DataBundle
from .model import (
    PHASES,
    PS_IDS,
    STATE_CODES,
    US,
    Phase,
    PsDef,
    QuintileMatrix,
    SpsResult,
    TieBreak,
    UsSps,
    VariantConfig,
    WeightSource,
    catalog,
    default_variant_grid,
)
from .transform import (
    DegenerateWeightsError,
    quintile_transform,
    scale_weights,
    zero_negative_weights,
    zeroed_ids,
)

log = logging.getLogger(__name__)

WORKED_EXAMPLE_STATE = "AL"
WORKED_EXAMPLE_SPS = 2.38


class MisalignedRowsError(ValueError):
    pass


def compute_sps(q: Mapping[int, int], w: Mapping[int, float]) -> float:
    if set(q) != set(w):
        raise MisalignedRowsError(
            f"quintile row covers {sorted(q)} but weight row covers {sorted(w)}"
        )
    return math.fsum(w[ps] * q[ps] for ps in sorted(w))


def decompose(q: Mapping[int, int], w: Mapping[int, float],
              defs: list[PsDef] | None = None) -> dict[Phase, float]:
    """Share of the summary statistic (in percent) contributed by each phase."""
    total = compute_sps(q, w)
    phase_of = {d.id: d.phase for d in (defs or catalog())}
    sums = {phase: [] for phase in PHASES}
    for ps in sorted(w):
        sums[phase_of[ps]].append(w[ps] * q[ps])
    return {phase: 100.0 * math.fsum(parts) / total for phase, parts in sums.items()}


def decompose_phase_sums(phase_sums: Sequence[float], sps: float) -> list[float]:
    """Percentages from already-summed phase contributions."""
    return [100.0 * s / sps for s in phase_sums]


def published_tie_order(bundle: DataBundle, ps: int) -> dict[str, int] | None:
    entries = bundle.published.profile_orders.get(ps)
    if not entries:
        return None
    return {e.state: i for i, e in enumerate(entries)}


def compute_quintiles(bundle: DataBundle, cfg: VariantConfig) -> QuintileMatrix:
    q: dict[tuple[str, int], int] = {}
    for ps in PS_IDS:
        tie_order = published_tie_order(bundle, ps) if cfg.tie_break is TieBreak.PUBLISHED else None
        for code, rank in quintile_transform(bundle.ps.column(ps), cfg, tie_order).items():
            q[code, ps] = rank
    return QuintileMatrix(q)


def _us_raw_weights(bundle: DataBundle) -> dict[int, float] | None:
    """National weight row from the other tables, if every statistic has a source."""
    row: dict[int, float] = {}
    for d in catalog():
        if d.weight_source is WeightSource.SELF_VALUE:
            row[d.id] = bundle.ps.values[US, d.id]
        elif d.weight_source is WeightSource.COMPONENT_2020:
            row[d.id] = bundle.components.values[US, d.id]
        else:
            return None
    return row


def run_variant(bundle: DataBundle, cfg: VariantConfig | None = None) -> SpsResult:
    cfg = cfg or VariantConfig()
    quintiles = compute_quintiles(bundle, cfg)
    sps: dict[str, float] = {}
    phase_pct: dict[tuple[str, Phase], float] = {}
    zeroed: dict[str, frozenset[int]] = {}
    scaled: dict[tuple[str, int], float] = {}

    rows: list[tuple[str, dict[int, float]]] = [
        (code, bundle.weights.row(code)) for code in STATE_CODES
    ]
    if cfg.us_sps is UsSps.DERIVE:
        us_row = _us_raw_weights(bundle) if cfg.include_us_in_quintiles else None
        if us_row is None:
            log.info("US weights cannot be derived from the published tables; US skipped")
        else:
            rows.insert(0, (US, us_row))

    for code, raw in rows:
        values = bundle.ps.row(code)
        if cfg.zero_negative_weights:
            adjusted = zero_negative_weights(raw, values, nonpositive=cfg.zero_nonpositive)
            zeroed[code] = zeroed_ids(values, nonpositive=cfg.zero_nonpositive)
        else:
            adjusted = dict(raw)
            zeroed[code] = frozenset()
        if cfg.rescale_after_zeroing:
            w = scale_weights(adjusted, entity=code)
        else:
            total = sum(raw.values())
            if total <= 0 or not any(adjusted.values()):
                raise DegenerateWeightsError(code)
            w = {ps: v / total for ps, v in adjusted.items()}
        q = quintiles.row(code)
        sps[code] = compute_sps(q, w)
        for phase, pct in decompose(q, w).items():
            phase_pct[code, phase] = pct
        for ps, value in w.items():
            scaled[code, ps] = value

    return SpsResult(cfg, sps, phase_pct, zeroed, scaled, quintiles)


@dataclass(frozen=True)
class VariantSummary:
    config: VariantConfig
    sps: Mapping[str, float]
    max_abs_delta: float
    mean_abs_delta: float
    spearman: float
    worst: tuple[tuple[str, float], ...]

    @property
    def label(self) -> str:
        return self.config.label


@dataclass(frozen=True)
class ReconciliationReport:
    variants: tuple[VariantSummary, ...]
    best_variant: str
    published: Mapping[str, float]
    worked_example: tuple[str, float]

    @property
    def best(self) -> VariantSummary:
        return next(v for v in self.variants if v.label == self.best_variant)

    @property
    def entities(self) -> list[str]:
        return list(STATE_CODES)


def reconcile(bundle: DataBundle, cfgs: Sequence[VariantConfig] | None = None,
              n_worst: int = 5) -> ReconciliationReport:
    cfgs = list(cfgs) if cfgs is not None else default_variant_grid()
    if not cfgs:
        raise ValueError("at least one variant is required")
    published = bundle.published.published_sps
    summaries = []
    for cfg in cfgs:
        result = run_variant(bundle, cfg)
        codes = [c for c in STATE_CODES if c in result.sps]
        deltas = {c: result.sps[c] - published[c] for c in codes}
        abs_d = [abs(d) for d in deltas.values()]
        worst = sorted(deltas.items(), key=lambda kv: (-abs(kv[1]), kv[0]))[:n_worst]
        summaries.append(VariantSummary(
            config=cfg,
            sps={c: result.sps[c] for c in codes},
            max_abs_delta=max(abs_d),
            mean_abs_delta=math.fsum(abs_d) / len(abs_d),
            spearman=spearman([result.sps[c] for c in codes], [published[c] for c in codes]),
            worst=tuple(worst),
        ))
    best = min(summaries, key=lambda s: (s.max_abs_delta, s.mean_abs_delta))
    return ReconciliationReport(
        variants=tuple(summaries),
        best_variant=best.label,
        published=dict(published),
        worked_example=(WORKED_EXAMPLE_STATE, WORKED_EXAMPLE_SPS),
    )
