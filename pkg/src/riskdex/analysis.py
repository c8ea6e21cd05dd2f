"""Descriptive statistics, top lists and correlations over the state tables."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .model import PS_IDS, US, RiskdexError, SpsResult, TieBreak
from .transform import rank_entities


class UndefinedCorrelationError(RiskdexError, ValueError):
    pass


@dataclass(frozen=True)
class PsSummary:
    ps_id: int | None
    mean: float
    min: float
    max: float
    range: float
    relative_range: float


def summary_stats(column: Mapping[str, float], ps_id: int | None = None,
                  exclude_us: bool = True) -> PsSummary:
    """Mean, extremes and range over the column.

    The relative range is range / mean with the sign of the mean kept, so a
    statistic with a negative average has a negative relative range. A zero
    range gives 0 regardless of the mean.
    """
    values = [v for code, v in column.items() if not (exclude_us and code == US)]
    if not values:
        raise ValueError("empty column")
    mean = math.fsum(values) / len(values)
    lo, hi = min(values), max(values)
    spread = hi - lo
    if spread == 0:
        rel = 0.0
    elif mean == 0:
        rel = math.copysign(math.inf, spread)
    else:
        rel = spread / mean
    return PsSummary(ps_id, mean, lo, hi, spread, rel)


def top_quintile(column: Mapping[str, float], k: int,
                 rel_diff: Mapping[str, float] | None = None,
                 tie_break: TieBreak = TieBreak.CANONICAL,
                 tie_order: Mapping[str, int] | None = None) -> list[tuple[str, float | None]]:
    """Top ``k`` states by descending value, paired with their relative difference.

    The list is the reversed tail of the ascending ranking, so ties resolve the
    same way as in :func:`riskdex.transform.rank_entities`.
    """
    states = {code: v for code, v in column.items() if code != US}
    if not 0 <= k <= len(states):
        raise ValueError(f"k must be between 0 and {len(states)}, got {k}")
    ascending = rank_entities(states, include_us=False, tie_break=tie_break,
                              tie_order=tie_order).order
    top = ascending[::-1][:k]
    return [(code, None if rel_diff is None else rel_diff[code]) for code in top]


def _check_pair(x: Sequence[float], y: Sequence[float]) -> None:
    if len(x) != len(y):
        raise ValueError(f"length mismatch: {len(x)} vs {len(y)}")
    if len(x) < 2:
        raise ValueError("need at least two observations")


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    _check_pair(x, y)
    n = len(x)
    mx = math.fsum(x) / n
    my = math.fsum(y) / n
    dx = [a - mx for a in x]
    dy = [b - my for b in y]
    sxx = math.fsum(d * d for d in dx)
    syy = math.fsum(d * d for d in dy)
    if sxx == 0 or syy == 0:
        raise UndefinedCorrelationError("correlation is undefined for a constant vector")
    r = math.fsum(a * b for a, b in zip(dx, dy)) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def average_ranks(values: Sequence[float]) -> list[float]:
    """1-based ranks; tied values share the mean of their positions."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        mean_rank = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = mean_rank
        i = j + 1
    return ranks


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    _check_pair(x, y)
    return pearson(average_ranks(x), average_ranks(y))


CORRELATIONS = {"pearson": pearson, "spearman": spearman}


@dataclass(frozen=True)
class WeightProfile:
    ps_id: int
    mean: float
    min: float
    max: float


def weight_profile(result: SpsResult) -> list[WeightProfile]:
    codes = [c for c in result.entities if c != US]
    out = []
    for ps in PS_IDS:
        ws = [result.scaled_weights[c, ps] for c in codes]
        out.append(WeightProfile(ps, math.fsum(ws) / len(ws), min(ws), max(ws)))
    return out
