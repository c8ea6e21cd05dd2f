"""Deterministic SVG output: profile bar charts, state grid cartograms, waffles.

Every renderer returns UTF-8 bytes built from a fixed element order and
fixed-precision coordinates, so identical inputs give identical files.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Mapping, Sequence
from xml.sax.saxutils import escape

from .model import STATE_CODES, RiskdexError

# lightest to darkest, one class per quintile
SHADES = ("#f1eef6", "#bdc9e1", "#74a9cf", "#2b8cbe", "#045a8d")
WAFFLE_COLORS = ("#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e",
                 "#e6ab02", "#a6761d", "#666666")

# (column, row) tiles in a rough map layout
GRID: dict[str, tuple[int, int]] = {
    "AK": (0, 0), "ME": (11, 0),
    "VT": (10, 1), "NH": (11, 1),
    "WA": (1, 2), "ID": (2, 2), "MT": (3, 2), "ND": (4, 2), "MN": (5, 2), "IL": (6, 2),
    "WI": (7, 2), "MI": (8, 2), "NY": (9, 2), "RI": (10, 2), "MA": (11, 2),
    "OR": (1, 3), "NV": (2, 3), "WY": (3, 3), "SD": (4, 3), "IA": (5, 3), "IN": (6, 3),
    "OH": (7, 3), "PA": (8, 3), "NJ": (9, 3), "CT": (10, 3),
    "CA": (1, 4), "UT": (2, 4), "CO": (3, 4), "NE": (4, 4), "MO": (5, 4), "KY": (6, 4),
    "WV": (7, 4), "VA": (8, 4), "MD": (9, 4), "DE": (10, 4),
    "AZ": (2, 5), "NM": (3, 5), "KS": (4, 5), "AR": (5, 5), "TN": (6, 5), "NC": (7, 5),
    "SC": (8, 5), "DC": (9, 5),
    "OK": (4, 6), "LA": (5, 6), "MS": (6, 6), "AL": (7, 6), "GA": (8, 6),
    "HI": (0, 7), "TX": (4, 7), "FL": (9, 7),
}


class MissingEntityError(RiskdexError, KeyError):
    pass


class ShareSumError(RiskdexError, ValueError):
    pass


def _n(x: float) -> str:
    """Fixed two-decimal coordinate with trailing zeros trimmed."""
    text = f"{x:.2f}".rstrip("0").rstrip(".")
    return "0" if text in ("", "-0") else text


def _doc(width: float, height: float, style: str, body: list[str], title: str) -> bytes:
    head = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'viewBox="0 0 {_n(width)} {_n(height)}" width="{_n(width)}" height="{_n(height)}">',
        f"<title>{escape(title)}</title>",
        f"<style>{style}</style>",
    ]
    return ("\n".join(head + body + ["</svg>"]) + "\n").encode("utf-8")


def _shade_style() -> str:
    rules = [f".q{i} {{ fill: {c}; }}" for i, c in enumerate(SHADES, start=1)]
    rules.append("text { font-family: sans-serif; font-size: 11px; }")
    return " ".join(rules)


# -- bar chart ---------------------------------------------------------------

BAR_CELL = 200.0
BAR_ROW = 14.0
BAR_LABEL = 150.0
BAR_VALUE = 60.0


def bar_svg(title: str, rows: Sequence[tuple[str, float, float, int]]) -> bytes:
    """One horizontal bar per row of (label, value, bar in [0, 1], quintile)."""
    top = 24.0
    width = BAR_LABEL + BAR_CELL + BAR_VALUE
    height = top + BAR_ROW * len(rows) + 6
    body = [f'<text x="4" y="16">{escape(title)}</text>']
    for i, (label, value, bar, quintile) in enumerate(rows):
        y = top + i * BAR_ROW
        body.append(
            f'<g><text x="{_n(BAR_LABEL - 4)}" y="{_n(y + 10)}" text-anchor="end">'
            f"{escape(label)}</text>"
            f'<rect class="q{quintile}" x="{_n(BAR_LABEL)}" y="{_n(y + 1)}" '
            f'width="{_n(bar * BAR_CELL)}" height="{_n(BAR_ROW - 2)}"/>'
            f'<text x="{_n(BAR_LABEL + BAR_CELL + 4)}" y="{_n(y + 10)}">{value:.2f}</text></g>'
        )
    return _doc(width, height, _shade_style(), body, title)


# -- grid cartogram ----------------------------------------------------------

TILE = 40.0
GAP = 3.0


def grid_cartogram_svg(values: Mapping[str, float], shades: Mapping[str, int],
                       title: str = "", decimals: int = 2) -> bytes:
    """Labeled tile per state; fill class q1..q5 follows the shade."""
    missing = [c for c in STATE_CODES if c not in values or c not in shades]
    if missing:
        raise MissingEntityError(f"no value or shade for: {', '.join(missing)}")
    bad = sorted(c for c in STATE_CODES if shades[c] not in range(1, 6))
    if bad:
        raise ValueError(f"shade outside 1..5 for: {', '.join(bad)}")
    cols = 1 + max(c for c, _ in GRID.values())
    rows = 1 + max(r for _, r in GRID.values())
    top = 24.0
    width = cols * (TILE + GAP) + GAP
    height = top + rows * (TILE + GAP) + GAP + 20
    body = [f'<text x="4" y="16">{escape(title)}</text>']
    for code in STATE_CODES:
        col, row = GRID[code]
        x = GAP + col * (TILE + GAP)
        y = top + row * (TILE + GAP)
        ink = "#ffffff" if shades[code] >= 4 else "#000000"
        body.append(
            f'<g><rect class="q{shades[code]}" x="{_n(x)}" y="{_n(y)}" '
            f'width="{_n(TILE)}" height="{_n(TILE)}"/>'
            f'<text x="{_n(x + TILE / 2)}" y="{_n(y + 16)}" text-anchor="middle" '
            f'fill="{ink}">{code}</text>'
            f'<text x="{_n(x + TILE / 2)}" y="{_n(y + 31)}" text-anchor="middle" '
            f'fill="{ink}" font-size="9">{values[code]:.{decimals}f}</text></g>'
        )
    ly = height - 14
    for i in range(5):
        x = GAP + i * 34
        body.append(f'<rect class="q{i + 1}" x="{_n(x)}" y="{_n(ly)}" width="30" height="10"/>')
    body.append(f'<text x="{_n(GAP + 5 * 34 + 4)}" y="{_n(ly + 9)}">quintile 1 to 5</text>')
    return _doc(width, height, _shade_style(), body, title)


# -- waffle ------------------------------------------------------------------

def _exact(x: float | Fraction | int) -> Fraction:
    # go through the shortest repr so 77.1 is 771/10, not its binary neighbour
    return x if isinstance(x, Fraction) else Fraction(repr(float(x)))


def apportion(shares: Sequence[float], n: int, tolerance: float = 0.1) -> list[int]:
    """Largest-remainder allocation of ``n`` units; equal remainders favour earlier rows."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if not shares:
        raise ValueError("no categories")
    exact = [_exact(s) for s in shares]
    if any(s < 0 for s in exact):
        raise ShareSumError("shares must be nonnegative")
    total = sum(exact)
    if abs(total - 100) > _exact(tolerance):
        raise ShareSumError(f"shares sum to {float(total):.3f}, expected 100 +/- {tolerance}")
    quotas = [s * n / total for s in exact]
    counts = [q.numerator // q.denominator for q in quotas]
    left = n - sum(counts)
    order = sorted(range(len(quotas)), key=lambda i: (-(quotas[i] - counts[i]), i))
    for i in order[:left]:
        counts[i] += 1
    return counts


WAFFLE_COLS = 25
ICON = 12.0


def waffle_svg(labels: Sequence[str], shares: Sequence[float], n_icons: int = 500,
               title: str = "") -> bytes:
    if len(labels) != len(shares):
        raise ValueError("labels and shares differ in length")
    if len(labels) > len(WAFFLE_COLORS):
        raise ValueError(f"at most {len(WAFFLE_COLORS)} categories")
    counts = apportion(shares, n_icons)
    style = " ".join(f".c{i} {{ fill: {c}; }}" for i, c in enumerate(WAFFLE_COLORS))
    style += " text { font-family: sans-serif; font-size: 11px; }"
    top = 24.0
    grid_rows = -(-n_icons // WAFFLE_COLS)
    legend_top = top + grid_rows * ICON + 8
    width = WAFFLE_COLS * ICON + 8
    height = legend_top + 14 * len(labels) + 4
    body = [f'<text x="4" y="16">{escape(title)}</text>']
    cell = 0
    for cat, count in enumerate(counts):
        for _ in range(count):
            r, c = divmod(cell, WAFFLE_COLS)
            body.append(f'<rect class="c{cat}" x="{_n(4 + c * ICON)}" y="{_n(top + r * ICON)}" '
                        f'width="{_n(ICON - 2)}" height="{_n(ICON - 2)}"/>')
            cell += 1
    for cat, (label, share, count) in enumerate(zip(labels, shares, counts)):
        y = legend_top + cat * 14
        body.append(f'<rect class="c{cat}" x="4" y="{_n(y)}" width="10" height="10"/>'
                    f'<text x="18" y="{_n(y + 9)}">{escape(label)} {share:.1f}% '
                    f"({count} icons)</text>")
    return _doc(width, height, style, body, title)
