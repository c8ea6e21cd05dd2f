"""Profiles, summary tables and reconciliation documents.

Renderers return bytes. Text formats are markdown (GitHub tables), JSON and
CSV; charts are delegated to :mod:`riskdex.charts`.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from . import charts
from .aggregate import (
    WORKED_EXAMPLE_SPS,
    WORKED_EXAMPLE_STATE,
    ReconciliationReport,
    published_tie_order,
)
from .analysis import PsSummary
from .ingest import Check, DataBundle, ValidationReport
from .model import (
    PHASES,
    STATE_CODES,
    US,
    SpsResult,
    Table2Row,
    TieBreak,
    VariantConfig,
    entity,
    ps_def,
)
from .transform import quintile_transform, rank_entities

FORMATS = ("md", "json", "csv")
BEST_MARK = "<- best"
JSON_DECIMALS = 6


@lru_cache(maxsize=1)
def profile_text() -> dict[str, dict[str, str]]:
    raw = resources.files("riskdex").joinpath("strings/profile_text.json").read_text("utf-8")
    return json.loads(raw)


def _check_format(fmt: str, allowed: Sequence[str] = FORMATS) -> None:
    if fmt not in allowed:
        raise ValueError(f"unsupported format {fmt!r}; choose from {', '.join(allowed)}")


def _r(x: float | None, decimals: int = JSON_DECIMALS) -> float | None:
    if x is None:
        return None
    y = round(x, decimals)
    return 0.0 if y == 0 else y


def _json(obj: Any) -> bytes:
    return (json.dumps(obj, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def _csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if c is None else c for c in row])
    return buf.getvalue().encode("utf-8")


def _md_table(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> list[str]:
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    for row in rows:
        lines.append("| " + " | ".join("" if c is None else str(c) for c in row) + " |")
    return lines


def _md(lines: list[str]) -> bytes:
    return ("\n".join(lines).rstrip("\n") + "\n").encode("utf-8")


def write_atomic(path: str | os.PathLike, data: bytes) -> Path:
    """Write via a temp file in the target directory, then rename over the target."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return path


# -- process statistic profiles ----------------------------------------------

@dataclass(frozen=True)
class ProfileRow:
    rank: int | None
    state: str
    name: str
    value: float
    component_2020: float | None
    bar: float
    quintile: int | None


@dataclass(frozen=True)
class ProfileDoc:
    ps_id: int
    title: str
    calc_note: str
    interpretation: str
    rows: tuple[ProfileRow, ...]
    us: ProfileRow | None
    has_component: bool


def build_profile(ps_id: int, bundle: DataBundle, result: SpsResult,
                  rank_us: bool = False) -> ProfileDoc:
    """Ranked rows for one statistic, lowest value first.

    US is listed separately without a rank unless ``rank_us`` is set.
    """
    d = ps_def(ps_id)
    cfg = result.config
    tie_order = published_tie_order(bundle, ps_id) if cfg.tie_break is TieBreak.PUBLISHED else None
    column = bundle.ps.column(ps_id)
    ranked = rank_entities(column, include_us=rank_us, tie_break=cfg.tie_break,
                           ps_id=ps_id, tie_order=tie_order)
    values = [e.value for e in ranked.entries]
    lo, hi = min(values), max(values)

    def bar(v: float) -> float:
        if hi == lo:
            return 0.0
        return min(1.0, max(0.0, (v - lo) / (hi - lo)))

    def row(code: str, value: float, rank: int | None) -> ProfileRow:
        comp = bundle.components.values[code, ps_id] if d.is_difference else None
        return ProfileRow(rank, code, entity(code).name, value, comp, bar(value),
                          result.quintiles.q.get((code, ps_id)))

    rows = tuple(row(e.entity, e.value, e.rank) for e in ranked.entries)
    us = None if rank_us else row(US, column[US], None)
    text = profile_text()[str(ps_id)]
    return ProfileDoc(ps_id, text["title"], text["calc"], text["interpretation"], rows, us,
                      d.is_difference)


def _profile_row_json(r: ProfileRow, with_component: bool) -> dict[str, Any]:
    out: dict[str, Any] = {"rank": r.rank, "state": r.state, "name": r.name, "value": r.value}
    if with_component:
        out["component_2020"] = r.component_2020
    out["bar"] = _r(r.bar)
    out["quintile"] = r.quintile
    return out


def profile_json(doc: ProfileDoc) -> dict[str, Any]:
    out: dict[str, Any] = {
        "ps_id": doc.ps_id,
        "title": doc.title,
        "rows": [_profile_row_json(r, doc.has_component) for r in doc.rows],
    }
    if doc.us is not None:
        us: dict[str, Any] = {"value": doc.us.value}
        if doc.has_component:
            us["component_2020"] = doc.us.component_2020
        us["quintile"] = doc.us.quintile
        out["us"] = us
    else:
        ranked_us = next(r for r in doc.rows if r.state == US)
        out["us"] = {"value": ranked_us.value, "rank": ranked_us.rank}
    return out


def render_profile_doc(doc: ProfileDoc, fmt: str = "md") -> bytes:
    if fmt == "svg":
        return render_bar_svg(doc)
    _check_format(fmt)
    if fmt == "json":
        return _json(profile_json(doc))
    header = ["rank", "state", "name", "value"]
    if doc.has_component:
        header.append("component_2020")
    header += ["bar", "quintile"]

    def cells(r: ProfileRow, bar_fmt: str) -> list[Any]:
        c: list[Any] = [r.rank, r.state, r.name, f"{r.value:.2f}"]
        if doc.has_component:
            c.append(f"{r.component_2020:.2f}")
        c += [format(r.bar, bar_fmt), r.quintile]
        return c

    if fmt == "csv":
        return _csv(header, (cells(r, ".6f") for r in doc.rows))
    lines = [f"# PS{doc.ps_id}: {doc.title}", "", f"**How it is computed.** {doc.calc_note}",
             "", f"**Reading it.** {doc.interpretation}", ""]
    lines += _md_table(header, (cells(r, ".3f") for r in doc.rows))
    if doc.us is not None:
        comp = f", 2020 component {doc.us.component_2020:.2f}" if doc.has_component else ""
        lines += ["", f"United States (not ranked): {doc.us.value:.2f}{comp}"]
    return _md(lines)


def render_profile(ps_id: int, bundle: DataBundle, result: SpsResult, fmt: str = "md",
                   rank_us: bool = False) -> bytes:
    return render_profile_doc(build_profile(ps_id, bundle, result, rank_us), fmt)


def render_bar_svg(profile: ProfileDoc) -> bytes:
    rows = [(r.name, r.value, r.bar, r.quintile or 1) for r in profile.rows]
    return charts.bar_svg(f"PS{profile.ps_id}: {profile.title}", rows)


def render_grid_cartogram_svg(values: Mapping[str, float], shades: Mapping[str, int],
                              title: str = "") -> bytes:
    return charts.grid_cartogram_svg(values, shades, title)


def ps_cartogram(ps_id: int, bundle: DataBundle, result: SpsResult) -> bytes:
    values = bundle.ps.column(ps_id, include_us=False)
    shades = {c: result.quintiles.q[c, ps_id] for c in STATE_CODES}
    return render_grid_cartogram_svg(values, shades, f"PS{ps_id}: {ps_def(ps_id).short_name}")


def render_waffle_svg(table2: Sequence[Table2Row], n_icons: int = 500,
                      year: int = 2020) -> bytes:
    if year not in (2020, 2010):
        raise ValueError("year must be 2020 or 2010")
    shares = [r.pct_2020 if year == 2020 else r.pct_2010 for r in table2]
    labels = [r.method for r in table2]
    return charts.waffle_svg(labels, shares, n_icons,
                             f"Occupied housing units by collection method, {year}")


# -- summary statistic -------------------------------------------------------

@dataclass(frozen=True)
class SpsRow:
    rank: int
    state: str
    name: str
    sps: float
    published: float | None
    quintile: int


def sps_rows(result: SpsResult, published: Mapping[str, float] | None = None) -> list[SpsRow]:
    """States ranked by computed SPS, lowest first, shaded by SPS quintile."""
    column = {c: result.sps[c] for c in STATE_CODES if c in result.sps}
    shades = quintile_transform(column, VariantConfig(
        include_us_in_quintiles=False,
        quintile_n51_scheme=result.config.quintile_n51_scheme,
    )) if len(column) == 51 else {c: 1 for c in column}
    ranked = rank_entities(column, include_us=False)
    return [
        SpsRow(e.rank, e.entity, entity(e.entity).name, e.value,
               None if published is None else published.get(e.entity), shades[e.entity])
        for e in ranked.entries
    ]


def render_sps_profile(result: SpsResult, published: Mapping[str, float] | None = None,
                       fmt: str = "md") -> bytes:
    _check_format(fmt)
    rows = sps_rows(result, published)
    if fmt == "json":
        return _json({
            "variant": result.config.label,
            "rows": [{"rank": r.rank, "state": r.state, "name": r.name, "sps": _r(r.sps),
                      "published": r.published, "quintile": r.quintile} for r in rows],
        })
    header = ["rank", "state", "name", "sps", "published", "quintile"]
    if fmt == "csv":
        return _csv(header, ([r.rank, r.state, r.name, f"{r.sps:.6f}",
                              None if r.published is None else f"{r.published:.2f}",
                              r.quintile] for r in rows))
    text = profile_text()["sps"]
    lines = [f"# {text['title']}", "", f"Variant: `{result.config.label}`", "",
             f"**How it is computed.** {text['calc']}", "",
             f"**Reading it.** {text['interpretation']}", ""]
    lines += _md_table(header, ([r.rank, r.state, r.name, f"{r.sps:.2f}",
                                 None if r.published is None else f"{r.published:.2f}",
                                 r.quintile] for r in rows))
    return _md(lines)


def sps_cartogram(result: SpsResult) -> bytes:
    rows = sps_rows(result)
    return render_grid_cartogram_svg({r.state: r.sps for r in rows},
                                     {r.state: r.quintile for r in rows},
                                     f"Summary process statistic ({result.config.label})")


PHASE_HEADER = [f"{p.short}_pct" for p in PHASES]


def render_decomposition(result: SpsResult, published_table4: Sequence = (),
                         fmt: str = "md") -> bytes:
    """Phase shares of every computed SPS, plus a side-by-side for the published rows."""
    _check_format(fmt)
    codes = result.entities
    if fmt == "json":
        return _json({
            "variant": result.config.label,
            "rows": [{"state": c, "sps": _r(result.sps[c]),
                      **{h: _r(result.phase_pct[c, p]) for h, p in zip(PHASE_HEADER, PHASES)}}
                     for c in codes],
            "published": [{"state": t.state, "sps": t.sps,
                           **dict(zip(PHASE_HEADER, t.phase_pct))} for t in published_table4],
        })
    header = ["state", "sps", *PHASE_HEADER]
    if fmt == "csv":
        return _csv(header, ([c, f"{result.sps[c]:.6f}",
                              *(f"{result.phase_pct[c, p]:.6f}" for p in PHASES)]
                             for c in codes))
    lines = ["# Phase contributions to the summary statistic", "",
             f"Variant: `{result.config.label}`", ""]
    lines += _md_table(header, ([c, f"{result.sps[c]:.2f}",
                                 *(f"{result.phase_pct[c, p]:.1f}" for p in PHASES)]
                                for c in codes))
    if published_table4:
        lines += ["", "## Published rows against computed", ""]
        rows = []
        for t in published_table4:
            if t.state not in result.sps:
                continue
            rows.append([t.state, "published", f"{t.sps:.2f}", *(f"{v:.1f}" for v in t.phase_pct)])
            rows.append([t.state, "computed", f"{result.sps[t.state]:.2f}",
                         *(f"{result.phase_pct[t.state, p]:.1f}" for p in PHASES)])
        lines += _md_table(["state", "source", "sps", *PHASE_HEADER], rows)
    return _md(lines)


def render_sps_table(result: SpsResult, fmt: str = "csv", warning: str | None = None) -> bytes:
    """Machine output of a variant run: one row per entity in canonical order."""
    _check_format(fmt, ("csv", "json"))
    codes = result.entities

    def zeroed(c: str) -> str:
        return ";".join(str(p) for p in sorted(result.zeroed[c]))

    if fmt == "json":
        doc: dict[str, Any] = {"variant": result.config.label}
        if warning:
            doc["warning"] = warning
        doc["rows"] = [
            {"state": c, "sps": _r(result.sps[c]), "zeroed": sorted(result.zeroed[c]),
             **{h: _r(result.phase_pct[c, p]) for h, p in zip(PHASE_HEADER, PHASES)}}
            for c in codes
        ]
        return _json(doc)
    header = ["state", "sps", "zeroed", *PHASE_HEADER] + (["warning"] if warning else [])
    return _csv(header, ([c, f"{result.sps[c]:.6f}", zeroed(c),
                          *(f"{result.phase_pct[c, p]:.6f}" for p in PHASES)]
                         + ([warning] if warning else []) for c in codes))


# -- analysis tables ---------------------------------------------------------

STATS_HEADER = ["ps", "mean", "min", "max", "range", "relative_range"]


def render_stats(summaries: Sequence[PsSummary], fmt: str = "text") -> bytes:
    """Mean/min/max/range grid; the text form prints one line per statistic at 1 decimal."""
    _check_format(fmt, ("text",) + FORMATS)

    def label(s: PsSummary) -> str:
        return "SPS" if s.ps_id is None else f"PS{s.ps_id}"

    def nums(s: PsSummary) -> list[float]:
        return [s.mean, s.min, s.max, s.range, s.relative_range]

    if fmt == "json":
        return _json([{"ps": label(s), **{k: _r(v) for k, v in zip(STATS_HEADER[1:], nums(s))}}
                      for s in summaries])
    if fmt == "csv":
        return _csv(STATS_HEADER, ([label(s), *(f"{v:.6f}" for v in nums(s))]
                                   for s in summaries))
    if fmt == "md":
        return _md(_md_table(STATS_HEADER, ([label(s), *(f"{v:.1f}" for v in nums(s))]
                                            for s in summaries)))
    return _md([" ".join([label(s), *(f"{v:.1f}" for v in nums(s))]) for s in summaries])


def render_top(ps_id: int, entries: Sequence[tuple[str, float | None]],
               fmt: str = "text") -> bytes:
    _check_format(fmt, ("text",) + FORMATS)
    rows = [(i, code, rd) for i, (code, rd) in enumerate(entries, start=1)]
    if fmt == "json":
        return _json({"ps_id": ps_id, "rows": [{"position": i, "state": c, "rel_diff": rd}
                                               for i, c, rd in rows]})
    header = ["position", "state", "rel_diff"]
    if fmt == "csv":
        return _csv(header, ([i, c, None if rd is None else f"{rd:.2f}"] for i, c, rd in rows))
    if fmt == "md":
        return _md([f"# Top {len(rows)} states on PS{ps_id}", ""]
                   + _md_table(header, ([i, c, None if rd is None else f"{rd:.2f}"]
                                        for i, c, rd in rows)))
    return _md([f"{i} {c} {'' if rd is None else f'{rd:.2f}'}".rstrip() for i, c, rd in rows])


# -- reconciliation ----------------------------------------------------------

def _anomaly(report: ReconciliationReport) -> dict[str, Any]:
    code = WORKED_EXAMPLE_STATE
    computed = {v.label: _r(v.sps.get(code), 4) for v in report.variants}
    return {
        "state": code,
        "published": report.published[code],
        "worked_example": WORKED_EXAMPLE_SPS,
        "computed": computed,
        "note": (f"The published summary table lists {code} at {report.published[code]:.2f} "
                 f"while the worked example arrives at {WORKED_EXAMPLE_SPS:.2f}; "
                 "the two cannot both hold for one rule set."),
    }


def render_reconciliation(report: ReconciliationReport, fmt: str = "md") -> bytes:
    _check_format(fmt, ("md", "json"))
    best = report.best
    deltas = [(c, best.sps[c], report.published[c], best.sps[c] - report.published[c])
              for c in STATE_CODES if c in best.sps]
    anomaly = _anomaly(report)
    if fmt == "json":
        return _json({
            "best_variant": report.best_variant,
            "variants": [{
                "variant": v.label,
                "best": v.label == report.best_variant,
                "max_abs_delta": _r(v.max_abs_delta),
                "mean_abs_delta": _r(v.mean_abs_delta),
                "spearman": _r(v.spearman),
                "worst": [{"state": c, "delta": _r(d)} for c, d in v.worst],
            } for v in report.variants],
            "anomaly": anomaly,
            "best_deltas": [{"state": c, "computed": _r(s), "published": p, "delta": _r(d)}
                            for c, s, p, d in deltas],
        })
    lines = ["# SPS reconciliation against the published table", ""]
    lines += _md_table(
        ["variant", "max abs delta", "mean abs delta", "spearman", "worst states", ""],
        ([f"`{v.label}`", f"{v.max_abs_delta:.4f}", f"{v.mean_abs_delta:.4f}",
          f"{v.spearman:.4f}", ", ".join(f"{c} {d:+.3f}" for c, d in v.worst[:3]),
          BEST_MARK if v.label == report.best_variant else ""]
         for v in report.variants),
    )
    lines += ["", f"## {anomaly['state']} anomaly", "",
              f"- published table: {anomaly['published']:.2f}",
              f"- worked example: {anomaly['worked_example']:.2f}"]
    lines += [f"- computed under `{label}`: {val:.4f}" for label, val in anomaly["computed"].items()
              if val is not None]
    lines += ["", anomaly["note"], "", f"## Per-state deviations, `{report.best_variant}`", ""]
    rows = []
    for c, s, p, d in deltas:
        note = f"worked example {WORKED_EXAMPLE_SPS:.2f}" if c == WORKED_EXAMPLE_STATE else ""
        rows.append([c, f"{s:.4f}", f"{p:.2f}", f"{d:+.4f}", note])
    lines += _md_table(["state", "computed", "published", "delta", "note"], rows)
    return _md(lines)


# -- validation --------------------------------------------------------------

def _check_json(c: Check) -> dict[str, Any]:
    return {"check_id": c.check_id, "entity": c.entity, "ps": c.ps, "expected": c.expected,
            "actual": c.actual, "tolerance": c.tolerance, "status": c.status,
            "detail": c.detail}


def render_validation(report: ValidationReport, fmt: str = "text") -> bytes:
    _check_format(fmt, ("text",) + FORMATS)
    counts = report.counts()
    documented = {c.key for c in report.documented}
    if fmt == "json":
        return _json({
            "ok": report.ok,
            "counts": counts,
            "failures": [_check_json(c) for c in report.failures],
            "errata": [{**_check_json(c), "documented": True} for c in report.documented],
            "checks": [_check_json(c) for c in report.checks],
        })
    header = ["check_id", "entity", "ps", "expected", "actual", "tolerance", "status",
              "errata", "detail"]
    if fmt == "csv":
        return _csv(header, ([c.check_id, c.entity, c.ps, c.expected, c.actual, c.tolerance,
                              c.status, "yes" if c.key in documented else "", c.detail]
                             for c in report.checks))
    summary = (f"{counts['pass']} pass, {counts['fail']} fail "
               f"({counts['errata']} documented errata), {counts['skip']} skipped")

    def describe(c: Check) -> str:
        where = f"({c.entity}, ps{c.ps})" if c.ps is not None else f"({c.entity})"
        extra = f" {c.detail}" if c.detail else ""
        return f"{c.check_id} {where}: expected {c.expected}, got {c.actual}{extra}"

    if fmt == "md":
        lines = ["# Validation", "", summary, ""]
        if report.failures:
            lines += ["## Failures", ""] + [f"- {describe(c)}" for c in report.failures] + [""]
        if report.documented:
            lines += ["## Documented errata", ""] + [f"- {describe(c)}"
                                                     for c in report.documented]
        return _md(lines)
    lines = [("OK " if report.ok else "FAILED ") + summary]
    lines += [f"FAIL {describe(c)}" for c in report.failures]
    lines += [f"ERRATUM {describe(c)}" for c in report.documented]
    return _md(lines)

