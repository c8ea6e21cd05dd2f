"""Fixture loading, serialization and cross-table validation."""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator

from .model import (
    CODES,
    DIFFERENCE_PS_IDS,
    PS_IDS,
    STATE_CODES,
    US,
    Components2020,
    Kind,
    ProfileEntry,
    PsMatrix,
    PublishedReference,
    RiskdexError,
    Table2Row,
    Table4Row,
    WeightMatrix,
    canonical_index,
    canonical_sorted,
    ps_def,
)

A1_FILE = "a1_process_statistics.csv"
A2_FILE = "a2_weights.csv"
A3_FILE = "a3_components_2020.csv"
SPS_FILE = "published_sps.csv"
TABLE4_FILE = "published_table4.csv"
TABLE2_FILE = "published_table2.csv"
PROFILE_FILE = "published_profile_order_ps{}.csv"
ERRATA_FILE = "errata.csv"

A1_HEADER = ["state", "rel_diff"] + [f"ps{i}" for i in PS_IDS]
A2_HEADER = ["state"] + [f"ps{i}" for i in PS_IDS]
A3_HEADER = ["state"] + [f"ps{i}" for i in DIFFERENCE_PS_IDS]
SPS_HEADER = ["state", "sps"]
TABLE4_HEADER = ["state", "sps", "maf_pct", "sr_pct", "nrfu_pct", "dp_pct", "gq_pct"]
TABLE2_HEADER = ["method", "pct_2020", "pct_2010"]
PROFILE_HEADER = ["rank", "state", "value"]
ERRATA_HEADER = ["check_id", "state", "ps", "note"]

CROSS_CHECK_TOLERANCE = 0.015
COMPONENT_SLACK = 0.005
PROFILE_VALUE_TOLERANCE = 0.005
TABLE2_SUM_TOLERANCE = 0.1

DATA_DIR_ENV = "RISKDEX_DATA_DIR"


class FixtureError(RiskdexError):
    """A fixture file could not be read as declared."""

    def __init__(self, message: str, path: Path | str | None = None,
                 row: int | None = None, column: str | None = None):
        self.path = str(path) if path is not None else None
        self.row = row
        self.column = column
        where = []
        if self.path:
            where.append(self.path)
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column}")
        super().__init__(f"{': '.join([', '.join(where), message]) if where else message}")


class SchemaError(FixtureError):
    """Structural problem: header, row count, duplicates, unparsable cells."""


class ValueRangeError(FixtureError):
    """A well-formed cell holds a value outside its domain."""


def bundled_data_dir() -> Path:
    return Path(str(resources.files("riskdex") / "data"))


def resolve_data_dir(explicit: str | os.PathLike | None = None) -> Path:
    """Pick the data directory: explicit argument, env var, ``./data``, bundled fixtures."""
    if explicit:
        return Path(explicit)
    env = os.environ.get(DATA_DIR_ENV)
    if env:
        return Path(env)
    local = Path("data")
    if (local / A1_FILE).is_file():
        return local
    return bundled_data_dir()


def _read_rows(path: Path, header: list[str]) -> Iterator[tuple[int, dict[str, str]]]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise SchemaError("file not found", path) from None
    except OSError as exc:
        raise SchemaError(f"cannot read file ({exc.strerror})", path) from None
    reader = csv.reader(io.StringIO(text))
    try:
        got = next(reader)
    except StopIteration:
        raise SchemaError("empty file", path) from None
    if got != header:
        raise SchemaError(f"header {got} does not match {header}", path, row=1)
    for lineno, cells in enumerate(reader, start=2):
        if not cells:
            continue
        if len(cells) != len(header):
            raise SchemaError(
                f"expected {len(header)} columns, found {len(cells)}", path, row=lineno
            )
        yield lineno, dict(zip(header, cells))


def _number(cell: str, path: Path, row: int, column: str) -> float:
    try:
        return float(cell)
    except ValueError:
        raise SchemaError(f"non-numeric cell {cell!r}", path, row, column) from None


def _state(cell: str, path: Path, row: int, seen: set[str]) -> str:
    if cell not in CODES:
        raise SchemaError(f"unknown entity {cell!r}", path, row, "state")
    if cell in seen:
        raise SchemaError(f"duplicate entity {cell!r}", path, row, "state")
    seen.add(cell)
    return cell


def _require(expected: Iterable[str], seen: set[str], path: Path) -> None:
    missing = [c for c in expected if c not in seen]
    if missing:
        raise SchemaError(f"missing entity rows: {', '.join(missing)}", path)


def load_ps_matrix(path: str | os.PathLike) -> PsMatrix:
    path = Path(path)
    values: dict[tuple[str, int], float] = {}
    rel_diff: dict[str, float] = {}
    seen: set[str] = set()
    for row, cells in _read_rows(path, A1_HEADER):
        code = _state(cells["state"], path, row, seen)
        rel_diff[code] = _number(cells["rel_diff"], path, row, "rel_diff")
        for ps in PS_IDS:
            values[code, ps] = _number(cells[f"ps{ps}"], path, row, f"ps{ps}")
    _require(CODES, seen, path)
    return PsMatrix(values, rel_diff)


def load_weights(path: str | os.PathLike) -> WeightMatrix:
    path = Path(path)
    raw: dict[tuple[str, int], float] = {}
    seen: set[str] = set()
    for row, cells in _read_rows(path, A2_HEADER):
        if cells["state"] == US:
            raise SchemaError("unexpected US row; the weight table has no national row",
                              path, row, "state")
        code = _state(cells["state"], path, row, seen)
        for ps in PS_IDS:
            value = _number(cells[f"ps{ps}"], path, row, f"ps{ps}")
            if value < 0:
                raise ValueRangeError(f"negative weight {value} for ({code}, ps{ps})",
                                      path, row, f"ps{ps}")
            raw[code, ps] = value
    _require(STATE_CODES, seen, path)
    return WeightMatrix(raw)


def load_components(path: str | os.PathLike) -> Components2020:
    path = Path(path)
    values: dict[tuple[str, int], float] = {}
    seen: set[str] = set()
    for row, cells in _read_rows(path, A3_HEADER):
        code = _state(cells["state"], path, row, seen)
        for ps in DIFFERENCE_PS_IDS:
            value = _number(cells[f"ps{ps}"], path, row, f"ps{ps}")
            if value < 0:
                raise ValueRangeError(f"negative 2020 component {value} for ({code}, ps{ps})",
                                      path, row, f"ps{ps}")
            values[code, ps] = value
    _require(CODES, seen, path)
    return Components2020(values)


def load_profile_order(path: str | os.PathLike) -> tuple[ProfileEntry, ...]:
    path = Path(path)
    entries = []
    seen: set[str] = set()
    for row, cells in _read_rows(path, PROFILE_HEADER):
        code = _state(cells["state"], path, row, seen)
        rank_cell = cells["rank"].strip()
        try:
            rank = int(rank_cell) if rank_cell else None
        except ValueError:
            raise SchemaError(f"non-integer rank {rank_cell!r}", path, row, "rank") from None
        entries.append(ProfileEntry(rank, code, _number(cells["value"], path, row, "value")))
    return tuple(entries)


def load_published(directory: str | os.PathLike) -> PublishedReference:
    directory = Path(directory)

    path = directory / SPS_FILE
    sps: dict[str, float] = {}
    seen: set[str] = set()
    for row, cells in _read_rows(path, SPS_HEADER):
        code = _state(cells["state"], path, row, seen)
        sps[code] = _number(cells["sps"], path, row, "sps")
    _require(CODES, seen, path)

    path = directory / TABLE4_FILE
    table4 = []
    seen = set()
    for row, cells in _read_rows(path, TABLE4_HEADER):
        code = _state(cells["state"], path, row, seen)
        nums = [_number(cells[c], path, row, c) for c in TABLE4_HEADER[1:]]
        table4.append(Table4Row(code, nums[0], tuple(nums[1:])))
    if len(table4) != 7:
        raise SchemaError(f"expected 7 rows, found {len(table4)}", path)

    path = directory / TABLE2_FILE
    table2 = []
    for row, cells in _read_rows(path, TABLE2_HEADER):
        table2.append(Table2Row(
            cells["method"],
            _number(cells["pct_2020"], path, row, "pct_2020"),
            _number(cells["pct_2010"], path, row, "pct_2010"),
        ))
    for column in ("pct_2020", "pct_2010"):
        total = sum(getattr(r, column) for r in table2)
        if abs(total - 100.0) > TABLE2_SUM_TOLERANCE:
            raise ValueRangeError(f"column sums to {total:.2f}, expected 100 +/- 0.1",
                                  path, column=column)

    orders = {}
    for ps in PS_IDS:
        path = directory / PROFILE_FILE.format(ps)
        if path.is_file():
            orders[ps] = load_profile_order(path)

    return PublishedReference(sps, tuple(table4), tuple(table2), orders)


@dataclass(frozen=True)
class Erratum:
    check_id: str
    state: str
    ps: int | None
    note: str

    @property
    def key(self) -> tuple[str, str, int | None]:
        return (self.check_id, self.state, self.ps)


def load_errata(path: str | os.PathLike) -> tuple[Erratum, ...]:
    path = Path(path)
    if not path.is_file():
        return ()
    out = []
    for row, cells in _read_rows(path, ERRATA_HEADER):
        ps_cell = cells["ps"].strip()
        try:
            ps = int(ps_cell) if ps_cell else None
        except ValueError:
            raise SchemaError(f"non-integer ps {ps_cell!r}", path, row, "ps") from None
        out.append(Erratum(cells["check_id"], cells["state"], ps, cells["note"]))
    return tuple(out)


@dataclass(frozen=True)
class DataBundle:
    ps: PsMatrix
    weights: WeightMatrix
    components: Components2020
    published: PublishedReference
    errata: tuple[Erratum, ...] = ()
    source: str = ""


def load_bundle(directory: str | os.PathLike | None = None) -> DataBundle:
    directory = resolve_data_dir(directory)
    if not directory.is_dir():
        raise SchemaError("data directory not found", directory)
    return DataBundle(
        ps=load_ps_matrix(directory / A1_FILE),
        weights=load_weights(directory / A2_FILE),
        components=load_components(directory / A3_FILE),
        published=load_published(directory),
        errata=load_errata(directory / ERRATA_FILE),
        source=str(directory),
    )


# -- serialization -----------------------------------------------------------

def _fmt(value: float, decimals: int = 2) -> str:
    text = f"{value:.{decimals}f}"
    return "0." + "0" * decimals if text == "-0." + "0" * decimals else text


def _csv_text(header: list[str], rows: Iterable[list[str]]) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(r) for r in rows)
    return "\n".join(lines) + "\n"


def dump_ps_matrix(m: PsMatrix) -> str:
    return _csv_text(A1_HEADER, (
        [code, _fmt(m.rel_diff[code])] + [_fmt(m.values[code, ps]) for ps in PS_IDS]
        for code in m.entities
    ))


def dump_weights(m: WeightMatrix) -> str:
    return _csv_text(A2_HEADER, (
        [code] + [_fmt(m.raw[code, ps]) for ps in PS_IDS] for code in m.entities
    ))


def dump_components(m: Components2020) -> str:
    return _csv_text(A3_HEADER, (
        [code] + [_fmt(m.values[code, ps]) for ps in DIFFERENCE_PS_IDS] for code in m.entities
    ))


def dump_published_sps(ref: PublishedReference) -> str:
    return _csv_text(SPS_HEADER, (
        [code, _fmt(ref.published_sps[code])] for code in canonical_sorted(ref.published_sps)
    ))


def dump_table4(ref: PublishedReference) -> str:
    return _csv_text(TABLE4_HEADER, (
        [r.state, _fmt(r.sps, 1)] + [_fmt(p, 1) for p in r.phase_pct] for r in ref.table4
    ))


def dump_table2(ref: PublishedReference) -> str:
    return _csv_text(TABLE2_HEADER, (
        [r.method, _fmt(r.pct_2020, 1), _fmt(r.pct_2010, 1)] for r in ref.table2
    ))


def dump_profile_order(entries: Iterable[ProfileEntry]) -> str:
    return _csv_text(PROFILE_HEADER, (
        ["" if e.rank is None else str(e.rank), e.state, _fmt(e.value)] for e in entries
    ))


# -- validation --------------------------------------------------------------

PASS, FAIL, SKIP = "pass", "fail", "skip"


@dataclass(frozen=True)
class Check:
    check_id: str
    entity: str
    ps: int | None
    expected: float | str | None
    actual: float | str | None
    tolerance: float | None
    status: str
    detail: str = ""

    @property
    def key(self) -> tuple[str, str, int | None]:
        return (self.check_id, self.entity, self.ps)

    @property
    def failed(self) -> bool:
        return self.status == FAIL


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[Check, ...]
    errata: tuple[Erratum, ...] = field(default=())

    def _errata_keys(self) -> set[tuple[str, str, int | None]]:
        return {e.key for e in self.errata}

    @property
    def failures(self) -> list[Check]:
        """Failed checks not covered by the errata registry."""
        keys = self._errata_keys()
        return [c for c in self.checks if c.failed and c.key not in keys]

    @property
    def documented(self) -> list[Check]:
        keys = self._errata_keys()
        return [c for c in self.checks if c.failed and c.key in keys]

    @property
    def ok(self) -> bool:
        return not self.failures

    def counts(self) -> dict[str, int]:
        out = {PASS: 0, FAIL: 0, SKIP: 0}
        for c in self.checks:
            out[c.status] += 1
        out["errata"] = len(self.documented)
        return out


def _tol_check(check_id: str, code: str, ps: int, expected: float, actual: float,
               tolerance: float) -> Check:
    ok = abs(expected - actual) <= tolerance + 1e-9
    return Check(check_id, code, ps, expected, actual, tolerance, PASS if ok else FAIL)


def _profile_checks(bundle: DataBundle, ps: int) -> list[Check]:
    entries = bundle.published.profile_orders.get(ps)
    if entries is None:
        return [Check("profile_order", "*", ps, None, None, None, SKIP,
                      "no published profile order available")]
    ranked = [e for e in entries if e.state != US]
    column = bundle.ps.column(ps, include_us=False)
    checks = []
    # order only: the published sequence must be a nondecreasing walk of the A1 column
    inversions = [
        f"{a.state}>{b.state}" for a, b in zip(ranked, ranked[1:])
        if column[a.state] > column[b.state]
    ]
    covered = {e.state for e in ranked} == set(column)
    ok = covered and not inversions
    detail = "" if ok else ("inversions: " + ", ".join(inversions) if inversions
                            else "published order does not cover all 51 states")
    checks.append(Check("profile_order", "*", ps, "nondecreasing", "nondecreasing" if ok
                        else "violated", None, PASS if ok else FAIL, detail))
    for e in entries:
        checks.append(_tol_check("profile_value", e.state, ps, e.value,
                                 bundle.ps.values[e.state, ps], PROFILE_VALUE_TOLERANCE))
    return checks


def validate(bundle: DataBundle) -> ValidationReport:
    checks: list[Check] = []
    ps, weights, comps = bundle.ps, bundle.weights, bundle.components

    for code in STATE_CODES:
        for p in (3, 5, 6, 8, 9):
            checks.append(_tol_check("weight_vs_component", code, p, comps.values[code, p],
                                     weights.raw[code, p], CROSS_CHECK_TOLERANCE))
        for p in (1, 7):
            checks.append(_tol_check("weight_vs_value", code, p, ps.values[code, p],
                                     weights.raw[code, p], CROSS_CHECK_TOLERANCE))

    for code in CODES:
        for p in DIFFERENCE_PS_IDS:
            derived = comps.values[code, p] - ps.values[code, p]
            checks.append(Check("component_2010_nonneg", code, p, 0.0, round(derived, 10),
                                COMPONENT_SLACK,
                                PASS if derived >= -COMPONENT_SLACK else FAIL))
        for p in PS_IDS:
            if ps_def(p).kind is Kind.LEVEL_2020:
                v = ps.values[code, p]
                checks.append(Check("level_nonneg", code, p, 0.0, v, 0.0,
                                    PASS if v >= 0 else FAIL))

    for p in PS_IDS:
        checks.extend(_profile_checks(bundle, p))

    checks.sort(key=lambda c: (c.check_id, c.ps or 0,
                               -1 if c.entity == "*" else canonical_index(c.entity)))
    return ValidationReport(tuple(checks), bundle.errata)
