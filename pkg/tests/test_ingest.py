from __future__ import annotations

from pathlib import Path

import pytest

from riskdex import ingest
from riskdex.ingest import (
    SchemaError,
    ValueRangeError,
    bundled_data_dir,
    load_components,
    load_profile_order,
    load_published,
    load_ps_matrix,
    load_weights,
    resolve_data_dir,
    validate,
)
from riskdex.model import US


def _edit(path, old, new):
    text = path.read_text()
    assert old in text
    path.write_text(text.replace(old, new, 1))


def test_a1_examples(bundle):
    assert bundle.ps.values["AL", 1] == 14.38
    assert bundle.ps.values["US", 3] == 17.53
    assert len(bundle.ps.entities) == 52


def test_a2_examples(bundle):
    assert bundle.weights.raw["AL", 3] == 25.44
    assert bundle.weights.raw["AL", 10] == 0.13
    assert US not in bundle.weights.entities
    assert len(bundle.weights.entities) == 51
    assert all(v >= 0 for v in bundle.weights.raw.values())


def test_a3_examples(bundle):
    assert bundle.components.values["AL", 3] == 25.44
    assert bundle.components.values["US", 8] == 0.88


def test_published_examples(bundle):
    pub = bundle.published
    assert pub.published_sps["NE"] == 1.21
    assert len(pub.published_sps) == 52
    ak = next(r for r in pub.table4 if r.state == "AK")
    assert (ak.sps, *ak.phase_pct) == (4.5, 40.5, 53.6, 4.1, 1.5, 0.2)
    assert len(pub.table4) == 7
    assert sum(r.pct_2020 for r in pub.table2) == pytest.approx(100.0, abs=0.1)
    assert sum(r.pct_2010 for r in pub.table2) == pytest.approx(100.0, abs=0.1)
    assert 5 not in pub.profile_orders
    assert pub.profile_orders[1][0].state == "MD"


def test_missing_us_row_is_named(data_copy):
    path = data_copy / ingest.A1_FILE
    lines = path.read_text().splitlines(keepends=True)
    path.write_text("".join(l for l in lines if not l.startswith("US,")))
    with pytest.raises(SchemaError, match="US"):
        load_ps_matrix(path)


@pytest.mark.parametrize("old,new,match", [
    ("AL,2.11,14.38", "AL,2.11,abc", "ps1"),
    ("AL,2.11,14.38", "AK,2.11,14.38", "duplicate"),
    ("AL,2.11,14.38,", "AL,2.11,", "columns"),
    ("state,rel_diff", "state,reldiff", "header"),
])
def test_a1_schema_errors(data_copy, old, new, match):
    path = data_copy / ingest.A1_FILE
    _edit(path, old, new)
    with pytest.raises(SchemaError, match=match) as info:
        load_ps_matrix(path)
    assert info.value.path == str(path)


def test_schema_error_carries_coordinates(data_copy):
    path = data_copy / ingest.A1_FILE
    _edit(path, "AL,2.11,14.38", "AL,2.11,x")
    with pytest.raises(SchemaError) as info:
        load_ps_matrix(path)
    assert (info.value.row, info.value.column) == (3, "ps1")


def test_negative_weight_rejected(data_copy):
    path = data_copy / ingest.A2_FILE
    _edit(path, "AL,14.38", "AL,-14.38")
    with pytest.raises(ValueRangeError) as info:
        load_weights(path)
    assert info.value.column == "ps1"


def test_us_weight_row_rejected(data_copy):
    path = data_copy / ingest.A2_FILE
    text = path.read_text()
    header, first, rest = text.split("\n", 2)
    path.write_text("\n".join([header, "US" + first[2:], first, rest]))
    with pytest.raises(SchemaError, match="US"):
        load_weights(path)


def test_missing_state_in_weights(data_copy):
    path = data_copy / ingest.A2_FILE
    lines = path.read_text().splitlines(keepends=True)
    path.write_text("".join(l for l in lines if not l.startswith("WY,")))
    with pytest.raises(SchemaError, match="WY"):
        load_weights(path)


def test_negative_component_rejected(data_copy):
    path = data_copy / ingest.A3_FILE
    _edit(path, "AL,25.44", "AL,-25.44")
    with pytest.raises(ValueRangeError):
        load_components(path)


def test_table2_sum_violation(data_copy):
    _edit(data_copy / ingest.TABLE2_FILE, "77.1", "78.1")
    with pytest.raises(ValueRangeError, match="pct_2020"):
        load_published(data_copy)


def test_missing_reference_file(data_copy):
    (data_copy / ingest.TABLE4_FILE).unlink()
    with pytest.raises(SchemaError, match="not found"):
        load_published(data_copy)


FIXTURE_DUMPS = [
    (ingest.A1_FILE, lambda d: ingest.dump_ps_matrix(load_ps_matrix(d / ingest.A1_FILE))),
    (ingest.A2_FILE, lambda d: ingest.dump_weights(load_weights(d / ingest.A2_FILE))),
    (ingest.A3_FILE, lambda d: ingest.dump_components(load_components(d / ingest.A3_FILE))),
    (ingest.SPS_FILE, lambda d: ingest.dump_published_sps(load_published(d))),
    (ingest.TABLE4_FILE, lambda d: ingest.dump_table4(load_published(d))),
    (ingest.TABLE2_FILE, lambda d: ingest.dump_table2(load_published(d))),
] + [
    (ingest.PROFILE_FILE.format(ps),
     lambda d, ps=ps: ingest.dump_profile_order(load_profile_order(d / ingest.PROFILE_FILE.format(ps))))
    for ps in (1, 2, 3, 4, 6, 7, 8, 9, 10)
]


@pytest.mark.parametrize("name,dump", FIXTURE_DUMPS, ids=[n for n, _ in FIXTURE_DUMPS])
def test_round_trip_is_byte_identical(name, dump):
    d = bundled_data_dir()
    assert dump(d).encode("utf-8") == (d / name).read_bytes()


def _check(report, check_id, entity, ps):
    return next(c for c in report.checks if c.key == (check_id, entity, ps))


def test_validate_shipped_fixtures(bundle):
    report = validate(bundle)
    assert report.failures == []
    assert report.ok
    assert {c.key for c in report.documented} == {e.key for e in bundle.errata}
    assert _check(report, "weight_vs_component", "AL", 5).status == "pass"
    fl = _check(report, "weight_vs_component", "FL", 9)
    assert fl.status == "pass" and abs(fl.expected - fl.actual) == pytest.approx(0.01)
    al = _check(report, "component_2010_nonneg", "AL", 3)
    assert al.actual == pytest.approx(25.44 - 15.18)
    assert _check(report, "profile_order", "*", 5).status == "skip"
    for ps in (1, 2, 3, 4, 6, 7, 8, 9, 10):
        assert _check(report, "profile_order", "*", ps).status == "pass"


def test_validate_is_deterministic(bundle):
    assert validate(bundle) == validate(bundle)


def test_failed_check_names_cell(data_copy):
    _edit(data_copy / ingest.A1_FILE, "AL,2.11,14.38", "AL,2.11,-1")
    report = validate(ingest.load_bundle(data_copy))
    keys = {(c.check_id, c.entity, c.ps) for c in report.failures}
    assert ("level_nonneg", "AL", 1) in keys
    assert ("weight_vs_value", "AL", 1) in keys
    assert not report.ok


def test_resolve_data_dir(monkeypatch, tmp_path):
    monkeypatch.delenv(ingest.DATA_DIR_ENV, raising=False)
    monkeypatch.chdir(tmp_path)
    assert resolve_data_dir() == bundled_data_dir()
    monkeypatch.setenv(ingest.DATA_DIR_ENV, "/somewhere")
    assert str(resolve_data_dir()) == "/somewhere"
    assert str(resolve_data_dir("explicit")) == "explicit"
    monkeypatch.delenv(ingest.DATA_DIR_ENV)
    (tmp_path / "data").mkdir()
    (tmp_path / "data" / ingest.A1_FILE).write_text("")
    assert resolve_data_dir() == Path("data")
