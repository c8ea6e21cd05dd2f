from __future__ import annotations

import csv

import pytest

from riskdex.ingest import bundled_data_dir
from riskdex.model import (
    CODES,
    ENTITIES,
    PUBLISHED_RULES,
    Kind,
    Phase,
    TieBreak,
    UnknownEntityError,
    UnknownPsError,
    VariantConfig,
    WeightSource,
    canonical_index,
    canonical_sorted,
    catalog,
    default_variant_grid,
    entity_by_name,
    extended_variant_grid,
    ps_def,
)


def test_catalog_examples():
    cat = catalog()
    assert len(cat) == 10
    assert [d.id for d in cat] == list(range(1, 11))
    assert (cat[0].id, cat[0].phase, cat[0].kind) == (1, Phase.MAF_DEVELOPMENT, Kind.LEVEL_2020)
    assert (cat[9].id, cat[9].phase, cat[9].kind) == (10, Phase.GROUP_QUARTERS, Kind.LEVEL_2020)
    assert sum(d.kind is Kind.DIFFERENCE for d in cat) == 6


def test_catalog_metadata():
    by_id = {d.id: d for d in catalog()}
    assert {i for i, d in by_id.items() if d.is_difference} == {3, 4, 5, 6, 8, 9}
    phases = {1: "maf", 2: "sr", 3: "sr", 4: "sr", 5: "nrfu", 6: "nrfu", 7: "nrfu",
              8: "dp", 9: "dp", 10: "gq"}
    assert {i: d.phase.short for i, d in by_id.items()} == phases
    sources = {WeightSource.SELF_VALUE: {1, 7}, WeightSource.COMPONENT_2020: {3, 5, 6, 8, 9},
               WeightSource.REBASED: {2, 4, 10}}
    for source, ids in sources.items():
        assert {i for i, d in by_id.items() if d.weight_source is source} == ids


def test_catalog_is_idempotent():
    assert catalog() == catalog()
    cat = catalog()
    cat.pop()
    assert len(catalog()) == 10


def test_unknown_ps():
    with pytest.raises(UnknownPsError):
        ps_def(11)


def test_entities():
    assert len(ENTITIES) == 52
    assert sum(e.is_us for e in ENTITIES) == 1
    assert canonical_index("US") == 0
    assert canonical_index("AL") == 1
    assert canonical_index("DC") == canonical_index("DE") + 1
    assert sorted(canonical_index(c) for c in CODES) == list(range(52))
    assert entity_by_name("Maryland").code == "MD"


def test_unknown_entity_names_code():
    with pytest.raises(UnknownEntityError, match="ZZ"):
        canonical_index("ZZ")


def test_canonical_order_matches_a1_rows():
    with open(bundled_data_dir() / "a1_process_statistics.csv", newline="") as fh:
        rows = [r["state"] for r in csv.DictReader(fh)]
    assert rows == list(CODES)
    assert canonical_sorted(reversed(rows)) == rows


def test_variant_config_validation():
    with pytest.raises(ValueError):
        VariantConfig(quintile_n51_scheme=(10, 10, 10, 10, 10))
    with pytest.raises(ValueError):
        VariantConfig(quintile_n51_scheme=(11, 10, 10, 20))
    assert VariantConfig(quintile_n51_scheme=(10, 10, 11, 10, 10)).quintile_n51_scheme[2] == 11


def test_variant_grids():
    grid = default_variant_grid()
    assert len(grid) == 4
    assert len({c.label for c in grid}) == 4
    assert all(c.tie_break is TieBreak.CANONICAL for c in grid)
    ext = extended_variant_grid()
    assert ext[:4] == grid and ext[4] == PUBLISHED_RULES
    assert "tie-published" in PUBLISHED_RULES.label
