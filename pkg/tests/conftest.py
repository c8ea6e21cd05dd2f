from __future__ import annotations

import shutil
import sys
from pathlib import Path

import pytest
from hypothesis import settings

from riskdex.aggregate import run_variant
from riskdex.ingest import bundled_data_dir, load_bundle

settings.register_profile("riskdex", max_examples=50, deadline=None)
settings.load_profile("riskdex")


@pytest.fixture(scope="session")
def bundle():
    return load_bundle(bundled_data_dir())


@pytest.fixture(scope="session")
def default_result(bundle):
    return run_variant(bundle)


@pytest.fixture
def data_copy(tmp_path) -> Path:
    """Writable copy of the shipped fixtures for fault injection."""
    target = tmp_path / "data"
    shutil.copytree(bundled_data_dir(), target)
    return target


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("tests.test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(lines, key=module.sort_key):
        terminalreporter.write_line(line)
