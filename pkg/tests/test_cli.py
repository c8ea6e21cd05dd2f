from __future__ import annotations

import csv
import hashlib
import json
import re
import subprocess
import sys

import pytest

from riskdex import ingest
from riskdex.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def _tree_digest(root):
    h = hashlib.sha256()
    for p in sorted(root.rglob("*")):
        if p.is_file():
            h.update(str(p.relative_to(root)).encode())
            h.update(p.read_bytes())
    return h.hexdigest()


def test_validate_ok(capsys):
    code, out, _ = run(capsys, "validate")
    assert code == 0 and out.startswith("OK")


def test_validate_json(capsys):
    code, out, _ = run(capsys, "validate", "--format", "json")
    doc = json.loads(out)
    assert code == 0 and doc["ok"] and doc["failures"] == []


def test_validate_injected_fault(capsys, data_copy):
    path = data_copy / ingest.A1_FILE
    path.write_text(path.read_text().replace("AL,2.11,14.38", "AL,2.11,-1", 1))
    code, out, _ = run(capsys, "validate", "--data-dir", str(data_copy))
    assert code == 1
    assert "(AL, ps1)" in out


def test_missing_weights_file(capsys, data_copy):
    (data_copy / ingest.A2_FILE).unlink()
    code, _, err = run(capsys, "validate", "--data-dir", str(data_copy))
    assert code == 2 and "a2_weights.csv" in err


def test_unparsable_cell_is_io_failure(capsys, data_copy):
    path = data_copy / ingest.A3_FILE
    path.write_text(path.read_text().replace("AL,25.44", "AL,oops", 1))
    assert run(capsys, "stats", "--data-dir", str(data_copy))[0] == 2


def test_env_var_data_dir(capsys, monkeypatch, tmp_path):
    monkeypatch.setenv(ingest.DATA_DIR_ENV, str(tmp_path / "nothing"))
    assert run(capsys, "validate")[0] == 2


def test_compute_default(capsys, tmp_path):
    code, _, _ = run(capsys, "compute", "--out-dir", str(tmp_path))
    assert code == 0
    rows = list(csv.DictReader(open(tmp_path / "sps.csv", newline="")))
    assert len(rows) == 51 and rows[0]["state"] == "AL"
    assert all(1 <= float(r["sps"]) <= 5 for r in rows)
    doc = json.loads((tmp_path / "sps.json").read_text())
    assert "warning" not in doc and len(doc["rows"]) == 51


def test_compute_no_zeroing(capsys, tmp_path):
    run(capsys, "compute", "--no-zeroing", "--out-dir", str(tmp_path))
    rows = list(csv.DictReader(open(tmp_path / "sps.csv", newline="")))
    assert rows[0]["state"] == "AL" and rows[0]["zeroed"] == ""


def test_compute_refuses_bad_data_then_force(capsys, data_copy, tmp_path):
    path = data_copy / ingest.A1_FILE
    path.write_text(path.read_text().replace("AL,2.11,14.38", "AL,2.11,-1", 1))
    out = tmp_path / "o"
    code, _, err = run(capsys, "compute", "--data-dir", str(data_copy), "--out-dir", str(out))
    assert code == 1 and "(AL, ps1)" in err and not out.exists()
    code, _, _ = run(capsys, "compute", "--data-dir", str(data_copy), "--out-dir", str(out),
                     "--force")
    assert code == 0
    assert "warning" in json.loads((out / "sps.json").read_text())


def test_stats_ps1(capsys):
    code, out, _ = run(capsys, "stats", "--ps", "1")
    assert code == 0 and "11.3 5.9 26.6 20.7 1.8" in out


def test_top_ps3(capsys):
    code, out, _ = run(capsys, "top", "--ps", "3", "--k", "11")
    lines = out.split("\n")
    assert code == 0 and lines[0].split()[1] == "NM" and len([l for l in lines if l]) == 11


def test_correlate(capsys):
    code, out, _ = run(capsys, "correlate", "--x", "published_sps", "--y", "rel_diff")
    r = float(re.search(r"r = (-?[\d.]+)", out).group(1))
    assert code == 0 and out.startswith("pearson") and abs(r - 0.17) <= 0.03
    _, out, _ = run(capsys, "correlate", "--method", "spearman")
    assert out.startswith("spearman")


@pytest.mark.parametrize("argv", [
    ["top", "--ps", "11"],
    ["stats", "--ps", "zero"],
    ["profile", "--ps", "0"],
])
def test_unknown_ps(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 1 and "usage:" in err


@pytest.mark.parametrize("argv", [
    ["compute", "--no-zeroing", "--zero-rule", "nonpositive"],
    ["compute", "--no-zeroing", "--no-rescale"],
    ["compute", "--n51-scheme", "11,10,10,10,10"],
    ["compute", "--preset", "published", "--no-include-us"],
    ["compute", "--no-include-us", "--n51-scheme", "10,10,10,10,10"],
    ["compute", "--format", "svg"],
    ["profile", "--ps", "all"],
])
def test_invalid_combinations_write_nothing(capsys, tmp_path, argv):
    out = tmp_path / "out"
    code = main([*argv, "--out-dir", str(out)] if "--ps" not in argv else argv)
    capsys.readouterr()
    assert code == 1
    assert not out.exists()


def test_profile_to_stdout_and_files(capsys, tmp_path):
    code, out, _ = run(capsys, "profile", "--ps", "1", "--format", "json")
    assert code == 0 and json.loads(out)["rows"][0]["state"] == "MD"
    code, _, _ = run(capsys, "profile", "--ps", "all", "--format", "svg",
                     "--out-dir", str(tmp_path))
    assert code == 0 and len(list(tmp_path.glob("ps*.svg"))) == 10


def test_reconcile(capsys):
    code, out, _ = run(capsys, "reconcile")
    assert code == 0 and out.count("<- best") == 1 and "2.38" in out
    code, out, _ = run(capsys, "reconcile", "--extended", "--format", "json")
    assert json.loads(out)["best_variant"].endswith("tie-published")


def test_report_is_reproducible_and_leaves_data_alone(capsys, tmp_path, data_copy):
    before = _tree_digest(data_copy)
    for name in ("a", "b"):
        code, _, _ = run(capsys, "report", "--data-dir", str(data_copy),
                         "--out-dir", str(tmp_path / name), "--extended")
        assert code == 0
    assert _tree_digest(tmp_path / "a") == _tree_digest(tmp_path / "b")
    assert _tree_digest(data_copy) == before
    names = {p.relative_to(tmp_path / "a").as_posix() for p in (tmp_path / "a").rglob("*")
             if p.is_file()}
    assert {"summary.md", "decomposition.md", "waffle_2020.svg", "maps/sps.svg",
            "profiles/ps1.md", "reconciliation.md"} <= names


def test_help_lists_flags(capsys):
    assert main(["compute", "--help"]) == 0
    out = capsys.readouterr().out
    for flag in ("--data-dir", "--include-us", "--zeroing", "--tie-break", "--n51-scheme",
                 "--force", "--out-dir"):
        assert flag in out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "riskdex", "stats", "--ps", "9"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and proc.stdout.startswith("PS9 -0.2")
