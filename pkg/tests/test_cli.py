import csv
import subprocess
import sys
from pathlib import Path

import pytest

from nfl_lab import bounds
from nfl_lab.cli import main

GOLDEN = Path(__file__).parent / "golden"


def run(tmp_path, *args, name="out"):
    out = tmp_path / name
    code = main([*args, "--out", str(out)])
    return code, out


def rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def write_config(tmp_path, text, name="cfg.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


# --- predict-tree ------------------------------------------------------------------

@pytest.mark.parametrize("T, count", [(1, 2), (3, 128), (4, 32768)])
def test_predict_tree_rows(tmp_path, T, count):
    code, out = run(tmp_path, "predict-tree", "--T", str(T))
    assert code == 0
    table = rows(out / "report.csv")
    assert len(table) == count
    assert all((r["mean_error_num"], r["mean_error_den"]) == ("1", "2") for r in table)
    if T == 3:
        assert all([r[f"count_err_{k}_3"] for k in range(4)] == ["1", "3", "3", "1"] for r in table)
    assert (out / "plot.svg").read_text().startswith("<svg")
    assert "ALL CHECKS PASSED" in (out / "summary.txt").read_text()


def test_predict_tree_cap(tmp_path):
    assert run(tmp_path, "predict-tree", "--T", "5")[0] == 2


# --- classify-enum ------------------------------------------------------------------

def test_classify_enum_default_table_golden(tmp_path):
    code, out = run(tmp_path, "classify-enum")
    assert code == 0
    assert (out / "report.csv").read_text() == (GOLDEN / "six_seen_table.csv").read_text()
    profiles = rows(out / "profiles.csv")
    assert len(profiles) == 256 * 3
    for r in profiles:
        level = (r["error_level_num"], r["error_level_den"])
        assert r["count"] == {("0", "1"): "1", ("1", "2"): "2", ("1", "1"): "1"}[level]


def test_classify_enum_seven_seen(tmp_path):
    cfg = write_config(tmp_path, 'm = 3\nseen = ["000","001","010","011","100","101","110"]\nlabels = [0,1,0,1,0,1,0]\n')
    code, out = run(tmp_path, "classify-enum", "--config", cfg)
    assert code == 0
    levels = {(r["error_level_num"], r["error_level_den"], r["count"]) for r in rows(out / "profiles.csv")}
    assert levels == {("0", "1", "1"), ("1", "1", "1")}


def test_classify_enum_m2_two_seen(tmp_path):
    cfg = write_config(tmp_path, 'm = 2\nseen = ["00", "11"]\nlabels = [1, 0]\n')
    code, out = run(tmp_path, "classify-enum", "--config", cfg)
    assert code == 0
    profiles = rows(out / "profiles.csv")
    assert len({r["learner_output"] for r in profiles}) == 16
    assert {(r["error_level_num"], r["error_level_den"], r["count"]) for r in profiles} == {
        ("0", "1", "1"), ("1", "2", "2"), ("1", "1", "1")}


def test_classify_enum_cap(tmp_path):
    cfg = write_config(tmp_path, 'm = 4\nseen = ["0000"]\n')
    assert run(tmp_path, "classify-enum", "--config", cfg)[0] == 2


# --- conservation and gap --------------------------------------------------------------

def test_conservation_default_sweep(tmp_path):
    code, out = run(tmp_path, "conservation")
    assert code == 0
    table = rows(out / "report.csv")
    assert len(table) >= 6
    assert all(abs(float(r["expected_ots_risk"]) - 0.5) <= 1e-9 for r in table)


def test_conservation_mc_needs_seed(tmp_path):
    assert run(tmp_path, "conservation", "--mc", "--trials", "10")[0] == 2
    code, out = run(tmp_path, "conservation", "--mc", "--trials", "200", "--seed", "3")
    assert code == 0
    assert all(r["trials"] == "200" for r in rows(out / "report.csv"))


def test_gap_default(tmp_path):
    code, out = run(tmp_path, "gap")
    assert code == 0
    table = rows(out / "report.csv")
    learners = [r for r in table if r["learner"] != "analytic"]
    assert len(learners) == 5 and all(r["satisfied"] == "1" for r in learners)
    analytic = [r for r in table if r["learner"] == "analytic"][0]
    assert float(analytic["bound"]) == pytest.approx(9.094947e-07, rel=1e-6)


# --- bounds ------------------------------------------------------------------------------

def test_bounds_default_exact(tmp_path):
    code, out = run(tmp_path, "bounds")
    assert code == 0
    table = rows(out / "report.csv")
    assert len(table) == 8
    assert all(r["verdict"] == "SATISFIED" and r["trials"] == "0" for r in table)


def test_bounds_singleton_class_zero_width(tmp_path):
    cfg = write_config(tmp_path, """
m = 2
ns = [1, 3]
class = "F"
[classes.F]
members = ["0110"]
[situation]
conditionals = [0.3, 0.6, 0.9, 0.1]
""")
    code, out = run(tmp_path, "bounds", "--config", cfg)
    assert code == 0
    for r in rows(out / "report.csv"):
        assert float(r["rhs_bound"]) == 0 and float(r["lhs_estimate"]) == 0 and r["verdict"] == "SATISFIED"


def test_bounds_situation_from_csv(tmp_path):
    (tmp_path / "d.csv").write_text((GOLDEN / "situation_m2.csv").read_text())
    cfg = write_config(tmp_path, 'm = 2\nns = [2]\nclass = "F"\n[classes.F]\nall = true\n[situation]\ncsv = "d.csv"\n')
    assert run(tmp_path, "bounds", "--config", cfg)[0] == 0


def test_bounds_mc_requires_seed(tmp_path):
    cfg = write_config(tmp_path, 'm = 4\nns = [20]\nclass = "F"\n[classes.F]\nrandom = 8\n[situation]\nprior_seed = 2\n')
    assert run(tmp_path, "bounds", "--config", cfg)[0] == 2
    code, out = run(tmp_path, "bounds", "--config", cfg, "--seed", "1", "--trials", "200")
    assert code == 0
    assert all(r["trials"] == "200" for r in rows(out / "report.csv"))


def test_bounds_violation_sets_exit_code(tmp_path, monkeypatch):
    monkeypatch.setattr(bounds, "erm_bound", lambda size, n: -1.0)
    assert run(tmp_path, "bounds")[0] == 1


def test_bounds_fv_certificates_from_config(tmp_path):
    cfg = write_config(tmp_path, """
m = 1
ns = [2, 4]
certificates = ["fv", "anti_fv"]
[[learners]]
kind = "constant"
label = 0
[[learners]]
kind = "constant"
label = 1
[situation]
conditionals = [0.7, 0.4]
""")
    code, out = run(tmp_path, "bounds", "--config", cfg)
    assert code == 0
    assert [r["name"] for r in rows(out / "report.csv")] == ["forward_validation", "anti_forward_validation"] * 2


# --- paradox and cv-demo -------------------------------------------------------------------

def test_paradox_analytic_large_m(tmp_path):
    cfg = write_config(tmp_path, "m = 40\nn = 1000000\nclass_size = 2\n")
    code, out = run(tmp_path, "paradox", "--config", cfg)
    assert code == 0
    params = {r["quantity"]: r["value"] for r in rows(out / "params.csv")}
    assert float(params["delta"]) == pytest.approx(9.094947e-07, rel=1e-6)
    assert rows(out / "report.csv") == []


def test_paradox_simulated(tmp_path):
    code, out = run(tmp_path, "paradox", "--seed", "4", "--trials", "500")
    assert code == 0
    table = rows(out / "report.csv")
    assert len(table) == 500
    assert list(table[0]) == ["trial", "seed", "min_risk", "max_risk", "epsilon", "delta", "bound_satisfied"]


def test_cv_demo_small(tmp_path):
    assert run(tmp_path, "cv-demo", "--trials", "5")[0] == 2
    code, out = run(tmp_path, "cv-demo", "--seed", "2", "--trials", "40")
    assert code == 0
    assert len(rows(out / "report.csv")) == 40


# --- reproducibility and plumbing ------------------------------------------------------------

@pytest.mark.parametrize("args", [
    ["cv-demo", "--seed", "9", "--trials", "30"],
    ["paradox", "--seed", "9", "--trials", "200"],
    ["conservation", "--mc", "--seed", "9", "--trials", "100"],
    ["gap", "--mc", "--seed", "9", "--trials", "100"],
])
def test_same_seed_gives_byte_identical_files(tmp_path, args):
    _, a = run(tmp_path, *args, name="a")
    _, b = run(tmp_path, *args, name="b")
    for f in sorted(p.name for p in a.iterdir()):
        assert (a / f).read_bytes() == (b / f).read_bytes(), f


def test_different_seed_changes_report(tmp_path):
    _, a = run(tmp_path, "paradox", "--seed", "1", "--trials", "50", name="a")
    _, b = run(tmp_path, "paradox", "--seed", "2", "--trials", "50", name="b")
    assert (a / "report.csv").read_bytes() != (b / "report.csv").read_bytes()


def test_bad_config_exit_code(tmp_path):
    cfg = write_config(tmp_path, 'm = 2\nn = 2\n[[learners]]\nkind = "nonsense"\n')
    assert run(tmp_path, "conservation", "--config", cfg)[0] == 2
    assert run(tmp_path, "bounds", "--config", str(tmp_path / "missing.toml"))[0] == 2


def test_help_lists_subcommands():
    proc = subprocess.run([sys.executable, "-m", "nfl_lab", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for cmd in ("predict-tree", "classify-enum", "conservation", "gap", "bounds", "paradox", "cv-demo"):
        assert cmd in proc.stdout
