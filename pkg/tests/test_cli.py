import csv
import os
import subprocess
import sys

import pytest

from dddmoea.cli import main

FAST = ["--problem", "DF1", "--taut", "2", "--changes", "3", "--runs", "1", "--pop-size", "12", "--dim", "4"]


def lines(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def test_run_writes_outputs(tmp_path, capsys):
    out = str(tmp_path / "res" / "df1")
    assert main(["run", *FAST, "--K", "20", "--out", out]) == 0
    printed = capsys.readouterr().out.split()
    assert printed == [f"{out}.rows.csv", f"{out}.summary.csv", f"{out}.timing.csv", f"{out}.config.ini"]
    assert len(lines(f"{out}.rows.csv")) == 4
    with open(f"{out}.config.ini", encoding="utf-8") as fh:
        text = fh.read()
    assert "K = 20" in text and "N = 12" in text


def test_run_is_deterministic(tmp_path):
    for name in ("a", "b"):
        assert main(["run", *FAST, "--seed", "3", "--out", str(tmp_path / name)]) == 0
    with open(tmp_path / "a.rows.csv", "rb") as fa, open(tmp_path / "b.rows.csv", "rb") as fb:
        assert fa.read() == fb.read()


def test_run_several_problems_gets_one_prefix_each(tmp_path):
    args = ["run", *FAST, "--out", str(tmp_path / "x")]
    args[args.index("DF1")] = "DF1,DF3"
    assert main(args) == 0
    assert os.path.exists(tmp_path / "x.DF1.rows.csv") and os.path.exists(tmp_path / "x.DF3.rows.csv")


def test_flags_override_config_file(tmp_path):
    ini = tmp_path / "c.ini"
    ini.write_text("[experiment]\nproblem = DF2\nchanges = 2\n[ddm]\nK = 10\n")
    out = str(tmp_path / "o")
    assert main(["run", "--config", str(ini), "--changes", "3", "--runs", "1", "--taut", "1",
                 "--pop-size", "10", "--dim", "4", "--out", out]) == 0
    assert len(lines(f"{out}.rows.csv")) == 4
    with open(f"{out}.config.ini", encoding="utf-8") as fh:
        text = fh.read()
    assert "problem = DF2" in text and "K = 10" in text


def test_compare_writes_table(tmp_path):
    out = str(tmp_path / "cmp")
    assert main(["compare", *FAST, "--strategies", "ddm,v3", "--settings", "10:2,5:2", "--out", out]) == 0
    rows = lines(f"{out}.compare.csv")
    assert len(rows) == 3 and "v3_migd" in rows[0]


def test_pof_dump(tmp_path):
    out = str(tmp_path / "pof.csv")
    assert main(["pof", "--problem", "DF1", "--t", "0.3", "--count", "50", "--out", out]) == 0
    rows = lines(out)
    assert rows[0] == ["f1", "f2"] and len(rows) == 51


def test_knees_dump(tmp_path):
    out = str(tmp_path / "knees.csv")
    assert main(["knees", "--problem", "DF1", "--changes", "4", "--taut", "2", "--dim", "4", "--out", out]) == 0
    rows = lines(out)
    kinds = {r[3] for r in rows[1:]}
    assert kinds == {"predicted", "extracted"}
    assert any(r[4] != "" for r in rows[1:] if r[3] == "predicted")


@pytest.mark.parametrize("argv", [
    ["run", "--problem", "DF99", "--out", "x"],
    ["run", "--problem", "DF1", "--strategy", "v9", "--out", "x"],
    ["run", "--problem", "DF1", "--runs", "0", "--out", "x"],
    ["run", "--problem", "DF1"],
    ["run", "--problem", "DF1", "--nt", "ten", "--out", "x"],
    ["compare", "--problem", "DF1", "--strategies", "ddm", "--out", "x"],
    ["compare", "--problem", "DF1", "--strategies", "ddm,v2", "--settings", "10-10", "--out", "x"],
    ["pof", "--problem", "DF42", "--t", "0", "--out", "x"],
    ["bogus"],
])
def test_config_errors_exit_2(argv, tmp_path, capsys):
    assert main([a if a != "x" else str(tmp_path / "x") for a in argv]) == 2
    assert "error" in capsys.readouterr().err


def test_missing_config_file_exits_2(tmp_path):
    assert main(["run", "--config", str(tmp_path / "none.ini"), "--out", str(tmp_path / "x")]) == 2


def test_unwritable_path_exits_1(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["run", *FAST, "--out", str(blocker / "sub" / "x")]) == 1
    assert str(blocker) in capsys.readouterr().err


def test_module_entry_point_help():
    done = subprocess.run([sys.executable, "-m", "dddmoea", "--help"], capture_output=True, text=True)
    assert done.returncode == 0 and "run" in done.stdout
