import csv
import json
import subprocess
import sys

import pytest

from uiuf.analysis import read_table, write_table
from uiuf.cli import EXIT_BUDGET, EXIT_INVALID, EXIT_OK, main
from uiuf.codes import build_code


def _json_out(capsys):
    return json.loads(capsys.readouterr().out)


def test_simulate_fixed_trials_json(tmp_path, capsys):
    out = tmp_path / "run.json"
    code = main(["simulate", "--family", "toric", "--d", "4", "--epsilon", "0.08", "--decoder", "uiuf",
                 "--wg", "--trials", "2000", "--out", str(out)])
    assert code == EXIT_OK
    row = _json_out(capsys)
    assert row["trials"] == 2000 and row["decoder"] == "uiuf" and row["wg"] is True
    assert json.loads(out.read_text()) == [row]


def test_simulate_csv_and_config(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("family = rotated_surface\nd = 3\nepsilon = 0.05\ntrials = 1000\nmodel = phenomenological\n"
                   "reduced-meas = true\n")
    out = tmp_path / "run.csv"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    with out.open() as fh:
        (row,) = list(csv.DictReader(fh))
    assert list(row)[:4] == ["family", "d", "epsilon", "decoder"]
    assert row["family"] == "rotated_surface" and row["rounds"] == "4" and row["trials"] == "1000"
    # command-line flags override the config file
    capsys.readouterr()
    assert main(["simulate", "--config", str(cfg), "--d", "5"]) == EXIT_OK
    assert _json_out(capsys)["d"] == 5


def test_unknown_config_key_is_invalid(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n")
    assert main(["simulate", "--config", str(cfg)]) == EXIT_INVALID


def test_simulate_budget_exhausted_exit_code(capsys):
    code = main(["simulate", "--family", "toric", "--d", "6", "--epsilon", "0.01", "--max-trials", "2000",
                 "--batch-size", "1000"])
    assert code == EXIT_BUDGET
    assert _json_out(capsys)["budget_exhausted"] is True


@pytest.mark.parametrize(
    "argv",
    [
        ["simulate", "--family", "toric", "--d", "4"],
        ["simulate", "--family", "toric", "--d", "3", "--epsilon", "0.1", "--rounds", "2"],
        ["simulate", "--family", "hexagonal", "--d", "4", "--epsilon", "0.1"],
        ["simulate", "--family", "rotated_toric", "--d", "5", "--epsilon", "0.1"],
        ["decode-one", "--family", "toric", "--d", "4", "--x", "99"],
    ],
)
def test_invalid_plans_exit_code(argv):
    assert main(argv) == EXIT_INVALID


def test_argparse_errors_exit_invalid():
    with pytest.raises(SystemExit) as info:
        main(["simulate", "--decoder", "mwpm"])
    assert info.value.code == EXIT_INVALID


def test_sweep_with_journal_resumes(tmp_path, capsys):
    journal = tmp_path / "cells.jsonl"
    argv = ["sweep", "--family", "toric", "--d", "4,6", "--epsilon", "0.05,0.1", "--decoder", "uf,uiuf",
            "--trials", "1000", "--journal", str(journal), "--out", str(tmp_path / "grid.csv")]
    assert main(argv) == EXIT_OK
    rows = read_table(tmp_path / "grid.csv")
    assert len(rows) == 8 and {r["status"] for r in rows} == {"ok"}
    assert len(journal.read_text().splitlines()) == 8
    capsys.readouterr()
    assert main(argv) == EXIT_OK
    assert read_table(tmp_path / "grid.csv") == rows


def test_enumerate_and_budget(tmp_path, capsys):
    out = tmp_path / "enum.csv"
    assert main(["enumerate", "--family", "rotated_surface", "--d", "5", "--decoder", "iruf",
                 "--iter-max", "1,2", "--out", str(out)]) == EXIT_OK
    rows = read_table(out)
    assert [r["iter_max"] for r in rows] == [1, 2]
    assert rows[0]["total"] == 2700 and rows[0]["failures"] == rows[0]["X"] + rows[0]["Z"] + rows[0]["Y"] + rows[0]["mixed"]
    assert main(["enumerate", "--family", "rotated_toric", "--d", "6", "--budget", "1000"]) == EXIT_BUDGET
    capsys.readouterr()
    assert main(["enumerate", "--family", "rotated_surface", "--d", "5", "--erasures", "2", "--weight", "1",
                 "--decoder", "uiuf"]) == EXIT_OK
    mixed = _json_out(capsys)[0]
    assert mixed["exhaustive"] and mixed["failures"] == 0


def test_fit_threshold_subcommand(tmp_path, capsys):
    rows = []
    for d in (8, 12, 16, 20):
        for i in range(9):
            eps = 0.08 + 0.005 * i
            x = d * (eps - 0.1)
            rows.append({"family": "toric", "d": d, "epsilon": eps, "decoder": "uf", "wg": False,
                         "trials": 10, "failures": 1, "p_L": 0.1 + 0.8 * x + 1.5 * x * x, "stderr": 0.001})
    table = tmp_path / "grid.csv"
    write_table(rows, table)
    assert main(["fit-threshold", str(table), "--decoder", "uf"]) == EXIT_OK
    fit = _json_out(capsys)
    assert fit["tau"] == pytest.approx(0.1, abs=1e-4) and fit["nu"] == pytest.approx(1.0, abs=0.01)
    write_table(rows[:9], table)
    assert main(["fit-threshold", str(table)]) == EXIT_INVALID
    assert main(["fit-threshold"]) == EXIT_INVALID


def test_bench_reports_scaling(capsys):
    assert main(["bench", "--d", "4,6,8", "--decoder", "uf", "--trials", "2000"]) == EXIT_OK
    rows = _json_out(capsys)
    assert [r["d"] for r in rows] == [4, 6, 8]
    assert all("slope" in r and "r2" in r for r in rows)
    assert [r["variables"] for r in rows] == [32, 72, 128]


def test_decode_one_with_trace(tmp_path, capsys):
    trace = tmp_path / "trace.jsonl"
    argv = ["decode-one", "--family", "toric", "--d", "6", "--y", "28", "--z", "52,64"]
    assert main(argv + ["--decoder", "uf"]) == EXIT_OK
    uf = _json_out(capsys)
    assert uf["logical_failure"] and uf["syndrome_match"]
    assert main(argv + ["--decoder", "uiuf", "--trace", str(trace)]) == EXIT_OK
    ui = _json_out(capsys)
    assert not ui["logical_failure"] and 28 in ui["shared"]
    stages = [json.loads(line)["stage"] for line in trace.read_text().splitlines()]
    assert stages[0] == "union" and "intersection" in stages and stages[-1] == "final"


def test_export(tmp_path):
    out = tmp_path / "code.json"
    assert main(["export", "--family", "rotated_surface", "--d", "3", "--rounds", "2", "--out", str(out)]) == EXIT_OK
    doc = json.loads(out.read_text())
    assert doc["code"] == build_code("rotated_surface", 3).to_dict()
    assert doc["graph_x"]["rounds"] == 2 and set(doc) == {"code", "graph_x", "graph_z"}


def test_console_script_exit_status():
    proc = subprocess.run([sys.executable, "-m", "uiuf.cli", "simulate", "--family", "toric"],
                          capture_output=True, text=True)
    assert proc.returncode == EXIT_INVALID and "missing" in proc.stderr
