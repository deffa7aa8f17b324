import json
import subprocess
import sys

import pytest

from randsld.cli import analyze_report, main, read_config


def _run(capsys, *argv):
    assert main(list(argv)) == 0
    return capsys.readouterr()


def test_analyze_valid_point():
    rep = analyze_report(3, 1 / 3, 0.5, 0.5)
    ds = rep["drop_shuffle"]
    assert ds["valid"] and ds["C"] == pytest.approx(8.0)
    assert ds["q"]["0"] == 0.5 and ds["q"]["1"] == pytest.approx(0.875)
    g = rep["guard"]
    assert g["valid"] and g["E_O"] == pytest.approx(2.0) and g["E_N"] == pytest.approx(8.0)
    assert g["hitting_time"]["1/1"] == pytest.approx(40.6666666667)


def test_analyze_divergent_constant():
    ds = analyze_report(3, 1 / 3, 0.5, 0.3)["drop_shuffle"]
    assert not ds["valid"]
    assert ds["C"].startswith("diverges") and "1 - 1/sqrt(r)" in ds["C"]
    assert "h" not in ds


def test_analyze_invalid_guard():
    g = analyze_report(1, 1.0, 1.0, 0.5)["guard"]
    assert g["valid"] is False and len(g["reasons"]) == 2
    assert "E_O" not in g and not g["hitting_valid"]


def test_analyze_json_and_out(tmp_path, capsys):
    out = _run(capsys, "analyze", "--p-drop", "0.5").out
    assert json.loads(out)["drop_shuffle"]["C"] == pytest.approx(8.0)
    f = tmp_path / "a.json"
    assert _run(capsys, "analyze", "--out", str(f)).out == ""
    assert f.read_text() == out


def test_config_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("# defaults\np-drop = 0.8\n--r=2\n\n")
    assert read_config(str(cfg)) == {"p_drop": "0.8", "r": "2"}
    rep = json.loads(_run(capsys, "analyze", "--config", str(cfg)).out)
    assert rep["drop_shuffle"]["params"] == {"r": 2, "p_d": 0.8}
    rep = json.loads(_run(capsys, "analyze", "--config", str(cfg), "--p-drop", "0.6").out)
    assert rep["drop_shuffle"]["params"] == {"r": 2, "p_d": 0.6}


def test_bad_config_line(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("nonsense\n")
    with pytest.raises(ValueError):
        read_config(str(cfg))


def test_bench_commands_csv(tmp_path, capsys):
    out = _run(capsys, "bench", "commands", "--goal-length", "1", "--trials", "4", "--seed", "5").out
    lines = out.split("\r\n")
    assert lines[0].startswith("run_id,benchmark,strategy") and len(lines) == 6


def test_bench_config_file(tmp_path, capsys):
    cfg = tmp_path / "b.cfg"
    cfg.write_text("trials=3\nseed=9\ncount-inclusive=yes\n")
    out = _run(capsys, "bench", "expr", "--config", str(cfg), "--target-value", "6").out
    rows = out.strip().split("\r\n")
    assert len(rows) == 4 and all(r.split(",")[6] == "6" for r in rows[1:])
    again = _run(capsys, "bench", "expr", "--target-value", "6", "--trials", "3", "--seed", "9",
                 "--count-inclusive").out
    assert out == again


def test_bench_gnuplot_and_summary(tmp_path, capsys):
    csv_path, gp = tmp_path / "o.csv", tmp_path / "o.gp"
    res = _run(capsys, "bench", "commands", "--goal-length", "1", "--trials", "50",
               "--out", str(csv_path), "--gnuplot", str(gp), "--summary")
    assert json.loads(res.err)["trials"] == 50
    assert str(csv_path) in gp.read_text()


def test_run_subcommand(tmp_path, capsys):
    prog = tmp_path / "p.pl"
    prog.write_text("t([]).\nt([H|T]) :- c(H), t(T).\nc(a).\nc(b).\n")
    rep = json.loads(_run(capsys, "run", str(prog), "t(X)", "--max-steps", "40").out)
    assert rep["truncated"] and rep["answers"][:3] == [{"X": "[]"}, {"X": "[a]"}, {"X": "[a,a]"}]
    rep = json.loads(_run(capsys, "run", str(prog), "t(X)", "--strategy", "drop_shuffle",
                          "--p-drop", "0.5", "--target", "[b]", "--seed", "4").out)
    assert rep["target"] == "[b]" and rep["iterations"] >= 1 and not rep["truncated"]


def test_simulate_chain_guard(capsys):
    rep = json.loads(_run(capsys, "simulate-chain", "--trials", "20000", "--goal-length", "1").out)
    assert abs(rep["outputs"]["z"]) < 4 and abs(rep["visits"]["z"]) < 4
    h = rep["hitting_time"]["1/1"]
    assert h["analytic"] == pytest.approx(122 / 3) and abs(h["z"]) < 4


def test_simulate_chain_ds(capsys):
    rep = json.loads(_run(capsys, "simulate-chain", "--chain", "ds", "--trials", "20000",
                          "--goal-length", "1").out)
    assert rep["constant"]["analytic"] == pytest.approx(8.0) and abs(rep["constant"]["z"]) < 4
    assert set(rep["exit_before_hit"]) == {"0", "1"}


@pytest.mark.parametrize("argv", [
    ["analyze"],
    ["simulate-chain", "--trials", "2000", "--goal-length", "1"],
    ["simulate-chain", "--chain", "ds", "--trials", "2000", "--goal-length", "1"],
    ["bench", "commands", "--trials", "30", "--goal-length", "2"],
    ["bench", "expr", "--trials", "10", "--target-value", "-4", "--strategy", "drop_shuffle",
     "--p-drop", "0.7"],
])
def test_same_seed_same_bytes(argv, capsys):
    a = _run(capsys, *argv, "--seed", "3").out
    b = _run(capsys, *argv, "--seed", "3").out
    assert a == b


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "randsld", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "bench" in res.stdout
    res = subprocess.run([sys.executable, "-m", "randsld", "bench", "commands", "--help"],
                         capture_output=True, text=True)
    assert "strictly before" in " ".join(res.stdout.split())
