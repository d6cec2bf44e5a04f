import pytest

from conftest import CORPUS_DIR
from evoarch.cli import main


def test_run_program(tmp_path, capsys):
    assert main(["run", f"{CORPUS_DIR}/fig13_system.adl", "--seed", "2",
                 "--trace", str(tmp_path / "trace.txt")]) == 0
    out = capsys.readouterr().out
    assert "value CS_system1 : behaviour" in out
    assert "quiescent" in out
    lines = (tmp_path / "trace.txt").read_text().splitlines()
    assert any(" SEND_RECV " in line for line in lines)
    steps = [int(line.split()[0]) for line in lines]
    assert steps == sorted(steps)


def test_typecheck_only_ok(capsys):
    assert main(["run", f"{CORPUS_DIR}/fig04_replication.adl",
                 "--typecheck-only"]) == 0
    assert capsys.readouterr().out.strip() == "OK"


def test_typecheck_only_diagnostics(tmp_path, capsys):
    bad = tmp_path / "bad.adl"
    bad.write_text("value c = connection(string) ;\nvia c send 5", encoding="utf-8")
    assert main(["run", str(bad), "--typecheck-only"]) == 2
    record = capsys.readouterr().out.strip()
    assert record.startswith("ERROR 2:")
    assert "type" in record


def test_run_error_exit(tmp_path, capsys):
    bad = tmp_path / "bad.adl"
    bad.write_text("value x = nope", encoding="utf-8")
    assert main(["run", str(bad)]) == 1
    assert "error (type)" in capsys.readouterr().err


def test_repl_script_mode(tmp_path, capsys, monkeypatch):
    script = tmp_path / "session.txt"
    script.write_text("value x = 2 * 21 ;\n:bindings\n", encoding="utf-8")
    assert main(["repl", "--script", str(script)]) == 0
    out = capsys.readouterr().out
    assert "value x : integer = 42" in out


def test_run_script_flag(tmp_path, capsys):
    script = tmp_path / "session.txt"
    script.write_text("value y = 1 + 1 ;\n:behaviours\n", encoding="utf-8")
    assert main(["run", str(script), "--script"]) == 0
    assert "value y : integer = 2" in capsys.readouterr().out


def test_run_from_snapshot(tmp_path, capsys):
    from evoarch.workspace import Workspace
    ws = Workspace(seed=5)
    ws.eval_source("value base = 40")
    snap = tmp_path / "w.snap"
    ws.save_snapshot(snap)
    prog = tmp_path / "more.adl"
    prog.write_text("value total = base + 2", encoding="utf-8")
    assert main(["run", str(prog), "--load", str(snap)]) == 0
    assert "value total : integer = 42" in capsys.readouterr().out
