import csv
import io
import json
import shutil
import subprocess
import sys

import pytest

from gpsmc.cli import CSV_COLUMNS, EXIT_ERROR, EXIT_EXHAUSTED, EXIT_SAFE, EXIT_UNSAFE, expected_verdict, main


def test_exit_codes(bench, capsys):
    assert main(["verify", str(bench / "ex2.imp")]) == EXIT_SAFE
    assert main(["verify", str(bench / "ex1.imp")]) == EXIT_UNSAFE
    assert main(["verify", str(bench / "ex3.imp"), "--engine", "gpslite", "--max-frontier", "20"]) == EXIT_EXHAUSTED
    out = capsys.readouterr().out
    assert "VERDICT: SAFE" in out and "VERDICT: UNSAFE" in out and "VERDICT: EXHAUSTED" in out


def test_errors_exit_3(tmp_path, capsys):
    bad = tmp_path / "bad.imp"
    bad.write_text("vars x;\nx := y;\n")
    assert main(["verify", str(bad)]) == EXIT_ERROR
    assert "2:6" in capsys.readouterr().err
    assert main(["verify", str(tmp_path / "missing.imp")]) == EXIT_ERROR
    assert main(["verify", str(bench_file(tmp_path)), "--solver", "no-such-solver-xyz"]) == EXIT_ERROR
    assert main(["verify"]) == EXIT_ERROR
    assert main(["corpus", str(bad)]) == EXIT_ERROR


def bench_file(tmp_path):
    p = tmp_path / "ok.imp"
    p.write_text("// expect: safe\nvars x;\nx := 1;\nassert(x == 1);\n")
    return p


def test_witness_and_dumps(bench, tmp_path, capsys, solver):
    w, cfg, sums, art = (tmp_path / n for n in ("w.json", "g.dot", "s.smt2", "a.dot"))
    code = main([
        "verify", str(bench / "ex1.imp"), "-v",
        "--witness", str(w), "--dump-cfg", str(cfg), "--dump-summaries", str(sums), "--dump-art", str(art),
    ])
    assert code == EXIT_UNSAFE
    out = capsys.readouterr().out
    assert "witness initial state:" in out and "step 0: A" in out
    data = json.loads(w.read_text())
    assert len(data["states"]) == len(data["path"]) + 1
    assert data["states"][0]["N"] >= 1000
    assert cfg.read_text().startswith("digraph cfg")
    assert art.read_text().startswith("digraph art")
    text = sums.read_text()
    assert "(define-fun |Sum_B|" in text and "; Sum(B):" in text
    # the definitions are accepted by the solver
    r = subprocess.run(["z3", "-in"], input=text + "(check-sat)\n", capture_output=True, text=True, timeout=30)
    assert "error" not in r.stdout and r.stdout.strip() == "sat"


def test_corpus_reports_and_csv(bench, tmp_path, capsys):
    d = tmp_path / "c"
    d.mkdir()
    for n in ("ex1.imp", "ex2.imp", "ex2.wg"):
        shutil.copy(bench / n, d)
    (d / "note.imp").write_text("vars x;\nx := 1;\n")
    report = tmp_path / "r.csv"
    assert main(["corpus", str(d), "--csv", str(report)]) == 0
    captured = capsys.readouterr()
    assert "no '// expect:' annotation" in captured.err
    assert "3 files, 0 contradictions, 0 art violations" in captured.out
    rows = list(csv.reader(io.StringIO(report.read_text())))
    assert rows[0] == CSV_COLUMNS and len(rows) == 4
    assert {r[0]: r[1] for r in rows[1:]} == {"ex1.imp": "unsafe", "ex2.imp": "safe", "ex2.wg": "safe"}


def test_corpus_flags_contradictions(bench, tmp_path, capsys):
    d = tmp_path / "c"
    d.mkdir()
    (d / "lie.imp").write_text((bench / "ex1.imp").read_text().replace("expect: unsafe", "expect: safe"))
    assert main(["corpus", str(d)]) == 1
    assert "CONTRADICTION" in capsys.readouterr().out


def test_empty_corpus_is_fine(tmp_path, capsys):
    assert main(["corpus", str(tmp_path)]) == 0
    assert "0 files" in capsys.readouterr().out


def test_generate_writes_annotated_programs(tmp_path, capsys):
    assert main(["generate", str(tmp_path), "--safe", "2", "--unsafe", "2", "--seed", "5"]) == 0
    files = sorted(tmp_path.glob("*.imp"))
    assert len(files) == 4
    assert sorted(expected_verdict(p) for p in files) == ["safe", "safe", "unsafe", "unsafe"]
    assert main(["corpus", str(tmp_path), "--jobs", "2"]) == 0


def test_module_entry_point(bench):
    r = subprocess.run([sys.executable, "-m", "gpsmc", "verify", str(bench / "ex2.wg")], capture_output=True, text=True)
    assert r.returncode == EXIT_SAFE and "VERDICT: SAFE" in r.stdout


@pytest.mark.parametrize("flag", ["--gas off", "--summaries trivial", "--validate-art", "--engine gpslite"])
def test_flag_variants_on_ex2(bench, flag, capsys):
    args = ["verify", str(bench / "ex2.imp"), "--max-frontier", "200"] + flag.split()
    assert main(args) == EXIT_SAFE
    assert "art violations" not in capsys.readouterr().out
