import io
import json
import math
import subprocess
import sys

import pytest

from forchheimer import export
from forchheimer.cli import run_command
from forchheimer.constitutive import ForchheimerLaw


def run(*argv):
    buf = io.StringIO()
    code = run_command(list(argv), buf)
    return code, buf.getvalue()


def write_cfg(path, **over):
    cfg = {
        "id": "cfg",
        "grid": {"dim": 2, "cells": 8},
        "time": {"T": 2.0, "dt": 0.05},
        "data": {"preset": "periodic", "amplitude": 1.0},
        "picard": {"tol": 1e-6},
    }
    cfg.update(over)
    path.write_text(json.dumps(cfg))
    return str(path)


def test_fmt_and_json():
    assert export.fmt(0.1) == "0.10000000000000001"
    assert export.fmt(math.inf) == "inf" and export.fmt(True) == "true" and export.fmt(None) == ""
    text = export.json_text({"a": math.inf, "b": float("nan"), "c": (1, 2.5)})
    assert json.loads(text) == {"a": "inf", "b": "nan", "c": [1, 2.5]}
    assert export.csv_text(("x",), [(1,)]) == "x\r\n1\r\n"


def test_kfun_row():
    code, out = run("kfun", "--xi", "2")
    assert code == 0
    assert out.splitlines() == ["xi,s,K,dK,H", "2,1,0.5,-0.083333333333333329,2.3333333333333335"]
    rows = export.kfun_rows(ForchheimerLaw.parse("1+s+s^2"), [3.0])
    assert rows[0][:3] == pytest.approx((3.0, 1.0, 1 / 3))


def test_kfun_grid_and_errors(tmp_path):
    out = tmp_path / "k.csv"
    assert run("kfun", "--points", "5", "--out", str(out))[0] == 0
    assert len(out.read_text().splitlines()) == 6
    assert run("kfun", "--xi", "-1")[0] == 2
    assert run("kfun", "--g", "1-s")[0] == 2


def test_exponents_json(tmp_path):
    code, out = run("exponents", "--format", "json", "--alpha", "2", "--s0", "1.5", "--json", str(tmp_path / "e.json"))
    assert code == 0
    d = json.loads(out)
    assert d["table"]["kappa0"] == 3.0 and d["table"]["r0"] == pytest.approx(1.2)
    assert export.read_json(tmp_path / "e.json") == d
    assert run("exponents", "--alpha", "0.1")[0] == 2


def test_verify_zero_data(tmp_path):
    cfg = write_cfg(tmp_path / "zero.json", data={"preset": "zero"})
    code, out = run("verify", "--scenario", cfg, "--out", str(tmp_path / "v"))
    assert code == 0 and "overall: ok" in out
    rep = export.read_json(tmp_path / "v" / "report.json")
    assert rep["ok"] and all(r["lhs"] == 0.0 for r in rep["records"] if r["asserted"])
    lines = (tmp_path / "v" / "records.csv").read_text().splitlines()
    assert lines[0].split(",") == list(export.RECORD_COLUMNS) and len(lines) == len(rep["records"]) + 1


def test_verify_selection(tmp_path):
    cfg = write_cfg(tmp_path / "c.json")
    code, out = run("verify", "--scenario", cfg, "--estimates", "pressure-linf-local")
    assert code == 0 and "pressure-linf-local" in out and "grad-ls" not in out
    assert run("verify", "--scenario", cfg, "--estimates", "bogus")[0] == 2


def test_solve_outputs_and_determinism(tmp_path):
    cfg = write_cfg(tmp_path / "c.json")
    assert run("solve", "--scenario", cfg, "--out", str(tmp_path / "a"), "--stride", "10")[0] == 0
    assert run("solve", "--scenario", cfg, "--out", str(tmp_path / "b"), "--stride", "10")[0] == 0
    for name in ("trajectory.csv", "metadata.json", "trace.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    meta = export.read_json(tmp_path / "a" / "metadata.json")
    assert meta["snapshots"] == 5 and meta["steps"] == 40
    assert meta["scenario"]["time"]["stride"] == 10
    traj = (tmp_path / "a" / "trajectory.csv").read_text().splitlines()
    assert traj[0] == "t,x1,x2,p" and len(traj) == 1 + 5 * 81
    assert (tmp_path / "a" / "trace.csv").read_text().splitlines()[0] == "t,A,EnvA,G1,G2,G3,G4"


def test_cells_override_recomputes_dt(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"grid": {"cells": 16}, "time": {"T": 0.5}, "data": {"preset": "zero"}}))
    assert run("solve", "--scenario", str(cfg), "--out", str(tmp_path / "a"))[0] == 0
    assert run("solve", "--scenario", str(cfg), "--out", str(tmp_path / "b"), "--cells", "8")[0] == 0
    fine = export.read_json(tmp_path / "a" / "metadata.json")
    coarse = export.read_json(tmp_path / "b" / "metadata.json")
    assert coarse["scenario"]["grid"]["cells"] == 8
    assert coarse["dt"] > fine["dt"]


def test_sweep_and_report(tmp_path):
    out = tmp_path / "s"
    code, text = run(
        "sweep", "--out", str(out), "--presets", "periodic", "--amplitudes", "0.5", "1",
        "--grids", "8", "12", "--T", "2", "--dt", "0.05", "--estimates", "pressure", "--no-lemmas",
    )
    assert code == 0
    rep = export.read_json(out / "report.json")
    assert len(rep["meta"]["family"]) == 4
    assert rep["aggregates"]["pressure-linf-local"]["finite"]
    code, again = run("report", "--input", str(out / "report.json"))
    assert code == 0 and again == text
    assert run("report", "--input", str(tmp_path / "missing.json"))[0] == 2


def test_sweep_family_file(tmp_path):
    fam = [json.loads(open(write_cfg(tmp_path / "c.json")).read())]
    (tmp_path / "fam.json").write_text(json.dumps(fam))
    code, _ = run("sweep", "--family", str(tmp_path / "fam.json"), "--out", str(tmp_path / "o"), "--estimates", "pt", "--no-lemmas")
    assert code == 0
    (tmp_path / "bad.json").write_text("{}")
    assert run("sweep", "--family", str(tmp_path / "bad.json"), "--out", str(tmp_path / "o"))[0] == 2


def test_usage_errors(tmp_path):
    assert run("nonsense")[0] == 2
    assert run("solve")[0] == 2
    assert run("solve", "--scenario", str(tmp_path / "missing.json"))[0] == 2
    (tmp_path / "bad.json").write_text("{not json")
    assert run("verify", "--scenario", str(tmp_path / "bad.json"))[0] == 2
    cfg = write_cfg(tmp_path / "c.json", mystery=1)
    assert run("verify", "--scenario", cfg)[0] == 2


def test_numeric_failure_exit(tmp_path):
    cfg = write_cfg(
        tmp_path / "c.json", data={"preset": "periodic", "amplitude": 4.0}, picard={"tol": 1e-14, "max_iter": 1}
    )
    assert run("solve", "--scenario", cfg, "--out", str(tmp_path / "o"))[0] == 1


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "forchheimer", "kfun", "--xi", "0"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.splitlines()[1].startswith("0,0,1,")
