from __future__ import annotations

import hashlib
import json
import subprocess
import sys

import pytest

from discrete_lorenz.cli import OUT_ENV, main

SINK = ["--fix", "M1=2.0", "--fix", "M2=-1.05", "--fix", "B=-0.8"]
S0 = ["--s0", "0.5,0.5,0.5"]


def _run(tmp_path, *argv, name="out"):
    out = tmp_path / name
    return main([*argv, "--out", str(out)]), out


def test_lyapunov_csv_header(tmp_path):
    code, out = _run(tmp_path, "lyapunov", *SINK, "--iters", "20000", "--s0", "0.5,0.5,0.5")
    assert code == 0
    rows = (out / "lyapunov.csv").read_text().splitlines()
    assert rows[0] == "L1,L2,L3,sum,tail_variation,class"
    assert rows[1].endswith(",StablePoint")


def test_escape_exit_code(tmp_path, capsys):
    code, _ = _run(tmp_path, "lyapunov", "--fix", "M1=5", "--fix", "M2=0", "--fix", "B=0.5",
                   "--iters", "1000")
    assert code == 1
    assert "iterate" in capsys.readouterr().err


def test_usage_errors(tmp_path, capsys):
    assert main(["lyapunov", "--fix", "M1", "--out", str(tmp_path)]) == 2
    assert "usage" in capsys.readouterr().err
    assert main(["lyapunov", "--fix", "Q=1", "--out", str(tmp_path)]) == 2
    assert main(["no-such-command"]) == 2


def test_config_unknown_key_reports_line(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\niters = 1000\nbogus = 3\n")
    assert main(["lyapunov", *SINK, "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert f"{cfg}:3" in capsys.readouterr().err


def test_cli_overrides_config(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("keep = 7\n[orbit]\ntransient = 5\n")
    code, out = _run(tmp_path, "orbit", *SINK, *S0, "--config", str(cfg), "--keep", "11")
    assert code == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["config"]["keep"] == 11 and man["config"]["transient"] == 5
    assert len((out / "orbit.csv").read_text().splitlines()) == 12


def test_manifest_digests_and_reproducible(tmp_path):
    argv = ["orbit", *SINK, *S0, "--keep", "500", "--transient", "100"]
    _, a = _run(tmp_path, *argv, name="a")
    _, b = _run(tmp_path, *argv, name="b")
    man = json.loads((a / "manifest.json").read_text())
    data = (a / "orbit.csv").read_bytes()
    assert man["outputs"]["orbit.csv"] == hashlib.sha256(data).hexdigest()
    assert data == (b / "orbit.csv").read_bytes()
    for key in ("command_line", "version", "seed", "started", "finished", "config"):
        assert key in man


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(OUT_ENV, str(tmp_path / "env"))
    assert main(["fixed-points", *SINK]) == 0
    rows = (tmp_path / "env" / "fixed_points.csv").read_text().splitlines()
    assert rows[0].startswith("period,x,y,z,re1,im1")
    assert len(rows) == 3


def test_scan_writes_events(tmp_path):
    code, out = _run(tmp_path, "scan", "--fix", "M2=-1.05", "--fix", "B=-0.8", "--axis", "M1",
                     "--range", "2.1,2.2", "--step", "1e-2")
    assert code == 0
    ev = [json.loads(l) for l in (out / "events.jsonl").read_text().splitlines()]
    assert [e["kind"] for e in ev][0] == "PeriodDoubling"
    assert ev[0]["param"] == pytest.approx(2.171875, abs=1e-6)


def test_chart_command(tmp_path):
    code, out = _run(tmp_path, "chart", "--fix", "B=-0.8", "--axis1", "M1:1.9:2.0:2",
                     "--axis2", "M2:-1.06:-1.04:2", "--iters", "2000", "--transient", "1000")
    assert code == 0
    assert len((out / "chart.csv").read_text().splitlines()) == 5
    assert (out / "chart.ppm").read_bytes().startswith(b"P6\n2 2\n255\n")


def test_repro_fig1a(tmp_path):
    assert main(["repro", "fig1a", "--out", str(tmp_path)]) == 0
    d = tmp_path / "fig1a"
    man = json.loads((d / "manifest.json").read_text())
    assert set(man["outputs"]) >= {"orbit.csv", "lyapunov.csv", "classify.json"}
    row = (d / "lyapunov.csv").read_text().splitlines()[1]
    assert row.endswith(",Chaotic")


def test_repro_fig7_quick(tmp_path):
    assert main(["repro", "fig7", "--quick", "--out", str(tmp_path)]) == 0
    names = {p.name for p in (tmp_path / "fig7").iterdir()}
    assert any(n.endswith(".csv") for n in names) and any(n.endswith(".json") for n in names)


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "discrete_lorenz", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "repro" in r.stdout
