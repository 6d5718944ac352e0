from __future__ import annotations

import json
import math
import subprocess
import sys

import numpy as np
import pytest

from jmech.cli import main
from jmech.dynamics import Trajectory


def _run(*argv):
    return main([str(a) for a in argv])


def test_simulate_matches_closed_form(tmp_path, ho_file):
    out = tmp_path / "traj.csv"
    assert _run("simulate", "--system", ho_file, "--q0", 1, "--p0", 0, "--t-end", 10, "--dt", 1e-3, "--out", out) == 0
    tr = Trajectory.read_csv(out)
    assert np.abs(tr.q[:, 0] - np.cos(tr.times)).max() < 1e-8
    assert np.abs(tr.p[:, 0] + np.sin(tr.times)).max() < 1e-8


def test_simulate_empty_span_writes_initial_point(tmp_path, ho_file):
    out = tmp_path / "one.csv"
    assert _run("simulate", "--system", ho_file, "--q0", 0.5, "--p0", 0.1, "--t-end", 0, "--out", out) == 0
    assert out.read_text().splitlines() == ["t,q1,p1", "0,0.5,0.10000000000000001"]


def test_simulate_with_jacobi_block(tmp_path, ho_file):
    out = tmp_path / "v.csv"
    code = _run("simulate", "--system", ho_file, "--q0", 0, "--p0", 0, "--qd0", 1, "--pd0", 0,
                "--t-end", math.pi / 2, "--out", out)
    assert code == 0
    tr = Trajectory.read_csv(out)
    np.testing.assert_allclose(tr.jacobi[-1], [0, -1], atol=1e-8)


def test_malformed_system_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.ham"
    bad.write_text("dim = 1\nH = p1^2 + * q1\n")
    assert _run("simulate", "--system", bad, "--q0", 1, "--p0", 0, "--t-end", 1, "--out", tmp_path / "x.csv") == 2
    assert "line 2, column 12" in capsys.readouterr().err
    assert not (tmp_path / "x.csv").exists()


@pytest.mark.parametrize(
    "extra",
    [
        ["--dt", "0"],
        ["--dt", "-1"],
        ["--t-end", "-1"],
        ["--q0", "1,2"],
        ["--out", "/nonexistent/dir/x.csv"],
        ["--qd0", "1"],
    ],
)
def test_invalid_settings_exit_2(tmp_path, ho_file, extra):
    argv = ["simulate", "--system", ho_file, "--q0", 1, "--p0", 0, "--t-end", 1, "--out", tmp_path / "x.csv"]
    assert _run(*argv, *extra) == 2


def test_missing_system_file_exits_2(tmp_path):
    assert _run("simulate", "--system", tmp_path / "nope.ham", "--q0", 1, "--p0", 0, "--t-end", 1,
                "--out", tmp_path / "x.csv") == 2


def test_blow_up_exits_3(tmp_path):
    sysf = tmp_path / "blow.ham"
    sysf.write_text("dim = 1\nH = q1^2*p1^2\n")
    assert _run("simulate", "--system", sysf, "--q0", 3, "--p0", 3, "--t-end", 10, "--dt", 0.01,
                "--out", tmp_path / "b.csv") == 3


def test_sweep_writes_one_file_per_point(tmp_path, ho_file, monkeypatch):
    monkeypatch.setenv("JMECH_THREADS", "2")
    out = tmp_path / "s.csv"
    assert _run("simulate", "--system", ho_file, "--q0", 1, "--p0", 0, "--t-end", 1, "--dt", 0.01,
                "--sweep", "0.5,0;0,1", "--out", out) == 0
    files = sorted(p.name for p in tmp_path.glob("s_*.csv"))
    assert files == ["s_0.csv", "s_1.csv", "s_2.csv"]
    tr = Trajectory.read_csv(tmp_path / "s_2.csv")
    assert np.abs(tr.q[:, 0] - np.sin(tr.times)).max() < 1e-8


def test_config_file_mirrors_flags(tmp_path, ho_file):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"system = {ho_file}\nq0 = 1\np0 = 0  # at rest\nt_end = 1\ndt = 0.01\n")
    out = tmp_path / "c.csv"
    assert _run("simulate", "--config", cfg, "--out", out) == 0
    assert len(out.read_text().splitlines()) == 102
    # explicit flags override the file
    assert _run("simulate", "--config", cfg, "--dt", 0.1, "--out", out) == 0
    assert len(out.read_text().splitlines()) == 12


def test_config_unknown_key_exits_2(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("bogus = 1\n")
    assert _run("simulate", "--config", cfg) == 2


def test_jacobi_report(tmp_path, ho_file):
    rep = tmp_path / "j.json"
    code = _run("jacobi", "--system", ho_file, "--q0", 0.3, "--p0", -0.7, "--c", 1, "--s", 0.5, "--t-end", 2,
                "--out", tmp_path / "j.csv", "--report", rep)
    assert code == 0
    data = json.loads(rep.read_text())
    assert data["max_fd_vs_variational"] < 1e-4
    assert data["max_texp_vs_variational"] < 1e-6
    assert len(data["samples"]) == 11


def test_jacobi_zero_field(tmp_path, ho_file):
    rep = tmp_path / "j.json"
    assert _run("jacobi", "--system", ho_file, "--q0", 0.3, "--p0", -0.7, "--c", 0, "--s", 0, "--t-end", 1,
                "--out", tmp_path / "j.csv", "--report", rep) == 0
    data = json.loads(rep.read_text())
    assert data["max_fd_vs_variational"] == 0 and data["max_texp_vs_variational"] == 0
    assert not np.any(Trajectory.read_csv(tmp_path / "j.csv").jacobi)


def test_jacobi_cubic_skips_ordered_exponential(tmp_path):
    sysf = tmp_path / "cubic.ham"
    sysf.write_text("dim = 1\nH = 0.5*p1^2 + q1^3/3\n")
    rep = tmp_path / "j.json"
    assert _run("jacobi", "--system", sysf, "--q0", 0.3, "--p0", 0, "--c", 1, "--s", 0, "--t-end", 1,
                "--out", tmp_path / "j.csv", "--report", rep) == 0
    data = json.loads(rep.read_text())
    assert "max_texp_vs_variational" not in data
    assert "not quadratic" in data["note"]


def test_jacobi_factor_count(tmp_path, ho_file):
    rep = tmp_path / "j.json"
    assert _run("jacobi", "--system", ho_file, "--q0", 0, "--p0", 0, "--c", 1, "--s", 0, "--t-end", 1.5,
                "--factors", 200, "--samples", 3, "--out", tmp_path / "j.csv", "--report", rep) == 0
    assert json.loads(rep.read_text())["max_texp_vs_variational"] < 1e-6


def test_quantize_report(tmp_path, ho_file):
    out = tmp_path / "q.json"
    assert _run("quantize", "--system", ho_file, "-N", 32, "--t", 1.0, "--out", out) == 0
    data = json.loads(out.read_text())
    assert data["commutators"]["max_deviation"] < 1e-8
    assert data["instant"]["max_deviation"] < 1e-8
    assert data["evolution"]["max_residual"] < 1e-6
    assert data["hermiticity"]["phidot1"] < 1e-12
    assert data["hermiticity"]["pi1"] > 0
    assert data["degraded"] is False


def test_quantize_small_basis_is_degraded_but_complete(tmp_path, ho_file):
    out = tmp_path / "q4.json"
    assert _run("quantize", "--system", ho_file, "-N", 4, "--out", out) == 0
    data = json.loads(out.read_text())
    assert data["degraded"] is True
    assert {"commutators", "eigenstates", "instant", "evolution", "hermiticity"} <= set(data)


def test_quantize_capture_failure_still_writes_report(tmp_path, ho_file):
    out = tmp_path / "q.json"
    assert _run("quantize", "--system", ho_file, "-N", 4, "--a", 3, "--b", 3, "--out", out) == 4
    assert "error" in json.loads(out.read_text())["eigenstates"]


def test_quantize_operator_dump(tmp_path):
    assert _run("quantize", "-N", 4, "--operators-out", tmp_path / "ops", "--out", tmp_path / "q.json") == 0
    assert sorted(p.name for p in (tmp_path / "ops").iterdir()) == [
        "I.json", "phi1.json", "phidot1.json", "pi1.json", "pidot1.json"
    ]


@pytest.mark.parametrize("args", [["-N", "3"], ["-N", "20", "--system", "SYS2"]])
def test_quantize_rejects_unsupported_bases(tmp_path, args):
    sys2 = tmp_path / "two.ham"
    sys2.write_text("dim = 2\nH = 0.5*(p1^2 + p2^2)\n")
    args = [str(sys2) if a == "SYS2" else a for a in args]
    assert _run("quantize", *args) == 2


def test_quantize_demo(capsys):
    assert _run("quantize", "--demo-oscillator") == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines and not any(line.startswith("FAIL") for line in lines)
    assert sum(line.startswith("PASS") for line in lines) >= 10


def test_check_brackets_default(tmp_path):
    out = tmp_path / "b.json"
    assert _run("check-brackets", "--trials", 10, "--out", out) == 0
    data = json.loads(out.read_text())
    assert [d["kind"] for d in data] == ["base", "vertical", "alt", "second"]
    assert all(d["failures"] == [] and d["seed"] == 0 for d in data)


def test_check_brackets_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a, b):
        assert _run("check-brackets", "--trials", 5, "--seed", 9, "--out", out) == 0
    assert a.read_bytes() == b.read_bytes()


@pytest.mark.parametrize("args", [["--trials", "0"], ["--kinds", "nope"], ["--trials", "x"]])
def test_check_brackets_validation(args):
    assert _run("check-brackets", *args) == 2


def test_check_brackets_failure_exits_1(monkeypatch):
    from jmech import poisson

    real = poisson.bracket
    monkeypatch.setattr(poisson, "bracket", lambda k, f, g, m: real(k, f, g, m) + real(k, f, g, m) ** 2)
    assert _run("check-brackets", "--kinds", "base", "--trials", 5) == 1


def test_console_entry_point_runs():
    proc = subprocess.run([sys.executable, "-m", "jmech.cli", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "check-brackets" in proc.stdout
