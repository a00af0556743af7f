import csv
import subprocess
import sys

import numpy as np
import pytest

from rodlimit.cli import main
from rodlimit.studies import THREADS_ENV
from rodlimit.types import PLANAR_COMPONENTS


def _write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def _read(path):
    lines = open(path).read().splitlines()
    assert lines[0] == "# schema=1"
    body = [ln for ln in lines[1:] if not ln.startswith("#")]
    footer = dict(ln[2:].split("=", 1) for ln in lines[1:] if ln.startswith("# "))
    # footers only trail the table
    assert all(ln.startswith("#") for ln in lines[1 + len(body):])
    rows = list(csv.reader(body))
    return rows[0], np.array(rows[1:], dtype=float), footer


def test_simulate_writes_all_levels(tmp_path):
    cfg = _write(tmp_path, "ds = 0.1\ndt = 0.01\nt_end = 0.05\n")
    out = str(tmp_path / "sim.csv")
    assert main(["simulate", "--config", cfg, "--out", out]) == 0
    header, data, footer = _read(out)
    assert header == ["t", "s", *PLANAR_COMPONENTS]
    assert data.shape == (6 * 11, 11)
    np.testing.assert_allclose(np.unique(data[:, 0]), np.linspace(0, 0.05, 6), atol=1e-15)
    assert footer["variant"] == "S" and footer["kind"] == "limit"


def test_simulate_is_deterministic(tmp_path):
    cfg = _write(tmp_path, "ds = 0.1\nt_end = 0.1\nepsilon = 0.02\nkind = eps\n")
    a, b = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
    assert main(["simulate", "--config", cfg, "--out", a, "--variant", "M"]) == 0
    assert main(["simulate", "--config", cfg, "--out", b, "--variant", "M"]) == 0
    assert open(a, "rb").read() == open(b, "rb").read()


def test_simulate_correction_columns(tmp_path):
    cfg = _write(tmp_path, "ds = 0.1\nt_end = 0.02\n")
    out = str(tmp_path / "c.csv")
    assert main(["simulate", "--config", cfg, "--out", out, "--kind", "correction"]) == 0
    header, data, _ = _read(out)
    assert header[-9:] == [f"corr_{c}" for c in PLANAR_COMPONENTS]
    assert data.shape == (3 * 11, 20)


def test_eps_run_differs_from_limit_at_the_tip(tmp_path):
    cfg = _write(tmp_path, "t_end = 2.5\nepsilon = 0.02\n")
    tips = {}
    for kind in ("eps", "limit"):
        out = str(tmp_path / f"{kind}.csv")
        assert main(["simulate", "--config", cfg, "--out", out, "--kind", kind]) == 0
        _, data, _ = _read(out)
        tip = data[data[:, 1] == 1.0]
        tips[kind] = tip[:, 2:4]
    assert np.max(np.linalg.norm(tips["eps"] - tips["limit"], axis=1)) > 1e-2


def test_single_eps_sweep_has_no_slope(tmp_path):
    cfg = _write(tmp_path, "ds = 0.05\nstudy_t_end = 0.1\neps_list = 0.01\n")
    out = str(tmp_path / "sweep.csv")
    assert main(["sweep-eps", "--config", cfg, "--out", out]) == 0
    header, data, footer = _read(out)
    assert header == ["eps", "c1_star", "c1", "c2_star", "c2", "phi1_norm"]
    assert data.shape == (1, 6)
    assert not any(k.startswith("slope") for k in footer)


def test_sweep_reports_slopes(tmp_path):
    cfg = _write(tmp_path, "ds = 0.05\nstudy_t_end = 0.1\neps_list = 1e-3 3e-3 1e-2 3e-2\n"
                           "c1_window = 1e-3 3e-2\n")
    out = str(tmp_path / "sweep.csv")
    assert main(["sweep-eps", "--config", cfg, "--out", out]) == 0
    _, data, footer = _read(out)
    assert data.shape == (4, 6)
    assert float(footer["slope_c1_star[0.001,0.03]"]) == pytest.approx(2.0, abs=0.1)


@pytest.mark.parametrize("command,axis", [("converge-space", "space"), ("converge-time", "time")])
def test_converge_csv(tmp_path, command, axis):
    cfg = _write(tmp_path, "study_t_end = 0.1\nsteps = 0.05 0.025\nref_ds = 0.0125\nref_dt = 0.0125\n"
                           "dt = 0.025\ntime_ds = 0.05\nt_end = 0.1\n")
    out = str(tmp_path / "conv.csv")
    assert main([command, "--config", cfg, "--out", out]) == 0
    header, data, footer = _read(out)
    assert header == ["step", "error"] and data.shape == (2, 2)
    assert footer["axis"] == axis and footer["order"] == "nan"
    assert np.all(data[:, 1] > 0)


def test_converge_rejects_correction_kind(tmp_path):
    cfg = _write(tmp_path, "kind = correction\n")
    assert main(["converge-time", "--config", cfg, "--out", str(tmp_path / "x.csv")]) == 2


def test_energy_at_rest_is_zero(tmp_path):
    cfg = _write(tmp_path, "gravity = false\nds = 0.1\nt_end = 0.05\n")
    out = str(tmp_path / "energy.csv")
    assert main(["energy", "--config", cfg, "--out", out]) == 0
    header, data, footer = _read(out)
    assert header == ["t", "w0", "w1", "total"]
    assert data.shape == (6, 4)
    assert not data[:, 1:].any()
    assert float(footer["drift"]) == 0.0


def test_bad_config_exits_2_and_names_line(tmp_path, capsys):
    cfg = _write(tmp_path, "mu = 3\nfoo = 1\n")
    out = tmp_path / "never.csv"
    assert main(["simulate", "--config", cfg, "--out", str(out)]) == 2
    assert "line 2: unknown key 'foo'" in capsys.readouterr().err
    assert not out.exists()


def test_missing_config_exits_2(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "none.cfg"), "--out", str(tmp_path / "o")]) == 2


def test_nonconvergence_exits_1_and_leaves_no_file(tmp_path):
    cfg = _write(tmp_path, "max_iter = 1\ntol = 1e-14\nt_end = 0.1\n")
    out = tmp_path / "sim.csv"
    assert main(["simulate", "--config", cfg, "--out", str(out)]) == 1
    assert not out.exists()
    assert not list(tmp_path.glob(".rodlimit-*"))


def test_invalid_thread_cap_exits_2(tmp_path, monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "zero")
    cfg = _write(tmp_path, "ds = 0.1\nstudy_t_end = 0.02\neps_list = 0.1 0.2\n")
    assert main(["sweep-eps", "--config", cfg, "--out", str(tmp_path / "s.csv")]) == 2


def test_module_entry_point(tmp_path):
    cfg = _write(tmp_path, "ds = 0.5\nt_end = 0.01\n")
    out = tmp_path / "m.csv"
    done = subprocess.run([sys.executable, "-m", "rodlimit", "simulate", "--config", cfg, "--out", str(out),
                           "--lambda", "0.5"], capture_output=True, text=True)
    assert done.returncode == 0, done.stderr
    assert out.read_text().startswith("# schema=1\n")
