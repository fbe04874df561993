import csv
import os
import subprocess
import sys

import numpy as np
import pytest

from qlga import _kernels
from qlga.cli import main
from qlga.config import RunConfig, format_complex, parse_range
from qlga.errors import ParameterError


@pytest.fixture(autouse=True)
def _isolate(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    before = (_kernels.backend_name(), _kernels.num_threads())
    yield
    _kernels.set_backend(before[0])
    _kernels.set_num_threads(before[1])


def run_cli(*argv):
    return main([str(a) for a in argv])


def output_lines(text):
    return dict(line.split(": ", 1) for line in text.splitlines() if ": " in line)


# configuration

def test_round_trip():
    cfg = RunConfig(command="many-body", d=1, extents=(8,), mu=np.exp(0.3j), steps=7,
                    pair="contact:2.5", block_phase=np.exp(-1j), lams=(1, 3), seed=11)
    again = RunConfig.from_text(cfg.to_text())
    assert again == cfg
    assert again.mu == cfg.mu


def test_save_and_load(tmp_path):
    cfg = RunConfig(d=3, extents=(4, 5, 6), potential="expr:x*y", plot=True)
    cfg.save(tmp_path / "c.ini")
    assert RunConfig.load(tmp_path / "c.ini") == cfg


def test_missing_version_and_unknown_keys():
    with pytest.raises(ParameterError, match="config_version"):
        RunConfig.from_text("[qlga]\nd = 2\n")
    with pytest.raises(ParameterError):
        RunConfig.from_text("[qlga]\nconfig_version = 1\ncolour = red\n")
    with pytest.raises(ParameterError):
        RunConfig.from_text("[qlga]\nconfig_version = 99\n").validate()
    with pytest.raises(ParameterError):
        RunConfig.from_text("[qlga]\nconfig_version = 1\ntheta = 1\nmu = -1j\n")
    with pytest.raises(ParameterError):
        RunConfig.from_text("no section")


def test_theta_key():
    cfg = RunConfig.from_text("[qlga]\nconfig_version = 1\ntheta = -1.5707963267948966\n")
    assert abs(cfg.mu + 1j) < 1e-15


def test_validation_before_allocation():
    with pytest.raises(ParameterError):
        RunConfig(d=2, extents=(8,)).validate()
    with pytest.raises(ParameterError):
        RunConfig(steps=-1, extents=(8, 8)).validate()
    with pytest.raises(ParameterError):
        RunConfig(command="many-body", d=1, extents=(2,), particles=9).validate()


def test_helpers():
    assert parse_range("1..4") == (1, 2, 3, 4)
    assert parse_range("128,256") == (128, 256)
    assert complex(format_complex(0.6 + 0.8j).replace("i", "j")) == 0.6 + 0.8j


def test_flags_override_file(tmp_path, capsys):
    RunConfig(command="verify", d=3, mu=-1j).save(tmp_path / "c.ini")
    assert run_cli("verify", "--config", tmp_path / "c.ini", "--d", 2) == 0
    out = output_lines(capsys.readouterr().out)
    assert out["d"] == "2"
    assert float(out["mass"]) == pytest.approx(2.0)


# verify

def test_verify_d2_minus_i(capsys):
    assert run_cli("verify", "--d", 2, "--theta", -1.5708) == 0
    out = capsys.readouterr().out
    assert float(output_lines(out)["mass"]) == pytest.approx(2.0, rel=1e-4)
    assert output_lines(out)["result"] == "PASS"
    assert "FAIL" not in out


def test_verify_mu_one_fails(capsys):
    assert run_cli("verify", "--d", 1, "--theta", 0) == 1
    assert "mass undefined at mu=1" in capsys.readouterr().err


def test_verify_complex_mu_three_dims(capsys):
    assert run_cli("verify", "--d", 3, "--mu", "0.6+0.8i") == 0
    out = capsys.readouterr().out
    assert "check appendix_3d" in out and "PASS" in out


def test_bad_flag_exits_one(capsys):
    with pytest.raises(SystemExit) as exc:
        run_cli("verify", "--bogus")
    assert exc.value.code == 1
    assert run_cli("verify", "--mu", "1.5") == 1


# run

def test_run_plane_wave(tmp_path, capsys):
    out_dir = tmp_path / "o"
    assert run_cli("run", "--d", 2, "--N", 64, "--init", "plane:3,1", "--steps", 1000,
                   "--stride", 500, "--output", out_dir) == 0
    out = output_lines(capsys.readouterr().out)
    assert float(out["norm_drift"]) < 1e-10
    names = sorted(os.listdir(out_dir))
    assert names == [f"{k}_{t:08d}.csv" for k in ("field", "total") for t in (0, 500, 1000)]
    with open(out_dir / "field_00001000.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["x0", "x1", "k", "re", "im"]
    assert len(rows) == 1 + 64 * 64 * 4


def test_run_zero_steps(tmp_path):
    assert run_cli("run", "--N", 8, "--steps", 0, "--output", tmp_path / "z") == 0
    assert sorted(os.listdir(tmp_path / "z")) == ["field_00000000.csv", "total_00000000.csv"]


def test_run_npz_and_saved_config(tmp_path):
    d = tmp_path / "n"
    assert run_cli("run", "--d", 1, "--N", 16, "--steps", 4, "--format", "npz", "--output", d,
                   "--init", "random", "--seed", 3, "--save-config") == 0
    assert (d / "field_00000004.npz").exists()
    cfg = RunConfig.load(d / "config.ini")
    assert cfg.seed == 3 and cfg.extents == (16,) and cfg.steps == 4


def test_run_bit_identical_with_seed(tmp_path):
    for name in ("a", "b"):
        assert run_cli("run", "--d", 2, "--N", 12, "--init", "random", "--seed", 5,
                       "--steps", 9, "--potential", "expr:x+y", "--output", tmp_path / name) == 0
    for f in os.listdir(tmp_path / "a"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_run_from_file(tmp_path):
    assert run_cli("run", "--d", 1, "--N", 8, "--init", "random", "--steps", 0,
                   "--output", tmp_path / "a") == 0
    src = tmp_path / "a" / "field_00000000.csv"
    assert run_cli("run", "--d", 1, "--N", 8, "--init", f"file:{src}", "--steps", 0,
                   "--output", tmp_path / "b") == 0
    assert src.read_bytes() == (tmp_path / "b" / "field_00000000.csv").read_bytes()


def test_threads_flag(tmp_path, capsys):
    assert run_cli("run", "--N", 8, "--steps", 2, "--threads", 3, "--output", tmp_path) == 0
    assert output_lines(capsys.readouterr().out)["threads"] == "3"


def test_threads_env_var(tmp_path):
    env = dict(os.environ, QLGA_THREADS="2")
    cmd = [sys.executable, "-m", "qlga", "run", "--N", "8", "--steps", "2", "--output",
           str(tmp_path / "e")]
    res = subprocess.run(cmd, env=env, capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert output_lines(res.stdout)["threads"] == "2"
    res = subprocess.run(cmd + ["--threads", "4"], env=env, capture_output=True, text=True)
    assert output_lines(res.stdout)["threads"] == "4"


def test_memory_guard_exits_two(capsys):
    assert run_cli("run", "--d", 3, "--N", 2048, "--steps", 1) == 2
    assert "runtime error" in capsys.readouterr().err


def test_invalid_run_inputs():
    assert run_cli("run", "--d", 2, "--N", "8,8,8") == 1
    assert run_cli("run", "--init", "wobble") == 1
    assert run_cli("run", "--N", 8, "--init", "plane:4", "--steps", 1) == 1
    assert run_cli("run", "--N", 8, "--potential", "expr:import os", "--steps", 1) == 1


# many-body

def test_many_body_density(tmp_path, capsys):
    out_dir = tmp_path / "mb"
    assert run_cli("many-body", "--N", 8, "--particles", 2, "--steps", 200, "--stride", 100,
                   "--pair", "contact:1.0", "--output", out_dir) == 0
    out = output_lines(capsys.readouterr().out)
    assert float(out["norm_drift"]) < 1e-10
    assert float(out["particles"]) == pytest.approx(2.0)
    assert sorted(os.listdir(out_dir)) == [f"density_{t:08d}.csv" for t in (0, 100, 200)]
    with open(out_dir / "density_00000200.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["x0", "k", "occupation"]
    assert sum(float(r[2]) for r in rows[1:]) == pytest.approx(2.0)


def test_many_body_inits(tmp_path):
    assert run_cli("many-body", "--N", 6, "--init", "slots:0.0,3.1", "--steps", 3,
                   "--output", tmp_path / "s") == 0
    assert run_cli("many-body", "--N", 6, "--init", "ket:|(0,1),(0,0),(1,0),(0,0),(0,0),(0,0)>",
                   "--steps", 3, "--output", tmp_path / "k") == 0
    assert run_cli("many-body", "--N", 16, "--init", "packets:2:4;12", "--steps", 3,
                   "--output", tmp_path / "p") == 0
    assert run_cli("many-body", "--N", 4, "--particles", 2, "--full-fock", "--steps", 3,
                   "--output", tmp_path / "f") == 0
    assert run_cli("many-body", "--N", 6, "--init", "packets:2:3", "--steps", 3) == 1
    assert run_cli("many-body", "--N", 6, "--block-phase", "2", "--steps", 3) == 1


def test_many_body_memory_guard(capsys):
    assert run_cli("many-body", "--d", 2, "--N", 16, "--particles", 12, "--steps", 1) == 2
    assert "runtime error" in capsys.readouterr().err


# dispersion

def test_dispersion_single_row(tmp_path, capsys):
    path = tmp_path / "one.csv"
    assert run_cli("dispersion", "--N", 32, "--l", 1, "--epochs", 16, "--output", path,
                   "--plot") == 0
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 1
    assert (rows[0]["N"], rows[0]["l_x"], rows[0]["l_y"]) == ("32", "3", "1")
    assert (tmp_path / "one_plot.py").exists()
    assert "worst_small_k_rel_error" in capsys.readouterr().out


def test_dispersion_constant_potential(tmp_path):
    args = ("dispersion", "--N", 64, "--l", 1, "--epochs", 16)
    assert run_cli(*args, "--output", tmp_path / "a.csv") == 0
    assert run_cli(*args, "--potential", "const:5.0", "--output", tmp_path / "b.csv") == 0
    a = list(csv.DictReader(open(tmp_path / "a.csv")))[0]
    b = list(csv.DictReader(open(tmp_path / "b.csv")))[0]
    assert float(b["omega_meas"]) - float(a["omega_meas"]) == pytest.approx(5.0, rel=1e-3)


def test_dispersion_deterministic(tmp_path):
    for name in ("a.csv", "b.csv"):
        assert run_cli("dispersion", "--N", "32,64", "--l", "1..2", "--epochs", 8,
                       "--output", tmp_path / name) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_dispersion_rejects_small_lattice():
    assert run_cli("dispersion", "--N", 8, "--l", 3) == 1
