import json
import os

import numpy as np
import pytest

from evolab import cli
from evolab.engine import McEstimate
from evolab.reporting import write_estimates_csv, write_plot_data


OU_CONFIG = """
[drift]
preset = "ou"
"""

POWER_CONFIG = """
[drift]
preset = "power"
kappa = 4.0
"""

MISCLAIMED_CONFIG = """
[drift]
preset = "ou"

[constants]
r0 = -6.0
"""


def _write(tmp_path, text, name="spec.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def _run_args(cfg, out, checks="gradient", seed=7, samples=3000):
    return [
        "run", cfg,
        "--checks", checks,
        "--samples", str(samples),
        "--seed", str(seed),
        "--step", "5e-3",
        "--out", str(out),
    ]


def test_presets_command(capsys):
    assert cli.main(["presets"]) == 0
    out = capsys.readouterr().out
    assert "ou" in out and "power" in out and "logpower" in out and "loglin" in out
    assert "Ultracontractive" in out
    assert "not supercontractive" in out


def test_run_writes_artifacts_and_exits_zero(tmp_path, capsys):
    cfg = _write(tmp_path, OU_CONFIG)
    status = cli.main(_run_args(cfg, tmp_path / "out"))
    assert status == 0
    run_dirs = os.listdir(tmp_path / "out")
    assert len(run_dirs) == 1
    run_dir = tmp_path / "out" / run_dirs[0]
    assert (run_dir / "reports.csv").exists()
    assert (run_dir / "summary.json").exists()
    assert (run_dir / "manifest.json").exists()
    summary = json.loads((run_dir / "summary.json").read_text())
    assert summary["failures"] == 0
    header = (run_dir / "reports.csv").read_text().splitlines()[0]
    assert header == "name,params,lhs,lhs_se,rhs,rhs_se,margin,margin_se,verdict,seed"


def test_rerun_refuses_overwrite(tmp_path, capsys):
    cfg = _write(tmp_path, OU_CONFIG)
    assert cli.main(_run_args(cfg, tmp_path / "out")) == 0
    assert cli.main(_run_args(cfg, tmp_path / "out")) == cli.EXIT_CONFIG


def test_rerun_byte_identical_reports(tmp_path):
    cfg = _write(tmp_path, OU_CONFIG)
    assert cli.main(_run_args(cfg, tmp_path / "a", checks="gradient,invariance")) == 0
    assert cli.main(_run_args(cfg, tmp_path / "b", checks="gradient,invariance")) == 0
    dir_a = next((tmp_path / "a").iterdir())
    dir_b = next((tmp_path / "b").iterdir())
    assert dir_a.name == dir_b.name  # same manifest hash
    assert (dir_a / "reports.csv").read_bytes() == (dir_b / "reports.csv").read_bytes()
    assert (dir_a / "summary.json").read_bytes() == (dir_b / "summary.json").read_bytes()


def test_seed_changes_reports(tmp_path):
    cfg = _write(tmp_path, OU_CONFIG)
    assert cli.main(_run_args(cfg, tmp_path / "a", seed=1)) == 0
    assert cli.main(_run_args(cfg, tmp_path / "b", seed=2)) == 0
    a = next((tmp_path / "a").iterdir()) / "reports.csv"
    b = next((tmp_path / "b").iterdir()) / "reports.csv"
    assert a.read_bytes() != b.read_bytes()


def test_heat_kernel_on_ou_is_regime_mismatch(tmp_path, capsys):
    cfg = _write(tmp_path, OU_CONFIG)
    status = cli.main(_run_args(cfg, tmp_path / "out", checks="heat_kernel"))
    assert status == cli.EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_unknown_check_is_config_error(tmp_path, capsys):
    cfg = _write(tmp_path, OU_CONFIG)
    assert cli.main(_run_args(cfg, tmp_path / "out", checks="nonsense")) == cli.EXIT_CONFIG


def test_bad_config_exits_64(tmp_path, capsys):
    cfg = _write(tmp_path, "[drift]\npreset = \"mystery\"\n")
    assert cli.main(_run_args(cfg, tmp_path / "out")) == cli.EXIT_CONFIG
    assert cli.main(_run_args(str(tmp_path / "missing.toml"), tmp_path / "out")) == cli.EXIT_CONFIG


def test_misclaimed_constants_produce_fail_exit(tmp_path, capsys):
    # claiming r0 = -6 for a theta = 1 OU drives the gradient-estimate RHS to
    # ~e^{-12} of its true size: the harness must catch the false claim
    cfg = _write(tmp_path, MISCLAIMED_CONFIG)
    status = cli.main(_run_args(cfg, tmp_path / "out", samples=4000))
    assert status == cli.EXIT_FAIL


def test_potential_check_requires_section(tmp_path, capsys):
    cfg = _write(tmp_path, OU_CONFIG)
    assert cli.main(_run_args(cfg, tmp_path / "out", checks="potential")) == cli.EXIT_CONFIG


def test_estimates_csv_and_plot_data(tmp_path):
    rows = [("a", McEstimate(1.5, 0.1, 100)), ("b", McEstimate(-2.0, 0.0, 50))]
    path = tmp_path / "est.csv"
    write_estimates_csv(path, rows, seed=9)
    lines = path.read_text().splitlines()
    assert lines[0] == "name,value,stderr,n,seed"
    assert lines[1] == "a,1.5,0.1,100,9"
    dat = tmp_path / "sweep.dat"
    write_plot_data(dat, [0.1, 0.2], [1.0, 2.0], header="delta sup")
    content = dat.read_text().splitlines()
    assert content[0] == "# delta sup"
    assert content[1] == "0.1 1.0"
