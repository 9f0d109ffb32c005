import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from fewbody import cli, config as cfgmod, validate as val
from fewbody.report import read_report_csv

SWEEP_TOML = """\
[sweep]
seed = 1234
eps = 0.1

[sweep.energies]
start = 2.0
stop = 200.0
count = 5
spacing = "geometric"
reference = "pair_spectral_radius"
"""

TWOBODY_TOML = """\
[two-body]

[two-body.energies]
start = 0.1
stop = 10.0
count = 5
reference = "potential_scale"
"""

VALIDATE_TOML = "[validate]\nseed = 1234\n"

ZERO_SWEEP_TOML = """\
[sweep]
eps = 0.1

[sweep.model]
potential = "random_hermitian"
strength = 0.0

[sweep.energies]
values = [2.0, 4.0]
reference = "absolute"
"""


def run_cli(args, cwd):
    return subprocess.run(
        [sys.executable, "-m", "fewbody.cli", *args],
        capture_output=True,
        text=True,
        cwd=cwd,
    )


@pytest.fixture()
def sweep_config(tmp_path):
    path = tmp_path / "sweep.toml"
    path.write_text(SWEEP_TOML)
    return path


class TestCliSweep:
    def test_byte_identical_reruns(self, tmp_path, sweep_config):
        out1 = tmp_path / "a.csv"
        out2 = tmp_path / "b.csv"
        r1 = run_cli(
            ["sweep", "--config", str(sweep_config), "--output", str(out1)], tmp_path
        )
        r2 = run_cli(
            ["sweep", "--config", str(sweep_config), "--output", str(out2)], tmp_path
        )
        assert r1.returncode == 0, r1.stderr
        assert r2.returncode == 0, r2.stderr
        assert out1.read_bytes() == out2.read_bytes()

    def test_seed_changes_output(self, tmp_path, sweep_config):
        out1 = tmp_path / "a.csv"
        out2 = tmp_path / "b.csv"
        run_cli(["sweep", "--config", str(sweep_config), "--output", str(out1)], tmp_path)
        run_cli(
            [
                "sweep",
                "--config",
                str(sweep_config),
                "--output",
                str(out2),
                "--seed",
                "999",
            ],
            tmp_path,
        )
        assert out1.read_bytes() != out2.read_bytes()

    def test_threads_flag_keeps_bytes(self, tmp_path, sweep_config):
        out1 = tmp_path / "a.csv"
        out2 = tmp_path / "b.csv"
        run_cli(["sweep", "--config", str(sweep_config), "--output", str(out1)], tmp_path)
        run_cli(
            [
                "sweep",
                "--config",
                str(sweep_config),
                "--output",
                str(out2),
                "--threads",
                "3",
            ],
            tmp_path,
        )
        # thread count is pinned out of the hash and must not move a digit
        assert out1.read_bytes() == out2.read_bytes()

    def test_zero_potential_rows_all_zero(self, tmp_path):
        path = tmp_path / "zero.toml"
        path.write_text(ZERO_SWEEP_TOML)
        out = tmp_path / "zero.csv"
        r = run_cli(["sweep", "--config", str(path), "--output", str(out)], tmp_path)
        assert r.returncode == 0, r.stderr
        report = read_report_csv(out.read_bytes())
        for row in report.rows:
            for name, value in zip(report.columns, row):
                if name not in ("energy", "eps"):
                    assert value == 0.0

    def test_json_format(self, tmp_path, sweep_config):
        out = tmp_path / "a.json"
        r = run_cli(
            [
                "sweep",
                "--config",
                str(sweep_config),
                "--output",
                str(out),
                "--format",
                "json",
            ],
            tmp_path,
        )
        assert r.returncode == 0
        assert out.read_text().startswith("{")

    def test_stdout_when_no_output(self, tmp_path, sweep_config):
        r = run_cli(["sweep", "--config", str(sweep_config)], tmp_path)
        assert r.returncode == 0
        assert r.stdout.startswith("# version=")

    def test_csv_round_trips_in_memory_report(self, tmp_path, sweep_config):
        cfg = cfgmod.parse_config(SWEEP_TOML)
        report = cli.run(cfg)
        back = read_report_csv(cli.emit_report(report, "csv"))
        assert back.rows == report.rows
        assert back.config_hash == report.config_hash


class TestCliValidate:
    def test_exit_zero_on_reference_model(self, tmp_path):
        path = tmp_path / "validate.toml"
        path.write_text(VALIDATE_TOML)
        r = run_cli(["validate", "--config", str(path)], tmp_path)
        assert r.returncode == 0, r.stdout + r.stderr
        report = read_report_csv(r.stdout.encode())
        status = report.columns.index("status")
        assert all(row[status] == "pass" for row in report.rows)

    def test_every_check_passes(self):
        cfg = cfgmod.parse_config(VALIDATE_TOML)
        report = val.run_validation(cfg)
        status = report.columns.index("status")
        assert report.rows
        assert all(row[status] == "pass" for row in report.rows)


class TestCliTwoBody:
    def test_runs_and_unitary(self, tmp_path):
        path = tmp_path / "tb.toml"
        path.write_text(TWOBODY_TOML)
        out = tmp_path / "tb.csv"
        r = run_cli(["two-body", "--config", str(path), "--output", str(out)], tmp_path)
        assert r.returncode == 0, r.stderr
        report = read_report_csv(out.read_bytes())
        s_dev = report.columns.index("s_abs_dev")
        kz = report.columns.index("kz_ratio")
        assert all(row[s_dev] <= 1e-12 for row in report.rows)
        # decay of the potential-dominance ratio along the sweep
        assert report.rows[-1][kz] < report.rows[0][kz]


class TestCliErrors:
    def test_missing_config(self, tmp_path):
        r = run_cli(["sweep", "--config", str(tmp_path / "nope.toml")], tmp_path)
        assert r.returncode == 2
        assert "cannot read config" in r.stderr

    def test_mode_mismatch(self, tmp_path, sweep_config):
        r = run_cli(["validate", "--config", str(sweep_config)], tmp_path)
        assert r.returncode == 2
        assert "does not match" in r.stderr

    def test_invalid_config_field(self, tmp_path):
        path = tmp_path / "bad.toml"
        path.write_text("[sweep]\neps = -1.0\n")
        r = run_cli(["sweep", "--config", str(path)], tmp_path)
        assert r.returncode == 2
        assert "eps" in r.stderr
