"""Command-line tests"""

import json

import pytest

from stratclass import __version__
from stratclass.core.config import settings
from stratclass.main import main


def run_cli(capsys, *argv) -> tuple[int, dict | None]:
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, json.loads(out) if out.strip() else None


def test_run_writes_artifacts(capsys, write_config, tmp_path):
    """Test ``run`` prints the report and writes the three files"""
    out = tmp_path / "run"
    code, report = run_cli(capsys, "run", "--config", str(write_config()), "--out", str(out))
    assert code == 0
    assert report["n"] == 64
    assert {"regret", "baseline_gap", "checkpoints"} <= set(report)
    assert (out / "rounds.csv").exists()
    assert (out / "report.json").exists()
    assert (out / "config-echo.json").exists()


def test_run_without_round_log(capsys, write_config, tmp_path):
    """Test ``--no-round-log`` skips rounds.csv"""
    out = tmp_path / "run"
    code, _ = run_cli(capsys, "run", "--config", str(write_config()), "--out", str(out), "--no-round-log")
    assert code == 0
    assert not (out / "rounds.csv").exists()


def test_sweep(capsys, write_config, tmp_path):
    """Test ``sweep`` prints the summary and writes sweep files"""
    out = tmp_path / "sweep"
    code, summary = run_cli(
        capsys,
        "sweep",
        "--config",
        str(write_config()),
        "--n-grid",
        "16,32",
        "--theta-grid",
        "0,0.5",
        "--replicates",
        "1",
        "--out",
        str(out),
    )
    assert code == 0
    assert len(summary["cells"]) == 4
    assert (out / "sweep.csv").exists()


def test_validate(capsys, write_config):
    """Test ``validate`` prints the derived schedule"""
    code, payload = run_cli(capsys, "validate", "--config", str(write_config()))
    assert code == 0
    assert payload["n"] == 64
    assert payload["M"] == pytest.approx(7.0)
    assert payload["L"] == pytest.approx(5.0)
    assert payload["theta_hat"] == pytest.approx(0.55)
    assert payload["dimension_exponent"] == pytest.approx(0.5)
    assert 0.0 < payload["delta"] < 1.0
    assert payload["smoothing_gap"] == pytest.approx(payload["L"] * payload["delta"])
    assert payload["restriction_gap"] == pytest.approx(64 * payload["L"] * 2.0 * payload["delta"])
    assert payload["relaxed_regret_bound"] >= 2.0 * payload["L"] ** 2 / (4 * payload["M"])
    assert 0.0 < payload["simplified_regret_bound"]


def test_best_response_oracle(capsys):
    """Test the closed-form and numeric best responses agree"""
    code, payload = run_cli(
        capsys,
        "oracle", "best-response", "--p", "2", "--r", "2", "--A", "1,0;0,1", "--eps", "0.5",
        "--beta", "0,2", "--x", "1,0", "--numeric",
    )
    assert code == 0
    assert payload["xhat"] == pytest.approx([1.0, 2.0])
    assert payload["inner"] == pytest.approx(4.0)
    assert payload["numeric_xhat"] == pytest.approx([1.0, 2.0], abs=1e-4)


def test_conjugate_oracle(capsys):
    """Test the conjugate value, subgradient and grid supremum"""
    code, payload = run_cli(
        capsys,
        "oracle", "conjugate", "--p", "2", "--r", "2", "--A", "2,0;0,1", "--eps", "0.5",
        "--beta", "2,1", "--grid",
    )
    assert code == 0
    assert payload["value"] == pytest.approx(1.0)
    assert payload["subgradient"] == pytest.approx([0.5, 1.0])
    assert payload["grid_value"] == pytest.approx(1.0, abs=1e-6)


def test_hindsight_oracles(capsys, write_config):
    """Test both hindsight oracles run on the configured stream"""
    config = str(write_config(n=16))
    code, descent = run_cli(capsys, "oracle", "hindsight", "--config", config, "--iterations", "3000")
    assert code == 0
    assert descent["rounds"] == 16
    code, grid = run_cli(capsys, "oracle", "grid-hindsight", "--config", config, "--resolution", "0.05")
    assert code == 0
    assert abs(descent["total_loss"] - grid["total_loss"]) <= descent["certified_gap"] + grid["certified_gap"]


def test_bad_config_exits_with_one(capsys, write_config):
    """Test package errors become exit code 1 with nothing on stdout"""
    code, payload = run_cli(capsys, "validate", "--config", str(write_config(schema=3)))
    assert code == 1
    assert payload is None


def test_singular_transform_exits_with_one(capsys):
    """Test oracle input errors are reported, not raised"""
    code, _ = run_cli(
        capsys, "oracle", "conjugate", "--p", "2", "--r", "2", "--A", "1,0;1,0", "--eps", "0.5", "--beta", "1,1"
    )
    assert code == 1


def test_version_uses_project_name(capsys):
    """Test ``--version`` reports the configured program name"""
    with pytest.raises(SystemExit) as exit_info:
        main(["--version"])
    assert exit_info.value.code == 0
    assert capsys.readouterr().out.strip() == f"{settings.PROJECT_NAME} {__version__}"
