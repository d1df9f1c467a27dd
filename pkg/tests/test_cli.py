import json

import numpy as np
import pandas as pd
import pytest

from qedlab.app.cli import main
from qedlab.field.core import TransverseCurrent
from qedlab.hk import verify
from qedlab.output.artifacts import OBSERVABLE_COLUMNS
from qedlab.shared.config_keys import ConfigKeys
from qedlab.shared.constants import EXIT_FAILED, EXIT_OK, EXIT_USAGE
from qedlab.shared.utils import file_sha256


@pytest.fixture(autouse=True)
def _clean_env(monkeypatch):
    monkeypatch.delenv("QEDLAB_CONFIG", raising=False)
    for name in vars(ConfigKeys):
        if not name.startswith("_"):
            monkeypatch.delenv(f"QEDLAB_{name}", raising=False)


@pytest.fixture
def config_path(tmp_path, small_config_text):
    path = tmp_path / "config.yaml"
    path.write_text(small_config_text, encoding="utf-8")
    return path


def _manifest(out_dir) -> dict:
    return json.loads((out_dir / "manifest.json").read_text(encoding="utf-8"))


def test_help_exits_cleanly(capsys):
    assert main(["--help"]) == EXIT_OK
    assert "hk-scan" in capsys.readouterr().out


def test_exact_on_decoupled_spec(tmp_path, config_path):
    out = tmp_path / "exact"
    assert main(["exact", "-c", str(config_path), "-o", str(out)]) == EXIT_OK
    manifest = _manifest(out)
    assert manifest["status"] == "ok"
    assert manifest["command"] == "exact"
    re, im = manifest["results"]["field"][0]
    assert complex(re, im) == pytest.approx(0.2 + 0.1j, abs=1e-8)
    assert manifest["results"]["recovery"]["status"] == "passed"
    assert manifest["results"]["discretization_defect"] == 0.0
    assert manifest["results"]["current_spread"] <= 1e-8
    assert manifest["artifacts"]["observables.csv"] == file_sha256(out / "observables.csv")
    assert manifest["config"]["model"]["fock_cutoff"] == 8


def test_exact_and_scf_share_the_observable_schema(tmp_path, config_path):
    assert main(["exact", "-c", str(config_path), "-o", str(tmp_path / "e")]) == EXIT_OK
    assert main(["scf", "-c", str(config_path), "-o", str(tmp_path / "s")]) == EXIT_OK
    exact = pd.read_csv(tmp_path / "e" / "observables.csv")
    scf = pd.read_csv(tmp_path / "s" / "observables.csv")
    assert tuple(exact.columns) == OBSERVABLE_COLUMNS
    assert tuple(scf.columns) == OBSERVABLE_COLUMNS
    assert len(exact) == len(scf) == 8
    np.testing.assert_allclose(exact["n"], scf["n"], atol=1e-8)
    assert (tmp_path / "s" / "scf_history.csv").exists()
    assert _manifest(tmp_path / "s")["results"]["scf"]["converged"] is True


def test_unconverged_scf_exits_with_failure(tmp_path, config_path):
    out = tmp_path / "scf"
    code = main(
        ["scf", "-c", str(config_path), "-o", str(out), "-O", "solver.scf.max_iterations=1"]
    )
    assert code == EXIT_FAILED
    assert _manifest(out)["status"] == "not_converged"


def test_forced_scan_violation_exits_with_failure(tmp_path, config_path):
    out = tmp_path / "scan"
    code = main(
        [
            "hk-scan",
            "-c",
            str(config_path),
            "-o",
            str(out),
            "--seed",
            "1",
            "-O",
            "run.scan.eps_int=1e3",
        ]
    )
    assert code == EXIT_FAILED
    manifest = _manifest(out)
    assert manifest["status"] == "violation"
    assert manifest["seed"] == 1
    distances = pd.read_csv(out / "distances.csv")
    assert list(distances.columns) == ["i", "j", "d_ext", "d_int"]
    assert len(distances) == 3


def test_failed_cross_checks_exit_with_failure(tmp_path, config_path):
    out = tmp_path / "cross"
    code = main(
        [
            "hk-scan",
            "-c",
            str(config_path),
            "-o",
            str(out),
            "-O",
            "run.scan.cross_margin=1e3",
        ]
    )
    assert code == EXIT_FAILED
    manifest = _manifest(out)
    assert manifest["status"] == "failed"
    scan = manifest["results"]["scan"]
    assert scan["violations"] == []
    assert scan["failed_cross_checks"] == [[0, 1], [0, 2], [1, 2]]
    assert scan["passed"] is False


def test_failed_recovery_exits_with_failure(tmp_path, config_path, monkeypatch):
    exact_recovery = verify.recover_external

    def skewed(internal, ground, spec):
        offset = TransverseCurrent.from_entries(spec.modes, [(1, 1e-3)])
        return exact_recovery(internal, ground, spec) + offset

    monkeypatch.setattr(verify, "recover_external", skewed)
    out = tmp_path / "recovery"
    assert main(["hk-scan", "-c", str(config_path), "-o", str(out)]) == EXIT_FAILED
    scan = _manifest(out)["results"]["scan"]
    assert scan["failed_recoveries"] == [0, 1, 2]
    assert scan["recovery_status"] == ["failed"] * 3


def test_displace_check_passes(tmp_path, config_path):
    out = tmp_path / "displace"
    code = main(
        [
            "displace-check",
            "-c",
            str(config_path),
            "-o",
            str(out),
            "-O",
            "model.coupling=0.5",
            "-O",
            "external.vector_potential=[[1, 0.05, -0.05]]",
        ]
    )
    assert code == EXIT_OK
    report = json.loads((out / "displacement.json").read_text(encoding="utf-8"))
    assert report["status"] == "passed"


def test_maxwell_residual_sweep(tmp_path, config_path):
    out = tmp_path / "sweep"
    code = main(
        ["maxwell-residual", "-c", str(config_path), "-o", str(out), "-O", "run.cutoffs=[6, 8]"]
    )
    assert code == EXIT_OK
    sweep = pd.read_csv(out / "maxwell_residual.csv")
    assert list(sweep["fock_cutoff"]) == [6, 8]
    assert sweep["max_residual"].iloc[-1] <= 1e-8


def test_invalid_config_is_a_usage_error(tmp_path, config_path):
    out = tmp_path / "invalid"
    code = main(
        ["exact", "-c", str(config_path), "-o", str(out), "--seed", "4", "-O", "model.fock_cutoff=0"]
    )
    assert code == EXIT_USAGE
    manifest = _manifest(out)
    assert manifest["status"] == "config_error"
    assert manifest["command"] == "exact"
    assert manifest["seed"] == 4
    assert "fock_cutoff" in manifest["error"]


def test_missing_config_file_leaves_a_manifest_in_the_default_directory(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    code = main(["scf", "-c", str(tmp_path / "absent.yaml")])
    assert code == EXIT_USAGE
    manifest = _manifest(tmp_path / "results")
    assert manifest["status"] == "config_error"
    assert manifest["command"] == "scf"
    assert "not found" in manifest["error"]


def test_aliased_mode_leaves_a_manifest(tmp_path, config_path):
    out = tmp_path / "aliased"
    code = main(
        [
            "exact",
            "-c",
            str(config_path),
            "-o",
            str(out),
            "-O",
            "model.modes=[4]",
            "-O",
            "external.current=[]",
        ]
    )
    assert code == EXIT_USAGE
    manifest = _manifest(out)
    assert manifest["status"] == "config_error"
    assert "aliased" in manifest["error"]


def test_unknown_command_is_a_usage_error():
    assert main(["bogus"]) == EXIT_USAGE


def test_reruns_are_deterministic(tmp_path, config_path):
    for name in ("a", "b"):
        assert main(["exact", "-c", str(config_path), "-o", str(tmp_path / name)]) == EXIT_OK
    first, second = _manifest(tmp_path / "a"), _manifest(tmp_path / "b")
    assert first["results"]["ground"]["energy"] == pytest.approx(
        second["results"]["ground"]["energy"], abs=1e-11
    )
    np.testing.assert_allclose(first["results"]["field"], second["results"]["field"], atol=1e-11)
    assert first["config"] == second["config"]
