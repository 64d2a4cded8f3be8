import json
import shutil
from pathlib import Path

import numpy as np
import pytest

from noether_lcs.cli import main

PROBLEMS = Path(__file__).resolve().parent.parent / "problems"


@pytest.fixture
def free_particle_json(tmp_path):
    dst = tmp_path / "free_particle.json"
    shutil.copy(PROBLEMS / "free_particle.json", dst)
    return dst


@pytest.fixture
def oscillator_json(tmp_path):
    dst = tmp_path / "oscillator.json"
    shutil.copy(PROBLEMS / "oscillator.json", dst)
    return dst


def run(tmp_path, *argv):
    out = tmp_path / "out"
    code = main(list(argv) + ["--out", str(out)])
    reports = sorted(out.glob("*_report.json")) if out.exists() else []
    report = json.loads(reports[0].read_text()) if reports else None
    return code, report, out


def test_solve_free_particle(tmp_path, free_particle_json):
    code, report, out = run(tmp_path, "solve", str(free_particle_json))
    assert code == 0
    assert report["verdicts"]["converged"]
    assert report["residual_max"] <= 1e-9
    assert abs(report["action_value"] - 0.5) <= 1e-9
    csv = out / "extremal.csv"
    assert csv.exists()
    assert csv.read_text().splitlines()[0] == "t,x1"


def test_solve_emit_velocity(tmp_path, free_particle_json):
    _, _, out = run(tmp_path, "solve", str(free_particle_json), "--emit-velocity")
    header = (out / "extremal.csv").read_text().splitlines()[0]
    assert header == "t,x1,v1"


def test_solve_grid_override(tmp_path, free_particle_json):
    code, report, out = run(
        tmp_path, "solve", str(free_particle_json), "--grid-n", "60"
    )
    assert code == 0
    assert report["grid"]["n"] == 60
    assert len((out / "extremal.csv").read_text().splitlines()) == 62


def test_solve_rejects_odd_grid(tmp_path, free_particle_json, capsys):
    code = main(
        ["solve", str(free_particle_json), "--grid-n", "61", "--out", str(tmp_path)]
    )
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_legendre(tmp_path, free_particle_json):
    code, report, _ = run(tmp_path, "legendre", str(free_particle_json))
    assert code == 0
    assert report["verdicts"]["legendre"]
    assert abs(report["min_eigenvalue"] - 1.0) <= 1e-9


def test_legendre_violation_exit_code(tmp_path):
    doc = {
        "space": {"dim": 1},
        "interval": {"a": 0.0, "b": 1.0, "n": 40},
        "lagrangian": "-v1^2/2",
        "boundary": {"xa": [0.0], "xb": [0.0]},
    }
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    code, report, _ = run(tmp_path, "legendre", str(path))
    assert code == 2
    assert not report["verdicts"]["legendre"]


def test_jacobi(tmp_path, free_particle_json):
    code, report, out = run(tmp_path, "jacobi", str(free_particle_json), "--k", "2")
    assert code == 0
    ev = report["eigenvalues"]
    assert len(ev) == 2
    assert abs(ev[0] - np.pi**2) <= 0.01 * np.pi**2
    assert (out / "jacobi_mode_1.csv").exists()
    assert (out / "jacobi_mode_2.csv").exists()


def test_check_invariance_all_generators(tmp_path, free_particle_json):
    code, report, _ = run(tmp_path, "check-invariance", str(free_particle_json))
    # the boost generator is not a strict symmetry, so the overall verdict fails
    assert code == 2
    assert report["verdicts"]["time"]
    assert report["verdicts"]["shift"]
    assert not report["verdicts"]["boost"]


def test_check_invariance_single_generator(tmp_path, free_particle_json):
    code, report, _ = run(
        tmp_path, "check-invariance", str(free_particle_json), "--generator", "shift"
    )
    assert code == 0
    assert report["verdicts"] == {"shift": True}


def test_check_invariance_unknown_generator(tmp_path, free_particle_json, capsys):
    code = main(
        [
            "check-invariance",
            str(free_particle_json),
            "--generator",
            "nonesuch",
            "--out",
            str(tmp_path),
        ]
    )
    assert code == 1
    assert "unknown generator" in capsys.readouterr().err


def test_noether_momentum(tmp_path, free_particle_json):
    code, report, _ = run(
        tmp_path, "noether", str(free_particle_json), "--generator", "shift"
    )
    assert code == 0
    assert report["verdicts"] == {
        "invariance": True,
        "extremal": True,
        "conservation": True,
    }
    assert abs(report["conserved_mean"] - 1.0) <= 1e-8


def test_noether_boost_fails(tmp_path, free_particle_json):
    code, report, _ = run(
        tmp_path, "noether", str(free_particle_json), "--generator", "boost"
    )
    assert code == 2
    assert not report["verdicts"]["invariance"]


def test_verify_energy(tmp_path, oscillator_json):
    code, report, _ = run(
        tmp_path, "verify", str(oscillator_json), "--integral", "energy"
    )
    assert code == 0
    assert abs(report["conserved_mean"] + 0.5) <= 1e-3


def test_verify_unknown_integral(tmp_path, oscillator_json, capsys):
    code = main(
        [
            "verify",
            str(oscillator_json),
            "--integral",
            "nonesuch",
            "--out",
            str(tmp_path),
        ]
    )
    assert code == 1
    assert "unknown integral" in capsys.readouterr().err


def test_find_symmetries(tmp_path, free_particle_json):
    code, report, _ = run(tmp_path, "find-symmetries", str(free_particle_json))
    assert code == 0
    assert report["count"] >= 3


def test_audit_diff(tmp_path, free_particle_json):
    code, report, _ = run(tmp_path, "audit-diff", str(free_particle_json))
    assert code == 0
    assert report["verdicts"]["differentiable"]


def test_report_is_byte_identical_across_runs(tmp_path, free_particle_json):
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    assert main(["solve", str(free_particle_json), "--out", str(out_a)]) == 0
    assert main(["solve", str(free_particle_json), "--out", str(out_b)]) == 0
    ra = (out_a / "solve_report.json").read_bytes()
    rb = (out_b / "solve_report.json").read_bytes()
    assert ra == rb
    ca = (out_a / "extremal.csv").read_bytes()
    cb = (out_b / "extremal.csv").read_bytes()
    assert ca == cb


def test_seed_curve_round_trip(tmp_path, free_particle_json):
    out = tmp_path / "first"
    assert main(["solve", str(free_particle_json), "--out", str(out)]) == 0
    code, report, _ = run(
        tmp_path,
        "legendre",
        str(free_particle_json),
        "--seed-curve",
        str(out / "extremal.csv"),
    )
    assert code == 0
    assert report["verdicts"]["legendre"]


def test_missing_file_exit_code(tmp_path, capsys):
    code = main(["solve", str(tmp_path / "nope.json"), "--out", str(tmp_path)])
    assert code == 1


def test_malformed_json_exit_code(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    code = main(["solve", str(path), "--out", str(tmp_path)])
    assert code == 1
    assert "not valid JSON" in capsys.readouterr().err


def test_bad_lagrangian_exit_code(tmp_path, capsys):
    doc = {
        "space": {"dim": 1},
        "interval": {"a": 0.0, "b": 1.0, "n": 10},
        "lagrangian": "v1^^2",
    }
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    code = main(["solve", str(path), "--out", str(tmp_path)])
    assert code == 1


def test_thread_env_validation(tmp_path, free_particle_json, monkeypatch, capsys):
    monkeypatch.setenv("NOETHER_LCS_THREADS", "many")
    code = main(["solve", str(free_particle_json), "--out", str(tmp_path)])
    assert code == 1
    assert "NOETHER_LCS_THREADS" in capsys.readouterr().err


def test_report_contains_provenance(tmp_path, free_particle_json):
    _, report, _ = run(tmp_path, "solve", str(free_particle_json))
    assert report["schema_version"] == 1
    assert report["command"] == "solve"
    assert len(report["input_digest"]) == 64
