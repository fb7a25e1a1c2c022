"""Command-line front end: exit codes, manifests, byte-level reproduction."""

import json
import os
import subprocess
import sys

import pytest

from mfglab.cli import main


def run(args):
    return main(list(args))


def manifest_of(out_dir):
    with open(os.path.join(out_dir, "manifest.json")) as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# verify


def test_verify_passes_reference_instance(tmp_path):
    out = str(tmp_path / "ver")
    assert run(["verify", "--instance", "RI-1", "--out", out]) == 0
    text = (tmp_path / "ver" / "verify.txt").read_text()
    for line in ("tonelli_bounds: pass", "confinement_gap: pass",
                 "common_minimizer: pass", "initial_measure_in_K0: pass",
                 "terminal_datum: pass"):
        assert line in text


def test_verify_instance_from_config_file(tmp_path):
    cfg = {
        "name": "RI-1-coarse",
        "lagrangian": {"kind": "kinetic"},
        "coupling": {"kind": "separable", "f": "neg_gaussian", "G": "two_plus_tanh",
                     "K0": [-1.0, 1.0], "delta0": 0.36, "lip2": 0.86},
        "grid": {"lo": -4.0, "hi": 4.0, "dx": 0.04, "dt": 0.04,
                 "v_max": 4.0, "v_nodes": 81},
        "terminal": {"kind": "zero"},
        "initial": {"kind": "uniform_K0"},
    }
    cfg_path = tmp_path / "inst.json"
    cfg_path.write_text(json.dumps(cfg))
    out = str(tmp_path / "ver")
    assert run(["verify", "--config", str(cfg_path), "--out", out]) == 0


# ---------------------------------------------------------------------------
# ergodic and horizon runs


def test_ergodic_run_and_manifest(tmp_path):
    out = str(tmp_path / "erg")
    assert run(["ergodic", "--instance", "RI-1", "--out", out]) == 0
    names = sorted(os.listdir(out))
    assert names == ["manifest.json", "mbar.csv", "ubar.csv"]
    man = manifest_of(out)
    assert sorted(man.keys()) == ["config", "config_hash", "measured",
                                  "outputs", "timings"]
    assert sorted(man["outputs"].keys()) == ["mbar.csv", "ubar.csv"]
    assert man["measured"]["lambda"] == pytest.approx(1.2384058440442351, abs=1e-12)
    assert man["measured"]["mather_x"] == 0.0


def test_manifest_is_canonical_json(tmp_path):
    out = str(tmp_path / "erg")
    assert run(["ergodic", "--instance", "RI-1", "--out", out]) == 0
    raw = open(os.path.join(out, "manifest.json"), "rb").read()
    redumped = (json.dumps(json.loads(raw), sort_keys=True, indent=2) + "\n").encode()
    assert raw == redumped


def test_horizon_run(tmp_path):
    out = str(tmp_path / "hz")
    assert run(["horizon", "--instance", "RI-1", "--T", "2.0", "--out", out]) == 0
    assert sorted(os.listdir(out)) == ["manifest.json", "mpath.csv", "u.csv"]
    man = manifest_of(out)
    assert man["measured"]["converged"] is True


# ---------------------------------------------------------------------------
# reproduce


def test_reproduce_byte_identical(tmp_path):
    out = str(tmp_path / "erg")
    assert run(["ergodic", "--instance", "RI-1", "--out", out]) == 0
    assert run(["reproduce", os.path.join(out, "manifest.json")]) == 0


def test_reproduce_detects_tampering(tmp_path, capsys):
    out = str(tmp_path / "erg")
    assert run(["ergodic", "--instance", "RI-1", "--out", out]) == 0
    p = os.path.join(out, "ubar.csv")
    body = open(p).read()
    open(p, "w").write(body.replace("0.0", "0.1", 1))
    assert run(["reproduce", os.path.join(out, "manifest.json")]) == 1
    err = capsys.readouterr().err
    assert "mismatch" in err
    assert "ubar.csv" in err
    assert "line" in err


def test_reproduce_missing_manifest(tmp_path):
    assert run(["reproduce", str(tmp_path / "none" / "manifest.json")]) == 4


# ---------------------------------------------------------------------------
# converge


def test_converge_run_and_thread_determinism(tmp_path):
    a = str(tmp_path / "a")
    b = str(tmp_path / "b")
    args = ["converge", "--instance", "RI-1", "--dx", "0.04", "--dt", "0.04",
            "--T", "2,4,8", "--R", "3.0"]
    assert run(args + ["--out", a, "--threads", "1"]) == 0
    assert run(args + ["--out", b, "--threads", "2"]) == 0
    names = sorted(os.listdir(a))
    assert names == ["ef.dat", "eu.dat", "fit.json", "manifest.json", "report.csv"]
    for name in ("report.csv", "eu.dat", "ef.dat", "fit.json"):
        wa = open(os.path.join(a, name), "rb").read()
        wb = open(os.path.join(b, name), "rb").read()
        assert wa == wb, f"{name} differs across thread counts"
    fit = json.load(open(os.path.join(a, "fit.json")))
    assert fit["rate_F"]["slope"] < 0


# ---------------------------------------------------------------------------
# failures map to documented exit codes


def test_unknown_instance_is_io_error(tmp_path):
    assert run(["ergodic", "--instance", "NOPE", "--out", str(tmp_path / "x")]) == 4


def test_missing_instance_flag_is_io_error(tmp_path):
    assert run(["ergodic", "--out", str(tmp_path / "x")]) == 4


def test_assumption_failure_exit_code(tmp_path):
    cfg = {
        "name": "bad-gap",
        "lagrangian": {"kind": "kinetic"},
        "coupling": {"kind": "separable", "f": "neg_gaussian", "G": "two_plus_tanh",
                     "K0": [-1.0, 1.0], "delta0": 10.0, "lip2": 0.86},
        "grid": {"lo": -4.0, "hi": 4.0, "dx": 0.04, "dt": 0.04,
                 "v_max": 4.0, "v_nodes": 81},
        "terminal": {"kind": "zero"},
        "initial": {"kind": "uniform_K0"},
    }
    cfg_path = tmp_path / "bad.json"
    cfg_path.write_text(json.dumps(cfg))
    assert run(["verify", "--config", str(cfg_path),
                "--out", str(tmp_path / "v")]) == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "mfglab.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    for word in ("verify", "ergodic", "horizon", "converge", "reproduce"):
        assert word in proc.stdout
