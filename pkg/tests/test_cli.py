import hashlib
import json
import subprocess
import sys

import pytest

from metrolb import chebyshev
from metrolb.cli import main


def _run(tmp_path, sub, cfg=None, extra=()):
    args = [sub, "--out", str(tmp_path / f"{sub}.csv")]
    if cfg is not None:
        p = tmp_path / f"{sub}.json"
        p.write_text(json.dumps(cfg))
        args += ["--config", str(p)]
    return main(args + list(extra))


def _rows(path):
    return path.read_text().strip().splitlines()


def test_verify_identities_default(tmp_path):
    assert _run(tmp_path, "verify-identities") == 0
    rows = _rows(tmp_path / "verify-identities.csv")
    assert rows[0] == "check,max_error,tolerance,cases,passed"
    assert 40 <= len(rows) - 1 <= 45


def test_verify_identities_fault_injection(tmp_path, monkeypatch, capsys):
    orig = chebyshev.eval_q
    monkeypatch.setattr(chebyshev, "eval_q", lambda K, z: -orig(K, z))
    assert _run(tmp_path, "verify-identities") == 1
    assert "chebyshev_q_identity" in capsys.readouterr().err


def test_verify_identities_k_max(tmp_path):
    assert _run(tmp_path, "verify-identities", extra=["--k-max", "8"]) == 0
    rows = [r.split(",") for r in _rows(tmp_path / "verify-identities.csv")[1:]]
    cheb_p = next(r for r in rows if r[0] == "chebyshev_p_identity")
    assert cheb_p[3] == "8000"


def test_scan_monotone(tmp_path):
    cfg = {"trials": 2000}
    assert _run(tmp_path, "scan", cfg) == 0
    rows = [r.split(",") for r in _rows(tmp_path / "scan.csv")]
    assert rows[0] == ["kind", "h", "eta", "K", "n", "mean_log_accept", "accept_rate",
                       "escape_rate", "gap_est", "gap_se", "tv_lb"]
    m = [float(r[5]) for r in rows[1:]]
    assert all(a > b for a, b in zip(m, m[1:]))


def test_scan_resonant_row(tmp_path):
    cfg = {"target": {"kind": "resonant", "d": 3, "kappa": 100.0, "eta": 1.0, "K": 2},
           "grid": [{"kind": "hmc", "eta": 1.0, "K": 2}, {"kind": "hmc", "eta": 0.05, "K": 2}],
           "start": {"set": "slab", "coord": 1, "half_width": 0.3}, "trials": 1000}
    assert _run(tmp_path, "scan", cfg) == 0
    rows = [r.split(",") for r in _rows(tmp_path / "scan.csv")[1:]]
    assert float(rows[0][7]) == 0.0
    assert float(rows[1][7]) > 0.0


@pytest.mark.parametrize("cfg", [
    {"grid": []},
    {"bogus": 1},
    {"target": {"kind": "hq", "d": 10, "kappa": 5.0, "extra": 1}},
    {"grid": [{"kind": "mala"}]},
    {"grid": [{"kind": "mala", "h": -1.0}]},
    {"target": {"kind": "hq", "d": 1, "kappa": 5.0}},
    {"trials": 0},
    {"master_seed": -3},
    {"start": {"set": "nope"}},
])
def test_scan_config_errors(tmp_path, cfg):
    assert _run(tmp_path, "scan", cfg) == 2


def test_unreadable_config(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert main(["scan", "--config", str(p), "--out", str(tmp_path / "o.csv")]) == 2


def test_mixing_T0_single_row(tmp_path):
    cfg = {"target": {"kind": "gaussian_iso", "d": 50}, "T": 0, "trials": 5}
    assert _run(tmp_path, "mixing", cfg) == 0
    rows = _rows(tmp_path / "mixing.csv")
    assert rows[0] == "step,rejects,cum_rejects,mean_norm_sq,max_norm_sq,omega_large_freq,tv_lb"
    assert len(rows) == 2


def test_mixing_requires_small_ball(tmp_path):
    assert _run(tmp_path, "mixing", {"start": "stationary"}) == 2


def test_mixing_expectation_failure(tmp_path):
    cfg = {"target": {"kind": "gaussian_iso", "d": 50}, "kernel": {"kind": "mala", "h": 0.5},
           "T": 50, "trials": 5, "expect": {"min_stall_fraction": 0.99}}
    assert _run(tmp_path, "mixing", cfg) == 1


def test_resonance_constant(tmp_path):
    assert _run(tmp_path, "resonance", {"T": 2000}) == 0
    rows = _rows(tmp_path / "resonance.csv")
    assert len(rows) == 2002


def test_resonance_perturbed_fails(tmp_path, capsys):
    cfg = {"target": {"kind": "resonant", "d": 3, "kappa": 100.0, "eta": 1.0, "K": 2,
                      "lambda_scale": 1.001}, "T": 2000}
    assert _run(tmp_path, "resonance", cfg) == 1
    assert "drifted" in capsys.readouterr().err


def test_resonance_adaptive(tmp_path):
    cfg = {"target": {"kind": "adaptive_resonant", "eta": 0.1, "K": 4, "j": 1}, "T": 500}
    assert _run(tmp_path, "resonance", cfg) == 0


def test_resonance_K1_config_error(tmp_path):
    cfg = {"target": {"kind": "resonant", "d": 3, "kappa": 100.0, "eta": 1.0, "K": 1}}
    assert _run(tmp_path, "resonance", cfg) == 2


def test_measure(tmp_path):
    assert _run(tmp_path, "measure") == 0
    rows = [r.split(",") for r in _rows(tmp_path / "measure.csv")]
    assert float(rows[1][4]) == pytest.approx(0.3934693402873666, rel=1e-15)


def test_gap(tmp_path):
    cfg = {"n": 20000, "check_bound": True}
    assert _run(tmp_path, "gap", cfg) == 0
    rows = _rows(tmp_path / "gap.csv")
    assert len(rows) == 4


def test_manifest_round_trip(tmp_path):
    cfg = {"trials": 300, "master_seed": 17}
    assert _run(tmp_path, "scan", cfg) == 0
    manifest = tmp_path / "scan.csv.manifest.json"
    doc = json.loads(manifest.read_text())
    assert doc["resolved_config"]["master_seed"] == 17
    assert doc["resolved_config"]["trials"] == 300
    assert "grid" in doc["resolved_config"]
    out2 = tmp_path / "again.csv"
    assert main(["scan", "--config", str(manifest), "--out", str(out2)]) == 0
    digest = hashlib.sha256(out2.read_bytes()).hexdigest()
    assert digest == doc["outputs"]["scan.csv"]


def test_manifest_for_other_subcommand_rejected(tmp_path):
    assert _run(tmp_path, "measure") == 0
    m = tmp_path / "measure.csv.manifest.json"
    assert main(["scan", "--config", str(m), "--out", str(tmp_path / "x.csv")]) == 2


def test_threads_do_not_change_output(tmp_path):
    cfg = {"target": {"kind": "gaussian_iso", "d": 100}, "T": 100, "trials": 8}
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg))
    assert main(["mixing", "--config", str(p), "--out", str(a), "--threads", "1"]) == 0
    assert main(["mixing", "--config", str(p), "--out", str(b), "--threads", "3"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_seed_flag_changes_output(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["measure", "--out", str(a)]) == 0
    cfg = tmp_path / "m.json"
    cfg.write_text(json.dumps({"target": {"kind": "hq", "d": 3, "kappa": 4.0},
                               "set": {"set": "small_ball"}, "n": 1000}))
    assert main(["measure", "--config", str(cfg), "--out", str(a), "--seed", "1"]) == 0
    assert main(["measure", "--config", str(cfg), "--out", str(b), "--seed", "2"]) == 0
    assert a.read_bytes() != b.read_bytes()


def test_full_precision_floats(tmp_path):
    assert _run(tmp_path, "measure") == 0
    val = _rows(tmp_path / "measure.csv")[1].split(",")[4]
    assert len(val.replace("0.", "").lstrip("0")) >= 16


def test_module_entry_point(tmp_path):
    out = tmp_path / "m.csv"
    r = subprocess.run([sys.executable, "-m", "metrolb", "measure", "--out", str(out)],
                       capture_output=True, text=True)
    assert r.returncode == 0
    assert out.exists()
