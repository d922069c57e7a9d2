import csv
import hashlib
import json
import os
import subprocess
from pathlib import Path

import pytest

BIN = os.environ.get("IVPOTTS_BIN", "ivpotts")


def run(*args, cwd=None):
    return subprocess.run([BIN, *map(str, args)], cwd=cwd, capture_output=True, text=True, timeout=600)


def manifest(out):
    return json.loads((Path(out) / "manifest.json").read_text())


def write_config(path, cfg):
    path.write_text(json.dumps(cfg))
    return path


def test_verify_defaults_pass(tmp_path):
    p = run("verify", "--out", tmp_path)
    assert p.returncode == 0, p.stdout + p.stderr
    m = manifest(tmp_path)
    assert m["exit_code"] == 0
    checks = json.loads((tmp_path / "verify.json").read_text())["checks"]
    assert all(c["passed"] for c in checks)


def test_fault_hook_exits_one_and_names_the_check(tmp_path):
    p = run("verify", "--fault", "rc_weight", "--out", tmp_path)
    assert p.returncode == 1
    assert "potts_rc_identity" in p.stdout + p.stderr


def test_small_cap_is_incomplete(tmp_path):
    p = run("verify", "--cap-bonds", 6, "--out", tmp_path)
    assert p.returncode == 2
    assert manifest(tmp_path)["exit_code"] == 2


@pytest.mark.parametrize("args", [["--q", 0], ["--r", -1], ["--beta", -0.5]])
def test_bad_params_exit_three(tmp_path, args):
    p = run("exact", *args, "--out", tmp_path)
    assert p.returncode == 3
    assert "params." in p.stderr


def test_bad_config_names_the_field(tmp_path):
    cfg = write_config(tmp_path / "c.json", {"params": {"q": 2, "r": 1, "bogus": 1}})
    p = run("exact", "--config", cfg, "--out", tmp_path / "o")
    assert p.returncode == 3
    assert "bogus" in p.stderr


def test_fault_rejected_outside_verify(tmp_path):
    p = run("exact", "--fault", "rc_weight", "--out", tmp_path)
    assert p.returncode == 3


def test_manifest_hashes_match_files(tmp_path):
    assert run("exact", "--out", tmp_path).returncode == 0
    m = manifest(tmp_path)
    assert {f["path"] for f in m["files"]} == {"exact.json", "pressure.csv"}
    for f in m["files"]:
        data = (tmp_path / f["path"]).read_bytes()
        assert hashlib.sha256(data).hexdigest() == f["sha256"]
        assert len(data) == f["bytes"]


SWEEP = {"params": {"q": 2, "r": 30}, "beta": {"from": 1.6, "to": 2.2, "steps": 3},
         "torus": [8, 8], "sweeps": 400, "burn_in": 50, "seed": 7}


def file_hashes(out):
    return {f["path"]: f["sha256"] for f in manifest(out)["files"]}


def test_sweep_is_deterministic_across_runs_and_threads(tmp_path):
    cfg = write_config(tmp_path / "sweep.json", SWEEP)
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("sweep", "--config", cfg, "--out", a).returncode == 0
    assert run("sweep", "--config", cfg, "--out", b, "--threads", 2).returncode == 0
    assert file_hashes(a) == file_hashes(b)
    assert len(file_hashes(a)) > 0


def test_sweep_csv_parses_back(tmp_path):
    cfg = write_config(tmp_path / "sweep.json", SWEEP)
    assert run("sweep", "--config", cfg, "--out", tmp_path / "o").returncode == 0
    with open(tmp_path / "o" / "observables.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [round(float(r["beta"]), 6) for r in rows] == [1.6, 1.9, 2.2]
    for r in rows:
        assert -2.0 - 1e-9 <= float(r["energy_mean"]) <= 0.0
        assert 0.0 < float(r["max_colour_fraction"]) <= 1.0
        assert r["bimodal"] in {"0", "1"}
    for i in range(3):
        with open(tmp_path / "o" / f"hist_{i:03d}.csv", newline="") as fh:
            hist = list(csv.DictReader(fh))
        assert sum(int(h["count"]) for h in hist) == SWEEP["sweeps"]
        assert all(float(h["bin_low"]) < float(h["bin_high"]) for h in hist)


def test_seed_changes_the_chain(tmp_path):
    cfg = write_config(tmp_path / "sweep.json", SWEEP)
    assert run("sweep", "--config", cfg, "--out", tmp_path / "a").returncode == 0
    assert run("sweep", "--config", cfg, "--seed", 8, "--out", tmp_path / "b").returncode == 0
    assert file_hashes(tmp_path / "a")["observables.csv"] != file_hashes(tmp_path / "b")["observables.csv"]


def test_empty_grid_writes_only_the_manifest(tmp_path):
    cfg = write_config(tmp_path / "e.json", {"beta": {"from": 1, "to": 2, "steps": 0}})
    assert run("sweep", "--config", cfg, "--out", tmp_path / "o").returncode == 0
    assert sorted(p.name for p in (tmp_path / "o").iterdir()) == ["manifest.json"]


def test_report_reads_sweep_output(tmp_path):
    cfg = write_config(tmp_path / "sweep.json", SWEEP)
    out = tmp_path / "o"
    assert run("sweep", "--config", cfg, "--out", out).returncode == 0
    assert run("report", "--out", out).returncode == 0
    assert (out / "report.md").read_text().strip()


def test_report_on_empty_dir_is_a_config_error(tmp_path):
    assert run("report", "--out", tmp_path).returncode == 3
