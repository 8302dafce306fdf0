import json
import subprocess
import sys

import pytest

from capbraid import cli


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.err


def load_report(path):
    data = json.loads(path.read_text())
    data.pop("timestamp")
    return data


def test_spectral_report(tmp_path, capsys):
    code, _ = run(["spectral", "--config", "torus_sinsin", "--out", str(tmp_path)], capsys)
    assert code == 0
    rep = load_report(tmp_path / "spectral.json")["spectral"]
    assert rep["c_im"] == pytest.approx(0.05, rel=1e-6)
    assert rep["gamma_im"] == pytest.approx(0.1, rel=1e-6)


def test_malformed_config_is_a_usage_error(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text('[surface]\nkind = "torus"\nfoo = 1\n[hamiltonian]\nexpr = "x"\n')
    code, err = run(["orbits", "--config", str(bad), "--out", str(tmp_path)], capsys)
    assert code == 2
    body = json.loads(err.strip().splitlines()[-1])
    assert body["error"] == "config"
    assert (body["line"], body["column"]) == (3, 1)


def test_time_dependent_morse_is_a_usage_error(tmp_path, capsys):
    cfg = tmp_path / "td.toml"
    cfg.write_text('[surface]\nkind = "torus"\n[hamiltonian]\nexpr = "0.05*sin(2*pi*x)*cos(2*pi*t)"\n')
    code, _ = run(["morse", "--config", str(cfg), "--out", str(tmp_path)], capsys)
    assert code == 2


def test_linking_writes_csv_and_portrait(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path))
    code, _ = run(["linking", "--config", "torus_sinsin", "--svg"], capsys)
    assert code == 0
    rows = (tmp_path / "linking.csv").read_text().strip().splitlines()
    assert len(rows) == 9
    assert (tmp_path / "portrait.svg").read_text().lstrip().startswith("<?xml")


def test_foliate_report(tmp_path, capsys):
    code, _ = run(["foliate", "--config", "sphere_height", "--out", str(tmp_path)], capsys)
    assert code == 0
    assert (tmp_path / "foliate.json").exists()


def test_verify_is_thread_independent(tmp_path, capsys):
    reports = []
    for threads in (1, 3):
        out = tmp_path / f"t{threads}"
        code, _ = run(["verify", "--only", "1,3", "--threads", str(threads), "--out", str(out)], capsys)
        assert code == 0
        reports.append(json.dumps(load_report(out / "verify.json"), sort_keys=True, indent=1))
    assert reports[0] == reports[1]


def test_unknown_command_exits_with_usage():
    proc = subprocess.run([sys.executable, "-m", "capbraid.cli", "frobnicate"], capture_output=True, text=True)
    assert proc.returncode == 2
    assert "invalid choice" in proc.stderr
