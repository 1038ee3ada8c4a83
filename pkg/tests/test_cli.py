import json
import subprocess
import sys
from math import sin

import numpy as np
import pytest

from weakwalk import cli, walk
from weakwalk.pauli import single_deviation_spec


def run(*argv):
    return cli.main(list(argv))


def read_csv(path):
    return np.genfromtxt(path, delimiter=",", names=True)


def test_solve_params_json(capsys):
    assert run("solve-params", "--gamma", "3", "--eps", "0.25") == 0
    out = json.loads(capsys.readouterr().out)
    assert 20 <= out["m"] <= 35
    assert out["achieved_s0"] > 0.5


def test_solve_params_infeasible(capsys):
    assert run("solve-params", "--gamma", "3", "--eps", "0") == 2
    assert json.loads(capsys.readouterr().err)["constraint"] == "s1"


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as ei:
        run("solve-params", "--gamma", "3")
    assert ei.value.code == 1
    assert run("solve-params", "--gamma", "3", "--eps", "0.9") == 1


def test_io_error(tmp_path):
    assert run("figure1", "--out", str(tmp_path / "missing" / "f.csv")) == 3


def test_figure1_rows(tmp_path):
    out = tmp_path / "f1.csv"
    assert run("figure1", "--out", str(out)) == 0
    d = read_csv(out)
    assert len(d) == 40
    side = json.loads((tmp_path / "f1.json").read_text())
    th = side["theta"]["value"]
    assert d["S0_exact"][0] == pytest.approx(1 - sin(th / 2) ** 2, abs=1e-15)
    assert d["S1_exact"][0] == pytest.approx(d["S0_exact"][0], abs=1e-15)
    row = d[d["m"] == 25][0]
    assert 0.53 <= row["S0_exact"] <= 0.57 and 0.045 <= row["S1_exact"] <= 0.050
    assert np.max(np.abs(d["S0_approx"] - d["S0_exact"])) < 0.02
    assert side["thresholds"]["s0_min"] == 0.5
    assert str(out) in side["manifest"]["outputs"]


def test_figure2_columns_and_jobs(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run("figure2", "--out", str(a)) == 0
    assert run("figure2", "--out", str(b), "--jobs", "2") == 0
    assert a.read_bytes() == b.read_bytes()
    d = read_csv(a)
    assert d["eps_star"][0] == 0 and d["eps_star"][-1] == 0.5 and len(d) == 51
    assert np.all(np.diff(d["S_exact"]) < 0)
    big = d["eps_star"] >= 0.35
    assert np.all(d["S_approx"][big] > d["S_exact"][big])


def test_csv_format(tmp_path):
    out = tmp_path / "c.csv"
    assert run("curve", "--m", "5", "--theta", "0.1", "--eps-star", "0.2", "--track", "all", "--out", str(out)) == 0
    raw = out.read_bytes()
    assert b"\r" not in raw
    first = raw.decode().splitlines()[1].split(",")
    assert first[0] == "1" and len(first) == 4
    assert len(first[1].replace("0.", "").lstrip("0")) >= 16


def test_classify_drive(capsys, tmp_path):
    assert run("classify-drive", "--theta", "0.2") == 0
    assert json.loads(capsys.readouterr().out)["kind"] == "weak"
    assert run("classify-drive", "--model", "flip") == 0
    assert json.loads(capsys.readouterr().out)["kind"] == "strong"
    f = tmp_path / "k.json"
    f.write_text(json.dumps({"kraus": [{"real": np.eye(4).tolist()}]}))
    assert run("classify-drive", "--kraus", str(f)) == 0
    assert json.loads(capsys.readouterr().out)["kind"] == "neither"


@pytest.fixture
def demo_files(tmp_path):
    spec, hyp = single_deviation_spec(2, 5, 0.4)
    (tmp_path / "spec.json").write_text(json.dumps(spec.to_json()))
    (tmp_path / "dev.json").write_text(json.dumps({"eigenvalues": hyp.tolist()}))
    (tmp_path / "exact.json").write_text(json.dumps({"eigenvalues": spec.eigenvalues.tolist()}))
    (tmp_path / "short.json").write_text(json.dumps({"eigenvalues": [1, 0.4, 0.4, 0.4]}))
    (tmp_path / "broken.json").write_text("{not json")
    return tmp_path


def test_pauli_demo(demo_files, capsys):
    d = demo_files
    assert run("pauli-demo", "--spec", str(d / "spec.json"), "--hypothesis", str(d / "exact.json")) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["verdict"] == "hypothesis_1" and out["m3_overwrite"] <= 1e-10
    assert len(out["per_test"]) == 15
    assert run("pauli-demo", "--spec", str(d / "spec.json"), "--hypothesis", str(d / "dev.json"),
               "--sample", "50", "--seed", "1") == 0
    out = json.loads(capsys.readouterr().out)
    assert out["verdict"] == "hypothesis_2"
    assert out["sampled"]["repetitions"] == 50


@pytest.mark.parametrize("hyp", ["short.json", "broken.json"])
def test_pauli_demo_bad_input(demo_files, hyp):
    assert run("pauli-demo", "--spec", str(demo_files / "spec.json"), "--hypothesis", str(demo_files / hyp)) == 1


def test_verify_passes(capsys):
    assert run("verify") == 0
    assert capsys.readouterr().out.count("PASS") == len(cli.VERIFY_CHECKS)


def test_verify_names_purity_after_ry_sign_flip(monkeypatch, capsys):
    def bad_ry(theta):
        c, s = np.cos(theta / 2), np.sin(theta / 2)
        return np.array([[c, -s], [-s, c]], dtype=complex)

    monkeypatch.setattr(walk, "ry", bad_ry)
    assert run("verify") == 4
    assert "first failing invariant: purity" in capsys.readouterr().out


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "weakwalk", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.strip()
