import json

import pytest

from trunsep.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_threshold_text(capsys):
    code, out, _ = run(capsys, "threshold", "--r", "1/2", "--case", "1")
    assert code == 0
    assert "272/489 (0.556237218814)" in out


def test_threshold_json(capsys):
    code, out, _ = run(capsys, "threshold", "--case", "3", "--format", "json")
    assert code == 0
    (row,) = json.loads(out)
    assert row["lambda_lp_exact"] == "1/2" and row["case"] == 3


@pytest.mark.parametrize("r", ["0", "3/2", "abc", "-1"])
def test_bad_r_is_usage_error(capsys, r):
    with pytest.raises(SystemExit) as info:
        main(["threshold", "--r", r])
    assert info.value.code == 2


def test_sweep_grid_csv(capsys, tmp_path):
    out = tmp_path / "s.csv"
    code, _, _ = run(capsys, "sweep", "--grid", "1,3/4", "--out", str(out))
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0].split(",")[:3] == ["r", "r_exact", "case"]
    assert len(lines) == 1 + 8
    assert lines[1].startswith("0.750000000000,3/4,1,")


def test_orbits(capsys):
    code, out, _ = run(capsys, "orbits", "--r", "1/2")
    assert code == 0
    assert "4 classes" in out and "total 576" in out
    code, out, _ = run(capsys, "orbits", "--r", "1", "--format", "json")
    assert json.loads(out)["classes"] == 1


def test_certify_and_verify(capsys, tmp_path):
    path = tmp_path / "c4.json"
    code, _, _ = run(capsys, "certify", "--case", "4", "--r", "3/4", "--out", str(path))
    assert code == 0
    code, out, _ = run(capsys, "verify", str(path))
    assert code == 0 and out.startswith("valid")
    data = json.loads(path.read_text())
    data["terms"][0]["p"] = "-" + data["terms"][0]["p"]
    path.write_text(json.dumps(data))
    code, out, _ = run(capsys, "verify", str(path))
    assert code == 1 and out.startswith("invalid")


def test_certify_outside_formula_range(capsys):
    code, _, err = run(capsys, "certify", "--case", "1", "--r", "1")
    assert code == 1
    assert "formula" in err


def test_verify_unreadable(capsys, tmp_path):
    path = tmp_path / "junk.json"
    path.write_text("{not json")
    code, _, err = run(capsys, "verify", str(path))
    assert code == 1 and "cannot read" in err


def _circuit_file(tmp_path, lam):
    data = {
        "r": "1/2",
        "qubits": 2,
        "init": [["2/3", "2/3", "1/3"], ["1", "0", "0"]],
        "gates": [{"type": "clifford", "q": 0, "rot": "H"}, {"type": "cz", "q": [0, 1], "lambda": lam}],
        "measure": ["X", "Z"],
    }
    path = tmp_path / "c.json"
    path.write_text(json.dumps(data))
    return path


def test_simulate_with_oracle(capsys, tmp_path):
    path = _circuit_file(tmp_path, "3/5")
    code, out, _ = run(capsys, "simulate", str(path), "--shots", "3000", "--seed", "7", "--oracle", "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert data["lambda_star"] == "272/489"
    assert sum(e["count"] for e in data["outcomes"]) == 3000
    assert 0 <= data["chi2_pvalue"] <= 1


def test_simulate_below_threshold(capsys, tmp_path):
    path = _circuit_file(tmp_path, "1/2")
    code, _, err = run(capsys, "simulate", str(path), "--shots", "10")
    assert code == 1
    assert "272/489" in err


def test_simulate_missing_file(capsys, tmp_path):
    code, _, err = run(capsys, "simulate", str(tmp_path / "none.json"))
    assert code == 1
