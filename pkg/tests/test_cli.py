import json
import subprocess
import sys

import pytest

from psustat import __version__
from psustat.cli import COMMANDS, run

SMALL = {
    "identities": ["--trials", "50"],
    "enumerate": ["--preset", "schottky", "--radius", "2"],
    "moments": ["--preset", "schottky", "--power", "2"],
    "walk": ["--preset", "schottky", "--samples", "20", "--steps", "10"],
    "hitting": ["--preset", "schottky", "--samples", "50"],
    "residual": ["--nu", "fixed-point"],
    "drift": ["--nu", "fixed-point"],
    "borel-norms": ["--nmax", "3"],
    "aleksandrov": ["--nu", "point-mass:0.5", "--p", "0.9"],
    "gap": ["--nu", "lebesgue", "--M", "64"],
    "operator": ["--K", "4"],
    "contour": [],
    "stolz": ["--preset", "schottky", "--radius", "3", "--grid", "128"],
    "iterate": ["--max-iter", "3", "--M", "256"],
}


def run_json(tmp_path, args, name="out.json"):
    out = tmp_path / name
    code = run(list(args) + ["-o", str(out)])
    return code, (json.loads(out.read_text()) if code == 0 else None)


@pytest.mark.parametrize("cmd", COMMANDS)
def test_every_command_runs(cmd, tmp_path):
    code, rep = run_json(tmp_path, [cmd] + SMALL[cmd])
    assert code == 0
    assert rep["tool"] == "psustat" and rep["version"] == __version__ and rep["command"] == cmd
    assert isinstance(rep["config"], dict) and "result" in rep


def test_identities_example(tmp_path):
    code, rep = run_json(tmp_path, ["identities", "--trials", "1000", "--seed", "7"])
    assert code == 0 and rep["result"]["max_defect"] < 1e-10
    assert rep["config"]["seed"] == 7


def test_residual_example(tmp_path):
    code, rep = run_json(tmp_path, ["residual", "--preset", "single-hyperbolic", "--nu", "fixed-point",
                                    "--rmax", "0.9"])
    assert code == 0 and rep["result"]["max_abs"] < 1e-9


def test_borel_norms_csv(tmp_path):
    out = tmp_path / "b.csv"
    assert run(["borel-norms", "--preset", "single-hyperbolic", "--nmax", "10", "--format", "csv",
                "-o", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# psustat") and lines[1].startswith("# config ")
    assert lines[2] == "n,norm"
    vals = [float(l.split(",")[1]) for l in lines[3:]]
    assert len(vals) == 10 and all(b > a for a, b in zip(vals, vals[1:]))


def test_drift_reports_sign(tmp_path):
    code, rep = run_json(tmp_path, ["drift", "--nu", "fixed-point"])
    r = rep["result"]
    assert r["l"] < 0 and abs(r["abs_l"] - abs(r["l"])) == 0 and "note" in r


def test_contour_expected(tmp_path):
    code, rep = run_json(tmp_path, ["contour", "--test-function", "z2"])
    q, e = rep["result"]["charge"], rep["result"]["expected"]
    assert abs(q[0] - e[0]) < 1e-6 and abs(q[1] - e[1]) < 1e-6


@pytest.mark.parametrize("cmd", ["identities", "walk", "hitting", "residual", "stolz"])
def test_config_round_trip_bitwise(cmd, tmp_path):
    extra = ["--seed", "5"] if cmd in ("identities", "walk", "hitting") else []
    first = tmp_path / "first.json"
    assert run([cmd] + SMALL[cmd] + extra + ["-o", str(first)]) == 0
    second = tmp_path / "second.json"
    assert run(["--config", str(first), "-o", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()
    third = tmp_path / "third.json"
    assert run([cmd] + SMALL[cmd] + extra + ["-o", str(third)]) == 0
    assert first.read_bytes() == third.read_bytes()


def test_bare_config(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"command": "moments", "preset": "schottky", "power": 2}))
    code, rep = run_json(tmp_path, ["--config", str(cfg)])
    assert code == 0 and rep["result"]["support_size"] == 13


def test_config_errors(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"command": "moments", "bogus": 1}))
    assert run(["--config", str(cfg)]) == 2
    cfg.write_text(json.dumps({"command": "moments"}))
    assert run(["--config", str(cfg), "walk"]) == 2
    assert run(["--config", str(tmp_path / "missing.json")]) == 2
    cfg.write_text("not json")
    assert run(["--config", str(cfg)]) == 2


def test_exit_codes(tmp_path, capsys):
    assert run(["moments", "--preset", "nonsense"]) == 2
    assert run(["residual", "--nu", "wat"]) == 2
    assert run(["residual", "--rmax", "1.5"]) == 2
    assert run(["moments", "--param", "oops"]) == 2
    assert run(["gap", "--format", "csv", "--nu", "lebesgue", "--M", "8"]) == 0
    assert run(["residual", "--format", "csv"]) == 2
    assert run(["operator", "--K", "60"]) == 3
    assert run(["enumerate", "--preset", "schottky", "--radius", "5", "--cap", "100"]) == 3
    err = capsys.readouterr().err
    assert "configuration error" in err and "numeric error" in err


def test_output_only_where_asked(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert run(["identities", "--trials", "10", "-o", "r.json"]) == 0
    assert sorted(p.name for p in tmp_path.iterdir()) == ["r.json"]


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "psustat", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for cmd in COMMANDS:
        assert cmd in out.stdout
    out = subprocess.run([sys.executable, "-m", "psustat", "walk", "--help"], capture_output=True, text=True)
    assert "default: 0" in out.stdout and "--max-steps" in out.stdout
