import hashlib
import json
from pathlib import Path

import pytest

from sddgalerkin.cli import main
from sddgalerkin.runconfig import ConfigError, csv_text, parse_config

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

SMALL = {
    "model": {"id": "cubic-sin"},
    "domain": {"modes": 8},
    "solver": {"dt": 0.01, "t_end": 2.0},
    "norms": {"q": [8, "inf"], "zeta": [0.75]},
    "initial": {"kind": "constant", "coeffs": [1.0, -0.5, 0.25]},
    "verification": {"mild_tol": 1e-3},
}


def write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg, indent=2))
    return str(p)


def tree(root):
    return {p.name: p.read_bytes() for p in sorted(Path(root).iterdir())}


def test_heat_config_passes(tmp_path):
    out = tmp_path / "heat"
    assert main(["verify", "--config", str(CONFIGS / "heat.json"), "--out", str(out)]) == 0
    rep = json.loads((out / "verification.json").read_text())
    dec = rep["members"]["0"]["checks"]["decay_rate"]
    assert dec["passed"] and abs(dec["eta"] - 1.0) <= 0.01


def test_q_below_q0_rejected(tmp_path, capsys):
    assert main(["simulate", "--config", str(CONFIGS / "bad_q.json"), "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert "bad_q.json:4:" in err and "q > q_0" in err


def test_schema_error_line_anchored(tmp_path, capsys):
    cfg = json.loads(json.dumps(SMALL))
    cfg["solver"]["dt"] = -1
    path = write(tmp_path, cfg)
    assert main(["simulate", "--config", path, "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    line = next(i for i, s in enumerate(Path(path).read_text().splitlines(), 1) if '"dt"' in s)
    assert f"cfg.json:{line}: solver.dt" in err


@pytest.mark.parametrize("mutate", [
    lambda c: c["solver"].update(dt=0.003),
    lambda c: c["domain"].update(grid_points=10),
    lambda c: c["model"].update(id="nope"),
    lambda c: c.update(extra=1),
])
def test_cross_field_checks(tmp_path, mutate):
    cfg = json.loads(json.dumps(SMALL))
    mutate(cfg)
    assert main(["simulate", "--config", write(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 2


def test_malformed_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"model": {"id": "heat"},\n "solver": }')
    with pytest.raises(ConfigError) as exc:
        parse_config(p.read_text(), "bad.json")
    assert exc.value.line == 2


def test_hypothesis_failure_exit(tmp_path):
    cfg = json.loads(json.dumps(SMALL))
    cfg["model"]["id"] = "bad-sign"
    assert main(["simulate", "--config", write(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 3


def test_blowup_exit(tmp_path):
    # huge data on a coarse step: the explicit treatment of -u^3 is unstable and the run overflows
    cfg = json.loads(json.dumps(SMALL))
    cfg["model"] = {"id": "cubic", "params": {"lam": 1.0}}
    cfg["initial"] = {"kind": "constant", "coeffs": [1e4]}
    cfg["solver"] = {"dt": 0.01, "t_end": 1.0}
    assert main(["simulate", "--config", write(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 4


def test_check_failure_exit(tmp_path):
    cfg = json.loads(json.dumps(SMALL))
    cfg["verification"] = {"mild_tol": 1e-12}
    assert main(["verify", "--config", write(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 1


def test_outputs_and_manifest(tmp_path):
    out = tmp_path / "o"
    assert main(["verify", "--config", write(tmp_path, SMALL), "--out", str(out)]) == 0
    files = tree(out)
    assert {"trajectory.csv", "mild.csv", "verification.json", "manifest.json", "config.json"} <= set(files)
    header = files["trajectory.csv"].split(b"\r\n")[0].decode()
    assert header == "t,l2,l8,linf,h1,frac0.75,tau,clamps"
    man = json.loads(files["manifest.json"])
    for name, digest in man["files"].items():
        assert hashlib.sha256(files[name]).hexdigest() == digest
    assert "wall_clock_s" not in man and man["hypotheses"]["passed"]


def test_determinism_and_seed(tmp_path):
    cfg = json.loads(json.dumps(SMALL))
    cfg["initial"] = {"kind": "ball", "R": 3.0, "q": 8, "count": 2}
    path = write(tmp_path, cfg)
    for name in ("a", "b"):
        assert main(["simulate", "--config", path, "--out", str(tmp_path / name), "--seed", "5"]) == 0
    assert main(["simulate", "--config", path, "--out", str(tmp_path / "c"), "--seed", "6"]) == 0
    assert tree(tmp_path / "a") == tree(tmp_path / "b")
    assert tree(tmp_path / "a")["trajectory_000.csv"] != tree(tmp_path / "c")["trajectory_000.csv"]


def test_workers_do_not_change_output(tmp_path):
    cfg = json.loads(json.dumps(SMALL))
    cfg["initial"] = {"kind": "ball", "R": 3.0, "q": 8, "count": 2}
    path = write(tmp_path, cfg)
    assert main(["simulate", "--config", path, "--out", str(tmp_path / "a")]) == 0
    assert main(["simulate", "--config", path, "--out", str(tmp_path / "b"), "--workers", "2"]) == 0
    assert tree(tmp_path / "a") == tree(tmp_path / "b")


def test_timing_is_opt_in(tmp_path):
    out = tmp_path / "t"
    assert main(["simulate", "--config", write(tmp_path, SMALL), "--out", str(out), "--timing"]) == 0
    assert json.loads((out / "manifest.json").read_text())["wall_clock_s"] > 0


def test_manifest_replay(tmp_path):
    out = tmp_path / "first"
    assert main(["simulate", "--config", write(tmp_path, SMALL), "--out", str(out)]) == 0
    replay = tmp_path / "replay"
    assert main(["simulate", "--config", str(out / "config.json"), "--out", str(replay)]) == 0
    man = json.loads((out / "manifest.json").read_text())
    for name, digest in man["files"].items():
        assert hashlib.sha256((replay / name).read_bytes()).hexdigest() == digest


def test_attract_small(tmp_path):
    cfg = {
        "model": {"id": "linear-decay"},
        "domain": {"modes": 6},
        "solver": {"dt": 0.05, "t_end": 1.0},
        "attractor": {"R": 2.0, "q": 4, "count": 4, "times": [1, 3, 6]},
    }
    out = tmp_path / "att"
    assert main(["attract", "--config", write(tmp_path, cfg), "--out", str(out)]) == 0
    files = tree(out)
    assert {"snapshot_00.csv", "snapshot_02.csv", "convergence.csv", "attractor.json"} <= set(files)
    assert files["snapshot_00.csv"].startswith(b"member,theta,mode,coefficient\r\n")


def test_describe(capsys):
    assert main(["describe", "cubic-sin"]) == 0
    text = capsys.readouterr().out
    assert "q_0    = 6" in text and "p_0    = 1" in text and "alpha  = 3" in text
    assert main(["describe", "heat"]) == 0
    text = capsys.readouterr().out
    assert "FAIL" not in text and "vacuous" in text
    assert main(["describe", "bad-sign"]) == 0
    assert "H2    FAIL" in capsys.readouterr().out
    assert main(["describe", "unknown"]) == 2


def test_csv_format():
    text = csv_text(["a", "b"], [[0.1, float("inf")], ["x,y", 3]])
    assert text == 'a,b\r\n0.1,inf\r\n"x,y",3\r\n'
