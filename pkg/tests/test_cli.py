import json
import math

import pytest

from theta_kummer.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, (json.loads(out.out) if code == 0 else None), out.err


def write_report(tmp_path, capsys, name, *argv):
    code, rep, err = run(capsys, *argv)
    assert code == 0, err
    path = tmp_path / name
    path.write_text(json.dumps(rep))
    return path, rep


def test_theta_value(capsys):
    code, rep, _ = run(capsys, "theta", "--sample", "1,0,0", "--z", "0")
    assert code == 0
    assert rep["command"] == "theta" and rep["inputs"]["tol"] == 1e-12
    assert rep["outputs"]["tail_bound"] <= 1e-12


def test_theta_from_file(tmp_path, capsys):
    pm = tmp_path / "pm.json"
    pm.write_text(json.dumps({"g": 1, "re": [[0.0]], "im": [[1.0]]}))
    code, rep, _ = run(capsys, "theta", "--pm", str(pm), "--z", "0", "--char", "0")
    assert code == 0
    ref = math.fsum(math.exp(-2 * math.pi * n * n) for n in range(-20, 21))
    assert rep["outputs"]["value"][0] == pytest.approx(ref, abs=1e-12)


@pytest.mark.parametrize(
    "argv",
    [
        ("theta", "--z", "0"),
        ("theta", "--sample", "2,0,0.3", "--z", "0.1"),
        ("theta", "--sample", "2,0,0.3", "--z", "0,0", "--char", "012"),
        ("theta", "--sample", "x", "--z", "0"),
        ("check", "trisecant", "--sample", "2,0,0.3", "--points", "0,0;1,1"),
        ("pipeline", "--sample", "2,0,0.3", "--mode", "scan", "--iters", "0"),
        ("pipeline", "--sample", "3,0,0.3"),
        ("replay", "/nonexistent/report.json"),
    ],
)
def test_input_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2, err


def test_malformed_files(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "theta", "--pm", str(bad), "--z", "0")[0] == 2
    bad.write_text(json.dumps({"g": 2, "re": [[0, 0], [0, 0]], "im": [[1, 0], [0, -1]]}))
    assert run(capsys, "theta", "--pm", str(bad), "--z", "0,0")[0] == 2
    bad.write_text(json.dumps({"command": "theta"}))
    assert run(capsys, "replay", str(bad))[0] == 2


def test_evaluation_error_exit_code(tmp_path, capsys):
    pm = tmp_path / "pm.json"
    pm.write_text(json.dumps({"g": 2, "re": [[0, 0], [0, 0]], "im": [[1, 0], [0, 1.3]]}))
    code, _, err = run(capsys, "pipeline", "--pm", str(pm))
    assert code == 3 and "IndecomposabilityCheckFailed" in err


def test_pipeline_then_checks_then_replay(tmp_path, capsys):
    path, rep = write_report(tmp_path, capsys, "pipe.json", "pipeline", "--sample", "2,1,0.3", "--seed", "4")
    assert rep["outputs"]["status"] == "pass"
    assert max(rep["outputs"]["residuals"].values()) < 1e-7

    for identity in ("gamma00", "upsi"):
        code, chk, _ = run(capsys, "check", identity, "--instance", str(path))
        assert code == 0 and chk["outputs"]["status"] == "pass", chk

    code, again, _ = run(capsys, "replay", str(path))
    assert code == 0 and again["identical"] is True


def test_check_off_divisor_fails_but_exits_zero(capsys):
    code, rep, _ = run(capsys, "check", "divisor-identity", "--sample", "2,0,0.3", "--points", "0.1,0.2")
    assert code == 0 and rep["outputs"]["status"] == "fail"


@pytest.mark.parametrize("identity", ["bilinear", "trisecant", "semidegenerate", "divisor-identity", "gamma00", "upsi"])
def test_every_check_replays(tmp_path, capsys, identity):
    path, rep = write_report(tmp_path, capsys, "r.json", "check", identity, "--sample", "2,3,0.3", "--seed", "2")
    assert rep["outputs"]["identity"]
    code, again, _ = run(capsys, "replay", str(path))
    assert again["identical"] is True


def test_scan_with_start_and_replay(tmp_path, capsys):
    pipe, prep = write_report(tmp_path, capsys, "pipe.json", "pipeline", "--sample", "2,2,0.3")
    path, rep = write_report(tmp_path, capsys, "scan.json", "pipeline", "--sample", "2,2,0.3", "--mode", "scan",
                             "--iters", "12", "--start", str(pipe))
    out = rep["outputs"]
    assert out["iterations"] == 12
    assert out["best_residual"] <= prep["outputs"]["fit"]["rel_residual"]
    assert run(capsys, "replay", str(path))[1]["identical"] is True


def test_replay_detects_tampering(tmp_path, capsys):
    path, rep = write_report(tmp_path, capsys, "t.json", "theta", "--sample", "2,0,0.3", "--z", "0.1,0.2i")
    rep["outputs"]["value"][0] += 1e-15
    path.write_text(json.dumps(rep))
    assert run(capsys, "replay", str(path))[1]["identical"] is False
