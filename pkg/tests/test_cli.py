import json
import subprocess
import sys

import pytest

from cayleywalk.cli import run_cli


def _run(args, capsys):
    code = run_cli(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_geodesic_count(capsys):
    assert _run(["geodesic-count", "--cycles", "3"], capsys)[:2] == (0, "3\n")
    assert _run(["geodesic-count", "--perm", "(1 2 3 4)(5 6 7)", "--oracle"], capsys)[:2] == (0, "480\n")


def test_volume(capsys):
    assert _run(["volume", "--n", "4", "--k", "2", "--exact"], capsys)[:2] == (0, "11\n")
    assert _run(["volume", "--n", "4", "--a", "0.5", "--exact"], capsys)[:2] == (0, "18\n")
    code, out, _ = _run(["volume", "--n", "4", "--k", "9"], capsys)
    assert code == 2


def test_speed_curve_is_byte_identical(capsys):
    argv = ["speed-curve", "--n", "2000", "--c", "0.8", "--reps", "100", "--seed", "7"]
    _, a, _ = _run(argv, capsys)
    _, b, _ = _run(argv, capsys)
    _, c, _ = _run(argv + ["--jobs", "2"], capsys)
    assert a == b == c
    assert a.startswith("# experiment: speed_curve")


def test_usage_errors(capsys):
    assert _run(["thm8", "--bogus"], capsys)[0] == 2
    assert _run([], capsys)[0] == 2
    assert _run(["fig2", "--a", "0.7"], capsys)[0] == 2
    assert _run(["speed-curve", "--jobs", "0", "--seed", "1"], capsys)[0] == 2
    assert _run(["hitting-sample", "--n", "100", "--a", "0.99", "--seed", "1"], capsys)[0] == 2


def test_check_exit_code(capsys, tmp_path):
    base = ["speed-curve", "--n", "300", "--c", "1.5", "--reps", "5", "--seed", "3", "--check"]
    assert _run(base, capsys)[0] == 0
    code, _, err = _run(base + ["--tol", "speed=0"], capsys)
    assert code == 1 and "FAIL" in err


def test_config_file_and_override(capsys, tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[defaults]\nreps = 4\n[speed-curve]\nn = 200\nc = 0.5, 1.0\n")
    out = tmp_path / "out.json"
    code, _, _ = _run(["speed-curve", "--config", str(cfg), "--seed", "5", "--format", "json",
                       "--out", str(out), "--reps", "6"], capsys)
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["params"]["n"] == 200 and doc["params"]["reps"] == 6
    assert doc["params"]["c_grid"] == [0.5, 1.0]
    bad = tmp_path / "bad.ini"
    bad.write_text("[speed-curve]\nwidth = 3\n")
    assert _run(["speed-curve", "--config", str(bad), "--seed", "1"], capsys)[0] == 2


def test_random_seed_is_printed(capsys):
    code, out, err = _run(["walk-trace", "--n", "5", "--steps", "3"], capsys)
    assert code == 0 and err.startswith("seed=")
    seed = int(err.strip().split("=")[1])
    assert f"# seed: {seed}" in out


def test_samplers_emit_cycle_notation(capsys):
    code, out, _ = _run(["sphere-sample", "--n", "8", "--k", "3", "--count", "4", "--seed", "1"], capsys)
    from cayleywalk import Permutation
    lines = [ln for ln in out.splitlines() if ln and not ln.startswith("#")]
    assert lines[0].split(",")[-1] == "permutation"
    for ln in lines[1:5]:
        p = Permutation.parse(ln.split(",")[-1])
        assert p.n == 8 and p.cycle_count() == 5
    code, out, _ = _run(["hitting-sample", "--n", "50", "--a", "0.2", "--no-frag", "--count", "2",
                         "--seed", "1", "--format", "json"], capsys)
    doc = json.loads(out)
    assert [r["fragmentations"] for r in doc["rows"]] == [0, 0]


def test_console_script_entry():
    proc = subprocess.run([sys.executable, "-m", "cayleywalk.cli", "volume", "--n", "5", "--k", "4", "--exact"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout == "24\n"
