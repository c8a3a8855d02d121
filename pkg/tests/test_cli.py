import json
import pathlib
import subprocess
import sys

import pytest

from emitarray.circuit import parse_circuit
from emitarray.cli import main
from emitarray.dem import DetectorErrorModel

DATA = pathlib.Path(__file__).parent / "data"


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_verify_s1_l4(capsys):
    code, out, _ = run(["verify", "--protocol", "S1", "--L", "4"], capsys)
    assert code == 0
    assert out.splitlines()[-1] == "S1 L=4 n_e=1 checked=49 ok"


def test_compile_emits_parseable_circuit(capsys):
    code, out, _ = run(["compile", "--protocol", "M2", "--L", "4", "--ne", "2", "--p", "0.001"], capsys)
    assert code == 0
    c = parse_circuit(out)
    assert c.count("DEPOL2") > 0 and c.num_detectors == 16


def test_dem_output(capsys):
    code, out, _ = run(["dem", "--protocol", "S2", "--L", "4", "--p", "0.001"], capsys)
    assert code == 0
    assert DetectorErrorModel.from_text(out).num_detectors == 16


def test_zero_shots_is_an_error(capsys):
    code, out, err = run(["sample", "--protocol", "S1", "--L", "4", "--shots", "0"], capsys)
    assert code != 0 and out == ""
    assert err.startswith("error:") and err.count("\n") == 1


def test_invalid_config_file(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"protocol": "S1", "L": [5]}))
    code, _, err = run(["sample", "--config", str(cfg)], capsys)
    assert code != 0 and err.count("\n") == 1


def test_sample_is_byte_identical_across_workers(tmp_path, capsys):
    args = ["sample", "--protocol", "S1", "--L", "4,6", "--p", "0.002,0.004", "--shots", "2000", "--seed", "5"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--workers", "1", "--out", str(a)]) == 0
    assert main(args + ["--workers", "2", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    header = a.read_text().splitlines()[:3]
    assert header[1].startswith("# config_hash") and "seed 5" in header[1]


def test_config_file_and_overrides(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"protocol": "S2", "L": [4], "p": [0.003], "shots": 1000}))
    code, out, _ = run(["sample", "--config", str(cfg), "--seed", "9"], capsys)
    assert code == 0
    lines = [l for l in out.splitlines() if not l.startswith("#")]
    assert len(lines) == 2 and lines[1].startswith("S2,4,2,")


def test_threshold_on_s2_fixture(capsys):
    code, out, _ = run(["threshold", "--input", str(DATA / "s2_sweep.csv")], capsys)
    assert code == 0
    mu = json.loads(out)["fit"]["params"]["mu"]
    assert mu == pytest.approx(0.0039, abs=5e-4)


def test_scaling_and_tables(tmp_path, capsys):
    points = [{"eta": e, "pstar": p} for e, p in ((1e-4, 2e-3), (2e-4, 5e-3), (4e-4, 1.2e-2))]
    src = tmp_path / "points.json"
    src.write_text(json.dumps({"points": points}))
    fit_file = tmp_path / "fit.json"
    code = main(["scaling", "--protocol", "M1", "--ne", "2", "--input", str(src), "--out", str(fit_file)])
    assert code == 0
    fit = json.loads(fit_file.read_text())["fit"]
    assert fit["form"] == "sqrt" and fit["factor"] == 2
    code, out, _ = run(["tables", "--fits", str(fit_file), "--targets", "1e-3,1e-5"], capsys)
    assert code == 0
    assert "M1 n_e=2" in out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "emitarray", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip()
