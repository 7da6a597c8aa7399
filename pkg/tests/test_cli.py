from __future__ import annotations

import io
import json
import math
import subprocess
import sys

import jsonschema
import numpy as np
import pytest

from cmsfreeze import __version__
from cmsfreeze.cli import RunManifest, load_schema, main


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


def test_solve_from_origin_csv():
    code, text = run("solve", "--system", "A", "--n", "2", "--x0", "0,0", "--t", "0.5")
    assert code == 0
    assert text == "t,x1,x2\n0.5,0.70710678118654746,-0.70710678118654757\n"


def test_solve_csv_round_trips_floats():
    code, text = run("solve", "--system", "B", "--n", "3", "--nu", "1.5", "--x0", "3,2,0.5", "--t", "0,0.3,7")
    assert code == 0
    rows = [line.split(",") for line in text.strip().splitlines()[1:]]
    assert rows[0] == ["0", "3", "2", "0.5"]
    for row in rows:
        for cell in row:
            assert float(repr(float(cell))) == float(cell)
            assert len(cell.replace("-", "").replace(".", "").lstrip("0")) <= 17


def test_solve_empty_times():
    for method in ("sym", "rk", "hybrid"):
        code, text = run("solve", "--n", "2", "--x0", "1,-1", "--t", "", "--method", method)
        assert code == 0 and text == "t,x1,x2\n"


def test_solve_methods_agree():
    outs = []
    for method in ("sym", "rk", "hybrid"):
        code, text = run("solve", "--n", "3", "--x0", "2,0.5,-1", "--t", "0.1,1", "--method", method,
                         "--format", "json")
        assert code == 0
        outs.append(np.array(json.loads(text)["positions"]))
    np.testing.assert_allclose(outs[1], outs[0], atol=1e-6)
    np.testing.assert_allclose(outs[2], outs[0], atol=1e-6)


def test_solve_json_matches_schema_and_manifest_round_trips():
    code, text = run("solve", "--system", "D", "--n", "3", "--x0", "2,1,-0.5", "--t", "0,1", "--format", "json")
    assert code == 0
    doc = json.loads(text)
    jsonschema.validate(doc, load_schema())
    m = RunManifest.from_dict(doc["manifest"])
    assert m.to_dict() == doc["manifest"]
    assert m.system == "D" and m.x0 == [2.0, 1.0, -0.5] and m.version == __version__
    assert doc["positions"][1][2] < 0  # D keeps the sign of x_N


def test_schema_rejects_extra_fields():
    code, text = run("solve", "--n", "2", "--x0", "1,-1", "--t", "1", "--format", "json", "--method", "rk")
    doc = json.loads(text)
    jsonschema.validate(doc, load_schema())
    doc["extra"] = 1
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate(doc, load_schema())


def test_sorted_flag():
    code, _ = run("solve", "--n", "3", "--x0=-1,2,0", "--t", "1")
    assert code == 2
    code, text = run("solve", "--n", "3", "--x0=-1,2,0", "--t", "0", "--sorted")
    assert code == 0 and text.splitlines()[1] == "0,2,0,-1"
    code, text = run("solve", "--system", "D", "--n", "3", "--x0=-1,2,0.5", "--t", "0", "--sorted")
    assert text.splitlines()[1] == "0,2,1,-0.5"


def test_exit_codes():
    assert run("solve", "--system", "B", "--n", "2", "--nu", "0", "--x0", "1,0", "--t", "1")[0] == 2
    assert run("solve", "--n", "2", "--x0", "1,2", "--t", "1")[0] == 2
    assert run("solve", "--n", "2", "--x0", "1,2,3", "--t", "1")[0] == 1
    assert run("solve", "--n", "2", "--x0", "1,x", "--t", "1")[0] == 1
    assert run("solve", "--n", "2", "--x0", "1,-1", "--t", "1,0.5")[0] == 2
    assert run("frobnicate")[0] == 1
    assert run("solve", "--n", "2")[0] == 1


def test_zeros():
    code, text = run("zeros", "hermite", "3")
    assert code == 0
    assert text.split() == ["1.2247448713915889", "0", "-1.2247448713915889"]
    code, text = run("zeros", "laguerre", "1", "--alpha", "2.5")
    assert text == "3.5\n"
    code, text = run("zeros", "laguerre", "3", "--alpha", "-1", "--residual")
    assert code == 0 and text.splitlines()[2] == "0"
    assert text.splitlines()[-1].startswith("residual=")
    assert run("zeros", "hermite", "0")[0] == 1
    assert run("zeros", "laguerre", "3", "--alpha", "-2")[0] == 1
    assert run("zeros", "laguerre", "3")[0] == 1


def test_verify_suites():
    code, text = run("verify", "growth", "--system", "B", "--n", "3", "--trials", "3", "--seed", "1")
    assert code == 0
    doc = json.loads(text)
    assert doc["passed"] and doc["seed"] == 1 and doc["suites"][0]["name"] == "growth"
    code, text = run("verify", "backward", "--x0", "1,-1", "--trials", "2")
    assert code == 0 and "t0 = -1.0000000000" in json.loads(text)["suites"][0]["detail"]
    code, text = run("verify", "leading", "--n", "5")
    assert code == 0


def test_sde_determinism(monkeypatch):
    argv = ["sde", "--n", "2", "--x0", "1,-1", "--betas", "10,inf", "--paths", "20", "--dt", "1e-3",
            "--t-end", "0.2"]
    code, a = run(*argv, "--seed", "7")
    assert code == 0
    assert run(*argv, "--seed", "7")[1] == a
    monkeypatch.setenv("CMS_SEED", "7")
    assert run(*argv)[1] == a
    monkeypatch.setenv("CMS_SEED", "8")
    assert run(*argv)[1] != a
    lines = a.strip().splitlines()
    assert lines[0] == "beta,mean_dev,std_err,reflect_rate"
    assert lines[2].startswith("inf,")
    monkeypatch.setenv("CMS_SEED", "seven")
    assert run(*argv)[0] == 1


def test_sde_usage_errors():
    base = ["sde", "--n", "2", "--x0", "1,-1", "--paths", "2", "--t-end", "0.01", "--dt", "1e-3"]
    assert run(*base, "--betas", "0")[0] == 1
    assert run(*base, "--betas", "")[0] == 1
    assert run(*base, "--betas", "5", "--paths", "0")[0] == 1


def test_version_and_module_entry_point():
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    proc = subprocess.run([sys.executable, "-m", "cmsfreeze", "zeros", "hermite", "2"],
                          capture_output=True, text=True, check=True)
    vals = [float(v) for v in proc.stdout.split()]
    assert vals == [math.sqrt(0.5), -math.sqrt(0.5)]
