import csv
import io
import json
import subprocess
import sys
from importlib import resources

import jsonschema
import pytest

from gtdkit.cli import main

SCHEMA = json.loads(resources.files("gtdkit").joinpath("schemas/output.schema.json").read_text())


def run(argv):
    out = io.StringIO()
    code = main(argv, out=out)
    return code, out.getvalue()


def run_json(argv):
    code, text = run(argv)
    payload = json.loads(text)
    jsonschema.validate(payload, SCHEMA)
    return code, payload


def test_systems_list():
    code, payload = run_json(["systems", "list"])
    assert code == 0
    names = {s["name"]: s for s in payload["systems"]}
    assert names["ideal_gas"]["potential"] == "S"
    assert names["ideal_gas"]["class"] == "fundamental"


def test_systems_list_csv():
    code, text = run(["systems", "list", "--format", "csv"])
    rows = list(csv.reader(io.StringIO(text)))
    assert code == 0 and rows[0] == ["name", "potential", "variables", "class"]
    assert text.endswith("\r\n")


def test_metric_eval():
    code, payload = run_json(["metric", "eval", "--system", "ideal_gas", "--kind", "II", "--at", "U=1,V=1"])
    assert code == 0
    assert payload["metric"] == [[3.75, 0.0], [0.0, -2.5]]


def test_metric_eval_unknown_system(capsys):
    code, _ = run(["metric", "eval", "--system", "nope", "--kind", "II", "--at", "U=1,V=1"])
    assert code == 2
    assert "unknown system" in capsys.readouterr().err


def test_metric_eval_domain_violation(capsys):
    code, _ = run(["metric", "eval", "--system", "van_der_waals", "--kind", "I", "--at", "U=1,V=0.5"])
    assert code == 2
    assert "V-1 > 0" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["metric", "eval", "--kind", "II"],
        ["metric", "eval", "--system", "ideal_gas", "--kind", "III", "--at", "1,1"],
        ["metric", "eval", "--system", "ideal_gas", "--kind", "I", "--at", "U=1"],
        ["curvature", "scan", "--system", "ideal_gas", "--kind", "I", "--grid", "U=0.5:2:1", "--grid", "V=0.5:2:3"],
        ["legendre", "check", "--kind", "I", "--tol", "-1"],
    ],
)
def test_usage_errors(argv):
    assert run(argv)[0] == 1


def test_curvature_scan_ideal_gas_flat():
    argv = ["curvature", "scan", "--system", "ideal_gas", "--kind", "II", "--grid", "U=0.5:2:20", "--grid", "V=0.5:2:20", "--tol", "1e-8"]
    code, text = run(argv)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(text)))
    assert list(rows[0]) == ["U", "V", "R", "K", "det", "flags", "error"]
    assert len(rows) == 400
    assert max(abs(float(r["R"])) for r in rows) <= 1e-8


def test_curvature_scan_tolerance_failure(capsys):
    argv = ["curvature", "scan", "--system", "van_der_waals", "--kind", "II", "--grid", "U=1:2:3", "--grid", "V=2:3:3", "--tol", "1e-8"]
    code, _ = run(argv)
    assert code == 3
    assert "U" in capsys.readouterr().err


def test_curvature_scan_json():
    argv = ["curvature", "scan", "--system", "ideal_gas", "--kind", "I", "--grid", "U=0.5:2:3", "--grid", "V=0.5:2:3", "--format", "json"]
    code, payload = run_json(argv)
    assert code == 0 and len(payload["points"]) == 9


def test_legendre_check_partial_kind_three():
    code, payload = run_json(["legendre", "check", "--kind", "III", "--k", "0", "--spec", "1", "--points", "100", "--seed", "7"])
    assert code == 0
    assert payload["asserted"] and payload["seed"] == 7
    assert payload["max_residual"] <= 1e-10


def test_legendre_check_informational():
    code, payload = run_json(["legendre", "check", "--kind", "I", "--spec", "1"])
    assert code == 0
    assert payload["asserted"] is False
    assert payload["max_residual"] > 1e-3


def test_legendre_check_total():
    code, payload = run_json(["legendre", "check", "--kind", "II", "--spec", "total", "--seed", "3"])
    assert code == 0 and payload["asserted"]


def test_gtd3_check():
    code, payload = run_json(["gtd3", "check", "--k", "0", "--variant", "corrected"])
    assert code == 0
    assert payload["deformed_contacto"]["max_residual"] <= 1e-10
    assert payload["control_flatness"]["flat"]
    assert payload["witness"]["defect"] == 0.0


def test_gtd3_check_printed_variant_is_informational():
    code, payload = run_json(["gtd3", "check", "--k", "1", "--n", "1", "--variant", "paper"])
    assert code == 0
    assert payload["deformed_contacto"]["asserted"] is False
    assert payload["deformed_contacto"]["max_residual"] > 0.1


def test_gtd3_check_log_branch():
    code, payload = run_json(["gtd3", "check", "--k", "-1", "--n", "1"])
    assert code == 0 and payload["deformed_contacto"]["max_residual"] is None


def test_hessian_obstructions():
    argv = ["hessian", "obstructions", "--system", "multicomponent_ideal_gas_energy", "--potential-metric", "weinhold", "--at", "1,1,1,1"]
    code, payload = run_json(argv)
    assert code == 0 and payload["dim"] == 4 and payload["p1_relative"] <= 1e-6


def test_weinhold_requires_energy_representation():
    argv = ["hessian", "obstructions", "--system", "multicomponent_ideal_gas", "--potential-metric", "weinhold"]
    assert run(argv)[0] == 2


def test_fluctuation_check():
    code, payload = run_json(["fluctuation", "check", "--system", "van_der_waals", "--at", "U=2,V=3"])
    assert code == 0 and payload["slope"] >= 2.9


def test_fluctuation_tolerance_failure():
    argv = ["fluctuation", "check", "--system", "ideal_gas", "--at", "1,1", "--min-slope", "5"]
    assert run(argv)[0] == 3


@pytest.mark.parametrize(
    "argv",
    [
        ["legendre", "check", "--kind", "III", "--k", "1", "--spec", "2", "--seed", "11", "--points", "20"],
        ["gtd3", "check", "--k", "2", "--n", "1", "--seed", "5"],
        ["curvature", "scan", "--system", "van_der_waals", "--kind", "III", "--k", "0", "--grid", "U=1:3:4", "--grid", "V=1.1:4:4"],
    ],
)
def test_byte_identical_output(argv):
    assert run(argv) == run(argv)


def test_catalog_dir_override(tmp_path, monkeypatch):
    (tmp_path / "toy.toml").write_text('name = "toy"\npotential = "S"\nvariables = ["U"]\nequation = "ln(U)"\n')
    monkeypatch.setenv("GTD_CATALOG_DIR", str(tmp_path))
    _, payload = run_json(["systems", "list"])
    assert [s["name"] for s in payload["systems"]] == ["toy"]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "gtdkit", "systems", "list"], capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["command"] == "systems list"
