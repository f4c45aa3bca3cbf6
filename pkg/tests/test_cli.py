import csv
import json
import math
from pathlib import Path

import jsonschema
import numpy as np
import pytest

from formlab.cli import main
from formlab.fieldio import read_field
from formlab.report import REPORT_SCHEMA, dumps, to_jsonable, validate_report

SCENARIOS = Path(__file__).resolve().parents[1] / "scripts" / "scenarios"

ZERO = """
[grid]
dim = 2
points = 16

[analysis.decompose]
[analysis.norms]
kind = "trace"
[analysis.formbound]
[analysis.accretivity]
[analysis.commutator]
[analysis.subordination]
mode = "trudinger"
[analysis.magnetic]
"""


def write(tmp_path, text, name="s.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def load(path):
    return json.loads(Path(path).read_text())


def test_zero_scenario_all_analyses(tmp_path):
    out = tmp_path / "out"
    assert main(["run", str(write(tmp_path, ZERO)), "--out", str(out)]) == 0
    assert load(out / "formbound.json")["result"]["constant"] == 0.0
    assert load(out / "commutator.json")["result"]["constant"] == 0.0
    assert load(out / "norms.json")["result"]["value"] == 0.0
    acc = load(out / "accretivity.json")["result"]
    assert acc["verdict"] == "accretive" and acc["min_rayleigh"] >= 0.0
    for f in out.glob("*.json"):
        validate_report(load(f))


def test_shipped_zero_scenario(tmp_path):
    assert main(["formbound", str(SCENARIOS / "zero.toml"), "--out", str(tmp_path / "o")]) == 0


@pytest.mark.parametrize("text", [
    ZERO.replace("[analysis.formbound]", "[fields.b]\nfamily = \"no_such_family\"\n[analysis.formbound]\nb = \"b\""),
    ZERO.replace("[analysis.commutator]", "[analysis.commutator]\nd = { family = \"gradient_of\" }"),
    ZERO.replace("points = 16", "points = 16\nlevels = [16, 64]"),
    ZERO.replace("[analysis.magnetic]", "[analysis.magnetic]\nbogus = 1"),
    "[grid]\ndim = 4\npoints = 16\n[analysis.norms]\n",
    "not toml [",
])
def test_invalid_scenario_exits_2_and_writes_nothing(tmp_path, text):
    out = tmp_path / "out"
    assert main(["run", str(write(tmp_path, text)), "--out", str(out)]) == 2
    assert not out.exists()


def test_shipped_bad_family(tmp_path):
    out = tmp_path / "out"
    assert main(["formbound", str(SCENARIOS / "bad_family.toml"), "--out", str(out)]) == 2
    assert not out.exists()


def test_bad_override_exits_2(tmp_path):
    assert main(["norms", str(write(tmp_path, ZERO)), "--grid", "3by16", "--out", str(tmp_path / "o")]) == 2


def test_solver_cap_exit_3_keeps_reports(tmp_path):
    text = ("max_matvecs = 3\n[grid]\ndim = 2\npoints = 32\n"
            "[analysis.formbound]\nc = { family = \"random_band_limited\", seed = 1 }\n")
    out = tmp_path / "out"
    assert main(["formbound", str(write(tmp_path, text)), "--out", str(out)]) == 3
    rep = load(out / "formbound.json")
    assert rep["status"] == "solver_cap"


def test_byte_identical_reports(tmp_path):
    text = ZERO.replace("[analysis.formbound]", "[analysis.formbound]\nc = { family = \"random_band_limited\", seed = 3 }")
    p = write(tmp_path, text)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", str(p), "--out", str(a)]) == 0
    assert main(["run", str(p), "--out", str(b)]) == 0
    names = sorted(x.name for x in a.iterdir())
    assert names == sorted(x.name for x in b.iterdir())
    for n in names:
        assert (a / n).read_bytes() == (b / n).read_bytes(), n


def test_sweep_trace_csv_one_row_per_level(tmp_path):
    text = "[grid]\ndim = 1\npoints = 32\n[analysis.norms]\nkind = \"trace\"\nfield = { family = \"gaussian\", width = 0.05 }\n"
    out = tmp_path / "out"
    assert main(["sweep", str(write(tmp_path, text)), "--analysis", "norms", "--levels", "32,64,128", "--out", str(out)]) == 0
    rows = list(csv.reader((out / "norms_trace.csv").open()))
    assert rows[0] == ["points_per_axis", "value"]
    assert [int(r[0]) for r in rows[1:]] == [32, 64, 128]
    vals = [float(r[1]) for r in rows[1:]]
    assert all(v > 0 for v in vals)
    assert load(out / "norms.json")["refinement_trace"] == [[n, v] for n, v in zip([32, 64, 128], vals)]


def test_sweep_requires_levels(tmp_path):
    assert main(["sweep", str(write(tmp_path, ZERO)), "--analysis", "norms", "--out", str(tmp_path / "o")]) == 2


def test_csv_result_format(tmp_path):
    out = tmp_path / "out"
    assert main(["formbound", str(write(tmp_path, ZERO)), "--out", str(out), "--format", "csv"]) == 0
    rows = dict(list(csv.reader((out / "formbound.csv").open()))[1:])
    assert rows["analysis"] == '"formbound"'
    assert float(rows["result.constant"]) == 0.0


def test_witness_sidecars(tmp_path):
    text = "[grid]\ndim = 1\npoints = 64\n[analysis.riccati1d]\nc = { family = \"constant\", value = 5.0 }\n"
    out = tmp_path / "out"
    assert main(["riccati1d", str(write(tmp_path, text)), "--out", str(out)]) == 0
    rep = load(out / "riccati1d.json")
    assert rep["status"] == "ok" and rep["result"]["valid"] is True
    f = read_field(out / rep["witnesses"]["f"])
    assert f.grid.points_per_axis == 64


def test_refused_construction_is_data(tmp_path):
    text = "[grid]\ndim = 1\npoints = 64\n[analysis.riccati1d]\nc = { family = \"constant\", value = 50.0 }\n"
    out = tmp_path / "out"
    assert main(["riccati1d", str(write(tmp_path, text)), "--out", str(out)]) == 0
    rep = load(out / "riccati1d.json")
    assert rep["status"] == "refused" and rep["result"]["valid"] is False
    assert "negative_direction" in rep["witnesses"]


def test_check_certificate_round_trip(tmp_path):
    make = "[grid]\ndim = 2\npoints = 16\n[analysis.riccatind]\nsigma = { family = \"constant\", value = 10.0 }\n"
    out = tmp_path / "out"
    assert main(["riccatind", str(write(tmp_path, make)), "--out", str(out)]) == 0
    g = out / load(out / "riccatind.json")["witnesses"]["g"]
    check = make.replace("riccatind", "check-certificate") + f'g = {{ family = "file", path = "{g}" }}\n'
    assert main(["check-certificate", str(write(tmp_path, check, "c.toml")), "--out", str(out)]) == 0
    res = load(out / "check_certificate.json")["result"]
    assert res["valid"] is True and res["form_min"] >= -1e-6


def test_factor_multiplies_family(tmp_path):
    text = ("[grid]\ndim = 1\npoints = 32\n[fields.q]\nfamily = \"constant\"\nvalue = 1.0\nfactor = [0.0, 2.0]\n"
            "[analysis.formbound]\nc = \"q\"\n")
    out = tmp_path / "out"
    assert main(["formbound", str(write(tmp_path, text)), "--out", str(out)]) == 0
    assert load(out / "formbound.json")["inputs"]["c"]["factor"] == [0.0, 2.0]


def test_to_jsonable_and_schema():
    rep = {"schema_version": 1, "analysis": "norms", "status": "ok",
           "grid": {"dim": 1, "points_per_axis": 16, "side_length": [1.0], "inner_support_fraction": 0.5},
           "result": {"z": 1 + 2j, "x": np.float64(math.inf), "n": np.int64(3), "a": np.arange(2), "m": math.nan},
           "refinement_trace": [(16, math.inf)]}
    j = to_jsonable(rep)
    assert j["result"] == {"z": {"re": 1.0, "im": 2.0}, "x": "inf", "n": 3, "a": [0, 1], "m": "nan"}
    jsonschema.validate(j, REPORT_SCHEMA)
    assert json.loads(dumps(rep))["result"]["z"]["im"] == 2.0
    with pytest.raises(jsonschema.ValidationError):
        validate_report(dict(rep, status="weird"))
    with pytest.raises(TypeError):
        to_jsonable({"x": object()})


def test_floats_at_17_digits_and_sorted_keys():
    s = dumps({"b": 0.1, "a": 1 / 3})
    assert s.index('"a"') < s.index('"b"')
    assert "0.33333333333333331" in s and "0.10000000000000001" in s


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="the discrete 3D threshold on the grid-scale regularized profile sits near 0.38, far above 1/4")
def test_hardy_verdicts_differ_across_quarter(tmp_path):
    verdicts = {}
    for gamma in (0.2, 0.3):
        text = f"[grid]\ndim = 3\npoints = 32\n[analysis.riccatind]\nsigma = {{ family = \"hardy\", gamma = {gamma} }}\n"
        out = tmp_path / str(gamma)
        assert main(["riccatind", str(write(tmp_path, text, f"h{gamma}.toml")), "--out", str(out)]) == 0
        verdicts[gamma] = load(out / "riccatind.json")["result"]["form_verdict"]
    assert verdicts[0.2] != verdicts[0.3]
