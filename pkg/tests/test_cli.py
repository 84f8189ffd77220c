import csv
import io
import json
import math
import subprocess
import sys

import pytest

from sapd import ValidationError, parse_scenario, solve
from sapd.cli import main
from sapd.io import dump_report, load_report

from conftest import INTERMEDIATE_VALUE, SCENARIOS

GOOD = """\
bandwidth: 1.0
users:
  - power: 2.0
    noise: 0.5
  - power: 1.0
    noise: 0.5
gain: [[1.0, 0.2], [0.3, 1.0]]
"""


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_parse_scenario_defaults():
    sf = parse_scenario(GOOD)
    assert sf.scenario.power == (2.0, 1.0)
    assert sf.scenario.weights == (1.0, 1.0)
    assert sf.objective.kind == "sum" and sf.objective.base == 2.0


def test_parse_accepts_exponent_without_dot():
    sf = parse_scenario(GOOD + "solver:\n  tol: 1e-9\n")
    assert sf.solver["tol"] == 1e-9


@pytest.mark.parametrize("text, field, line", [
    (GOOD.replace("noise: 0.5\n  - power: 1.0", "noise: -0.5\n  - power: 1.0"),
     "users[0].noise", 4),
    (GOOD + "colour: red\n", "colour", 8),
    (GOOD.replace("    noise: 0.5\n", "", 1), "users[0].noise", 3),
    (GOOD.replace("[0.3, 1.0]", "[0.3, abc]"), "gain[1][1]", 7),
    (GOOD.replace("bandwidth: 1.0", "bandwidth: 0"), "bandwidth", 1),
    (GOOD + "objective:\n  kind: max\n", "objective.kind", 9),
    (GOOD + "oracle:\n  levels: 2.5\n", "oracle.levels", 9),
])
def test_parse_errors_name_field_and_line(text, field, line):
    with pytest.raises(ValidationError) as err:
        parse_scenario(text)
    assert err.value.field == field
    assert err.value.line == line
    assert field in str(err.value)


def test_parse_rejects_malformed_yaml():
    with pytest.raises(ValidationError) as err:
        parse_scenario("bandwidth: [1,\nusers: 2\n")
    assert err.value.line is not None


def test_parse_gain_bands():
    text = GOOD + ("gain_bands:\n"
                   "  - {start: 0, end: 0.5, gain: [[1, 0.1], [0.1, 1]]}\n"
                   "  - {start: 0.5, end: 1.0, gain: [[2, 0.1], [0.1, 1]]}\n")
    sf = parse_scenario(text)
    assert not sf.scenario.is_flat
    with pytest.raises(ValidationError) as err:
        parse_scenario(text.replace("end: 1.0", "end: 0.9"))
    assert err.value.field == "gain_bands"


def test_solve_command_report(tmp_path, capsys):
    out = tmp_path / "r.json"
    code, _, _ = run(["solve", str(SCENARIOS / "intermediate.yaml"), "--out", str(out)], capsys)
    assert code == 0
    rep = json.loads(out.read_text())
    assert rep["tool"]["name"] == "sapd"
    assert rep["best"]["form"] == "partial"
    assert rep["best"]["value"] == pytest.approx(INTERMEDIATE_VALUE, rel=1e-9)
    assert rep["objective"] == {"kind": "sum", "log_base": "2"}
    assert set(rep["best"]["variables"]) == {"S1", "S2", "S12", "sigma1", "sigma2", "c1", "c2"}
    for cand in rep["candidates"]:
        assert ("residuals" in cand) == (cand["form"] == "partial")


def test_report_is_deterministic_and_lossless(tmp_path, capsys):
    path = str(SCENARIOS / "intermediate.yaml")
    _, first, _ = run(["solve", path], capsys)
    _, second, _ = run(["solve", path], capsys)
    assert first == second
    rep = load_report(first)
    direct = solve(parse_scenario(open(path).read()).scenario)
    assert rep["best"]["value"] == direct.value  # exact float round trip
    assert dump_report(rep) == first


def test_report_writes_nan_as_null():
    assert json.loads(dump_report({"x": float("nan"), "y": [1.5]})) == {"x": None, "y": [1.5]}


def test_solve_no_coupling_is_full_share(capsys):
    code, out, _ = run(["solve", str(SCENARIOS / "no_coupling.yaml")], capsys)
    assert code == 0
    assert json.loads(out)["best"]["form"] == "full_share"


def test_solve_strong_coupling_symmetric(capsys):
    code, out, _ = run(["solve", str(SCENARIOS / "strong_coupling.yaml")], capsys)
    rep = json.loads(out)
    assert rep["best"]["form"] == "fdma"
    assert rep["best"]["split"] == 0.5
    d = rep["best"]["densities"]
    assert d[0] == d[1]


def test_validation_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text(GOOD.replace("noise: 0.5\n  - power", "noise: -1\n  - power"))
    code, out, err = run(["solve", str(bad)], capsys)
    assert code == 2
    assert out == ""
    assert "users[0].noise" in err and "line 4" in err


def test_missing_file_exit_code(tmp_path, capsys):
    code, _, err = run(["solve", str(tmp_path / "nope.yaml")], capsys)
    assert code == 2 and "cannot read" in err


def test_unsupported_exit_code(capsys):
    code, _, err = run(["solve", str(SCENARIOS / "two_band.yaml")], capsys)
    assert code == 3 and "oracle" in err


def test_oracle_command(capsys):
    code, out, _ = run(["oracle", str(SCENARIOS / "two_band.yaml")], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["grid"]["channels"] == 8
    assert rep["max_power"]["ok"]
    assert rep["structure"] is None


def test_oracle_single_channel_matches_full_share(capsys):
    path = str(SCENARIOS / "intermediate.yaml")
    _, out, _ = run(["oracle", path, "--channels", "1", "--levels", "4"], capsys)
    value = json.loads(out)["value"]
    full = next(c for c in solve(parse_scenario(open(path).read()).scenario).candidates
                if c.form == "full_share")
    assert value == pytest.approx(full.value, rel=1e-13)


def test_oracle_within_slack_of_solve(capsys):
    path = str(SCENARIOS / "intermediate.yaml")
    _, out, _ = run(["oracle", path], capsys)
    rep = json.loads(out)
    assert rep["grid"] == {"channels": 8, "levels": 24, "method": "dp",
                           "search_space": math.comb(32, 8) ** 2}
    assert rep["value"] <= INTERMEDIATE_VALUE
    assert rep["value"] >= 0.99 * INTERMEDIATE_VALUE
    assert rep["structure"]["passed"]


def test_oracle_budget_exit_code(capsys):
    code, out, err = run(["oracle", str(SCENARIOS / "intermediate.yaml"),
                          "--channels", "64", "--levels", "64"], capsys)
    assert code == 4 and out == ""
    assert "budget" in err and "allocation pairs" in err


def test_bad_flag_value(capsys):
    code, _, err = run(["oracle", str(SCENARIOS / "intermediate.yaml"), "--channels", "0"],
                       capsys)
    assert code == 2


def test_sweep_command(capsys):
    code, out, _ = run(["sweep", str(SCENARIOS / "intermediate.yaml"), "--samples", "40"],
                       capsys)
    assert code == 0
    assert out.splitlines()[0] == "sigma2,branch,sigma1,B,feasible"
    assert out.endswith("\n")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert {r["feasible"] for r in rows} == {"true", "false"}
    for r in rows:
        if r["feasible"] == "false":
            assert r["B"] == "nan"
        else:
            assert float(r["B"]) <= INTERMEDIATE_VALUE * (1 + 1e-9)
    sig = sorted({float(r["sigma2"]) for r in rows})
    assert len(sig) == 40


def test_log_base_flag(capsys):
    path = str(SCENARIOS / "intermediate.yaml")
    _, out, _ = run(["solve", path, "--log-base", "e"], capsys)
    rep = json.loads(out)
    assert rep["objective"]["log_base"] == "e"
    assert rep["best"]["value"] == pytest.approx(INTERMEDIATE_VALUE * math.log(2), rel=1e-9)


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "sapd.cli", "--version"], capture_output=True,
                         text=True)
    assert out.returncode == 0
    assert out.stdout.strip() == "0.1.0"
