import csv
import io
import json

import pytest
from click.testing import CliRunner

from torisplit.cli import cli


@pytest.fixture
def runner():
    return CliRunner()


def test_analyze_cubic_table(runner):
    r = runner.invoke(cli, ["analyze", "cubic-golden"])
    assert r.exit_code == 0
    out = r.output
    for row in ["0.3459   0.4867   0.6276", "1.0376   1.4602   1.8829", "3.1127   4.3807   5.6488"]:
        assert row in out
    assert "B0-: 1.1824" in out and "lower bound: 1.2742" in out


def test_analyze_silver(runner):
    r = runner.invoke(cli, ["analyze", "omega:2"])
    assert r.exit_code == 0 and "lambda: 2.4142" in r.output


def test_analyze_json_roundtrip(runner):
    r = runner.invoke(cli, ["analyze", "omega:1", "--json"])
    assert r.exit_code == 0
    data = json.loads(r.output)
    assert data["B0"] == 2.0 and data["separation"] is True
    assert json.dumps(data, sort_keys=True, indent=2) + "\n" == r.output


def test_analyze_bad_spec(runner):
    assert runner.invoke(cli, ["analyze", "nonsense"]).exit_code == 2


def test_analyze_tie_exit(runner):
    assert runner.invoke(cli, ["analyze", "omega:1,2,2"]).exit_code == 3


def test_profile_stdout_and_file(runner, tmp_path):
    r = runner.invoke(cli, ["profile", "omega:1,2", "--points", "4"])
    assert r.exit_code == 0
    rows = list(csv.reader(io.StringIO(r.output)))
    assert rows[0] == ["eps", "ln_eps", "h1", "h2", "N", "k_dominant", "ln_envelope"]
    assert len(rows) == 5 and rows[1][0] == "1e-08"
    out = tmp_path / "p.csv"
    r2 = runner.invoke(cli, ["profile", "omega:1,2", "--points", "4", "--out", str(out)])
    assert r2.exit_code == 0 and out.read_text() == r.output


@pytest.mark.parametrize("args", [["--points", "1"], ["--eps-min", "1e-2", "--eps-max", "1e-3"],
                                  ["--rho", "0"], ["--points", "abc"]])
def test_profile_bad_flags(runner, args):
    assert runner.invoke(cli, ["profile", "golden", *args]).exit_code == 2


def test_scan_default(runner):
    r = runner.invoke(cli, ["scan"])
    assert r.exit_code == 0
    rows = list(csv.DictReader(io.StringIO(r.output)))
    assert sum(row["pass"] == "true" for row in rows) == 24


def test_scan_digit14(runner):
    r = runner.invoke(cli, ["scan", "--period-max", "1", "--digit-max", "14"])
    rows = {row["cf"]: row for row in csv.DictReader(io.StringIO(r.output))}
    assert rows["14"]["pass"] == "false"


def test_scan_empty_bounds(runner):
    assert runner.invoke(cli, ["scan", "--period-max", "0"]).exit_code == 2


def test_byte_identical(runner):
    a = runner.invoke(cli, ["profile", "cubic-golden", "--points", "20"]).output
    b = runner.invoke(cli, ["profile", "cubic-golden", "--points", "20"]).output
    assert a == b


def test_config_defaults(runner, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"profile": {"points": 3}}))
    r = runner.invoke(cli, ["--config", str(cfg), "profile", "golden"])
    assert r.exit_code == 0 and len(r.output.strip().split("\n")) == 4
    r = runner.invoke(cli, ["--config", str(cfg), "profile", "golden", "--points", "5"])
    assert len(r.output.strip().split("\n")) == 6


def test_verify_small(runner):
    r = runner.invoke(cli, ["verify", "--k-max", "1", "--eps-samples", "2", "--quad-samples", "2"])
    assert r.exit_code == 0
    assert r.output.count("PASS") == 3


def test_verify_fault(runner):
    r = runner.invoke(cli, ["verify", "--k-max", "5", "--eps-samples", "2", "--quad-samples", "2", "--inject-fault"])
    assert r.exit_code == 1 and "FAIL" in r.output
