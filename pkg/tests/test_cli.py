from __future__ import annotations

import csv
import io
import json
import logging
import re

import pytest

from redlab import __version__
from redlab.cli import cli
from redlab.core.config import settings
from redlab.services.function_units import FunctionUnitSpec
from redlab.services.netlist import gate_count, logic_depth, netlist_from_json
from redlab.services.voters import RedundancyScheme, build_voter


@pytest.fixture(autouse=True)
def _drop_cli_log_handler():
    yield
    root = logging.getLogger()
    for handler in list(root.handlers):
        if getattr(handler, "name", "") == "redlab-root-handler":
            root.removeHandler(handler)


def _rows(text: str) -> list[dict[str, str]]:
    return list(csv.DictReader(io.StringIO(text)))


def test_version(runner):
    result = runner.invoke(cli, ["--version"])

    assert result.exit_code == 0
    assert __version__ in result.stdout


def test_verify_reports_ok_for_a_correct_system(runner):
    result = runner.invoke(cli, ["verify", "--unit", "rca:4", "--scheme", "mmr:5"])

    assert result.exit_code == 0, result.output
    assert result.stdout == "OK unit=rca:4 scheme=mmr:5 vectors=512\n"


def test_verify_json_report(runner):
    result = runner.invoke(cli, ["verify", "--unit", "bam:2x3", "--scheme", "nmr:3", "--format", "json"])

    assert result.exit_code == 0, result.output
    report = json.loads(result.stdout)
    assert report["unit_equivalent"] is True
    assert report["system_equivalent"] is True
    assert report["vectors_checked"] == 32
    assert report["counterexample"] is None


def test_verify_rejects_bad_parameters_with_usage_status(runner):
    result = runner.invoke(cli, ["verify", "--unit", "rca:0", "--scheme", "mmr:5"])

    assert result.exit_code == 2
    assert result.stdout == ""
    assert "error:" in result.stderr


def test_missing_required_option_is_a_usage_error(runner):
    result = runner.invoke(cli, ["counts"])

    assert result.exit_code == 2


def test_verify_above_the_input_cap_needs_sampling(runner, monkeypatch):
    monkeypatch.setattr(settings, "exhaustive_input_cap", 4)

    too_large = runner.invoke(cli, ["verify", "--unit", "rca:4", "--scheme", "nmr:3"])
    sampled = runner.invoke(
        cli, ["verify", "--unit", "rca:4", "--scheme", "nmr:3", "--sample-size", "100", "--seed", "1"]
    )

    assert too_large.exit_code == 3
    assert "exhaustive cap" in too_large.stderr
    assert sampled.exit_code == 0, sampled.output
    assert sampled.stdout == "OK unit=rca:4 scheme=nmr:3 vectors=100 sampled\n"


@pytest.mark.parametrize(
    ("faults", "expected", "exit_code"),
    [
        ("1,4", "MASKED\n", 0),
        ("", "MASKED\n", 0),
        ("3,5", "MASKED\n", 0),
        ("1,2", "NOT-MASKED failing_vector=000000000\n", 1),
    ],
)
def test_inject_verdicts(runner, faults, expected, exit_code):
    result = runner.invoke(cli, ["inject", "--unit", "rca:4", "--scheme", "mmr:5", "--faults", faults])

    assert result.exit_code == exit_code, result.output
    assert result.stdout == expected


def test_inject_stuck_at_model_and_json(runner):
    result = runner.invoke(
        cli,
        ["inject", "--unit", "rca:4", "--scheme", "nmr:3", "--faults", "2", "--model", "sa1", "--format", "json"],
    )

    assert result.exit_code == 0, result.output
    report = json.loads(result.stdout)
    assert report["masked"] is True
    assert report["model"] == "sa1"
    assert report["faults"] == "2"


@pytest.mark.parametrize("faults", ["6", "1,1", "a"])
def test_inject_rejects_invalid_patterns(runner, faults):
    result = runner.invoke(cli, ["inject", "--unit", "rca:4", "--scheme", "mmr:5", "--faults", faults])

    assert result.exit_code == 2
    assert result.stdout == ""


@pytest.mark.parametrize(
    ("scheme", "f", "masked", "patterns"),
    [("mmr:5", 2, 6, 10), ("mmr:5", 3, 0, 10), ("mmr:6", 3, 9, 20), ("nmr:7", 3, 35, 35), ("mmr:7", 4, 12, 35)],
)
def test_counts_csv(runner, scheme, f, masked, patterns):
    result = runner.invoke(cli, ["counts", "--scheme", scheme])

    assert result.exit_code == 0, result.output
    assert result.stdout.splitlines()[0] == "scheme,model,f,masked,patterns"
    rows = _rows(result.stdout)
    assert len(rows) == int(scheme.split(":")[1]) + 1
    assert rows[f] == {
        "scheme": scheme,
        "model": "inversion",
        "f": str(f),
        "masked": str(masked),
        "patterns": str(patterns),
    }


def test_counts_above_the_unit_cap_is_too_large(runner, monkeypatch):
    monkeypatch.setattr(settings, "enumeration_unit_cap", 5)

    result = runner.invoke(cli, ["counts", "--scheme", "nmr:7"])

    assert result.exit_code == 3
    assert result.stdout == ""
    assert "enumeration cap" in result.stderr


def test_tolerance_text_and_json(runner):
    text = runner.invoke(cli, ["tolerance", "--scheme", "mmr:7"])
    as_json = runner.invoke(cli, ["tolerance", "--scheme", "nmr:5", "--format", "json"])

    assert text.exit_code == 0, text.output
    assert text.stdout == (
        "7-MMR (mmr:7, model=inversion)\nbest-placement maximum: 4\nany-placement guarantee: 1\n"
    )
    assert json.loads(as_json.stdout) == {
        "scheme": "nmr:5",
        "label": "5MR",
        "model": "inversion",
        "units": 5,
        "max_tolerable": 2,
        "guaranteed": 2,
        "claimed": 2,
    }


def test_four_unit_mmr_needs_the_override_flag(runner):
    rejected = runner.invoke(cli, ["tolerance", "--scheme", "mmr:4"])
    accepted = runner.invoke(cli, ["--allow-small-mmr", "tolerance", "--scheme", "mmr:4"])

    assert rejected.exit_code == 2
    assert accepted.exit_code == 0, accepted.output
    assert "best-placement maximum: 1" in accepted.stdout


def test_sweep_csv_and_delta_summary(runner):
    result = runner.invoke(cli, ["sweep", "--schemes", "nmr:5,mmr:5"])

    assert result.exit_code == 0, result.output
    rows = _rows(result.stdout)
    assert len(rows) == 20
    assert list(rows[0]) == [
        "scheme",
        "units",
        "R",
        "reliability_analytic",
        "reliability_mc",
        "mc_std_error",
        "trials",
        "seed",
        "delta_percent",
    ]
    assert float(rows[0]["R"]) == pytest.approx(0.9)
    assert rows[0]["reliability_mc"] == ""

    match = re.search(r"delta 5MR vs 5-MMR: mean ([0-9.]+)% over R in \[0.9, 0.99\] \(10 points\)", result.stderr)
    assert match is not None
    assert float(match.group(1)) == pytest.approx(1.21, abs=0.5)

    assert all(row["delta_percent"] == "" for row in rows if row["scheme"] == "nmr:5")
    series = [float(row["delta_percent"]) for row in rows if row["scheme"] == "mmr:5"]
    assert len(series) == 10
    assert series == sorted(series, reverse=True)
    assert sum(series) / len(series) == pytest.approx(float(match.group(1)), abs=1e-3)


def test_sweep_analytic_values(runner):
    result = runner.invoke(
        cli, ["sweep", "--schemes", "nmr:3,mmr:5", "--r-min", "0.9", "--r-max", "1.0", "--steps", "2"]
    )

    assert result.exit_code == 0, result.output
    by_point = {(row["scheme"], float(row["R"])): float(row["reliability_analytic"]) for row in _rows(result.stdout)}
    assert by_point[("nmr:3", 1.0)] == 1.0
    assert by_point[("mmr:5", 0.9)] == pytest.approx(0.96228, abs=1e-12)
    assert "delta" not in result.stderr


def test_sweep_monte_carlo_columns_are_reproducible(runner):
    args = ["sweep", "--schemes", "mmr:6", "--steps", "3", "--trials", "2000", "--seed", "11"]

    first = runner.invoke(cli, args)
    second = runner.invoke(cli, ["--threads", "1", *args])

    assert first.exit_code == 0, first.output
    assert first.stdout == second.stdout
    rows = _rows(first.stdout)
    assert all(row["reliability_mc"] and row["trials"] == "2000" and row["seed"] == "11" for row in rows)


def test_sweep_json_document(runner):
    result = runner.invoke(cli, ["sweep", "--schemes", "nmr:7,mmr:6", "--steps", "4", "--format", "json"])

    assert result.exit_code == 0, result.output
    document = json.loads(result.stdout)
    assert len(document["grid"]) == 4
    assert len(document["rows"]) == 8
    assert document["rows"][0]["R"] == pytest.approx(0.9)
    assert document["deltas"][0]["nmr"] == "nmr:7"
    assert document["deltas"][0]["mmr"] == "mmr:6"
    assert len(document["deltas"][0]["series"]) == 4
    assert [row["delta_percent"] for row in document["rows"][4:]] == document["deltas"][0]["series"]
    assert all(row["delta_percent"] is None for row in document["rows"][:4])


@pytest.mark.parametrize(
    "args",
    [
        ["--r-min", "0.99", "--r-max", "0.9"],
        ["--steps", "1"],
        ["--r-max", "1.5"],
        ["--trials", "-1"],
    ],
)
def test_sweep_rejects_bad_grids(runner, args):
    result = runner.invoke(cli, ["sweep", "--schemes", "nmr:5", *args])

    assert result.exit_code == 2
    assert result.stdout == ""


def test_sweep_to_file_keeps_summary_on_stdout(runner, tmp_path):
    out = tmp_path / "sweep.csv"

    result = runner.invoke(cli, ["sweep", "--schemes", "nmr:9,mmr:7", "--out", str(out)])

    assert result.exit_code == 0, result.output
    assert len(_rows(out.read_text())) == 20
    assert result.stdout.startswith("delta 9MR vs 7-MMR: mean ")
    assert not list(tmp_path.glob(".sweep.csv.*"))


def test_unwritable_output_exits_with_output_status(runner, tmp_path):
    out = tmp_path / "missing" / "counts.csv"

    result = runner.invoke(cli, ["counts", "--scheme", "nmr:3", "--out", str(out)])

    assert result.exit_code == 4
    assert not out.exists()
    assert "error: cannot write" in result.stderr


def test_metrics_voter_census(runner):
    result = runner.invoke(cli, ["metrics", "--schemes", "nmr:3,nmr:5,nmr:7,nmr:9,mmr:5,mmr:7"])

    assert result.exit_code == 0, result.output
    rows = {row["scheme"]: row for row in json.loads(result.stdout)}
    assert [rows[s]["voter_gates"] for s in ("nmr:3", "nmr:5", "nmr:7", "nmr:9")] == [5, 14, 20, 32]
    assert rows["mmr:5"]["voter_gates"] == 9
    assert rows["mmr:7"]["voter_gates"] == 13
    assert rows["mmr:7"]["voter_depth"] == 5
    assert rows["nmr:9"]["voter_depth"] == 9
    assert rows["mmr:5"]["voter_census"]["total"] == 9
    assert rows["nmr:3"]["system_gates"] is None


def test_metrics_with_a_unit_reports_system_totals(runner):
    unit = FunctionUnitSpec.rca(4).build()

    result = runner.invoke(cli, ["metrics", "--schemes", "mmr:5", "--unit", "rca:4", "--format", "csv"])

    assert result.exit_code == 0, result.output
    [row] = _rows(result.stdout)
    assert row["unit"] == "rca:4"
    assert int(row["system_gates"]) == 5 * gate_count(unit).total + 9 * unit.output_count
    assert int(row["system_depth"]) == logic_depth(unit) + logic_depth(build_voter(RedundancyScheme.mmr(5)))
    assert json.loads(row["voter_census"])


def test_compare_pairs_each_mmr_with_its_counterpart(runner):
    result = runner.invoke(cli, ["compare", "--unit", "rca:4", "--mmr", "5,6,7"])

    assert result.exit_code == 0, result.output
    rows = _rows(result.stdout)
    assert [row["scheme"] for row in rows] == ["nmr:5", "mmr:5", "nmr:7", "mmr:6", "nmr:9", "mmr:7"]
    assert [row["tolerance"] for row in rows] == ["2", "2", "3", "3", "4", "4"]
    assert [row["voter_gates"] for row in rows] == ["14", "9", "20", "11", "32", "13"]
    assert all(0.0 < float(row["voter_share"]) < 1.0 for row in rows)


def test_compare_rejects_mmr_below_five(runner):
    result = runner.invoke(cli, ["compare", "--unit", "rca:4", "--mmr", "4"])

    assert result.exit_code == 2


def test_export_voter_netlist(runner, tmp_path):
    out = tmp_path / "voter.json"

    result = runner.invoke(cli, ["export", "--target", "voter", "--scheme", "mmr:5", "--out", str(out)])

    assert result.exit_code == 0, result.output
    assert gate_count(netlist_from_json(out.read_text())).total == 9


def test_export_system_needs_a_unit(runner):
    result = runner.invoke(cli, ["export", "--target", "system", "--scheme", "nmr:3"])

    assert result.exit_code == 2
    assert "export requires --unit" in result.stderr


def test_export_system_netlist_to_stdout(runner):
    result = runner.invoke(cli, ["export", "--target", "system", "--unit", "rca:2", "--scheme", "nmr:3"])

    assert result.exit_code == 0, result.output
    system = netlist_from_json(result.stdout)
    assert system.input_count == 5
    assert system.output_count == 3


def test_metrics_textfile_is_written(runner, tmp_path):
    path = tmp_path / "redlab.prom"

    result = runner.invoke(cli, ["--metrics-out", str(path), "counts", "--scheme", "nmr:3"])

    assert result.exit_code == 0, result.output
    text = path.read_text()
    assert "redlab_fault_patterns_evaluated_total" in text
    assert "redlab_command_duration_seconds" in text


def test_failed_command_is_logged_with_its_error_code(runner, caplog):
    with caplog.at_level(logging.INFO, logger="redlab.cli"):
        result = runner.invoke(cli, ["counts", "--scheme", "mmr:3"])

    assert result.exit_code == 2
    failed = next(record for record in caplog.records if record.message == "cli.command.failed")
    assert failed.levelno == logging.WARNING
    assert failed.error_code == "invalid_parameter"
    assert failed.exit_code == 2
    completed = next(record for record in caplog.records if record.message == "cli.command.completed")
    assert completed.command == "counts"
    assert completed.exit_code == 2
