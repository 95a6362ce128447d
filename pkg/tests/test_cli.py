"""Tests for the command-line workflows and run reports"""

import csv
import json

import pytest

from main import build_parser, main, run_config_from_args
from src.cli.reports import RunReport, write_csv, write_report
from src.config.models import Subcommand
from src.linalg.matrix_market import read_operators


def _report(tmp_path, subcommand):
    return json.loads((tmp_path / f"{subcommand}.json").read_text())


class TestArguments:
    """argparse to RunConfig"""

    def test_tolerance_flags(self):
        args = build_parser().parse_args(["local-div", "--k", "3", "--exactness-tol", "1e-8"])
        config = run_config_from_args(args)

        assert config.subcommand == Subcommand.LOCAL_DIV
        assert config.k == 3
        assert config.tolerances == {"exactness_tol": 1e-8}

    def test_subcommand_required(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])

    def test_usage_error_exit_code(self, tmp_path, capsys):
        assert main(["infsup", "--out", str(tmp_path)]) == 2
        assert "usage_error" in capsys.readouterr().err


class TestCommands:
    """Subcommands end to end on small inputs"""

    def test_refine(self, tmp_path):
        assert main(["refine", "--mesh", "square2", "--out", str(tmp_path)]) == 0

        report = _report(tmp_path, "refine")
        assert report["summary"]["children"] == 6
        assert report["summary"]["interior_facets"] == 1
        assert (tmp_path / "refined.mesh").exists()

    def test_dimensions(self, tmp_path):
        assert main(["dimensions", "--d", "2", "--out", str(tmp_path)]) == 0

        with (tmp_path / "dimensions.csv").open() as handle:
            rows = list(csv.DictReader(handle))
        assert len(rows) == 4
        assert all(row["value"] == row["expected"] for row in rows)

    def test_local_div(self, tmp_path):
        assert main(["local-div", "--k", "2", "--trials", "3", "--seed", "7", "--out", str(tmp_path)]) == 0

        report = _report(tmp_path, "local-div")
        assert len(report["rows"]) == 3
        assert report["failures"] == []

    def test_bubbles_with_dump(self, tmp_path):
        argv = ["bubbles", "--trials", "2", "--dump", "--sampling-tol", "1e-9", "--out", str(tmp_path)]

        assert main(argv) == 0
        dump = json.loads((tmp_path / "bubbles_dump.json").read_text())
        assert set(dump) == {"0", "1", "2"}

    def test_solve_exports(self, tmp_path):
        argv = [
            "solve",
            "--pair",
            "cor5.2",
            "--levels",
            "2",
            "--export-ops",
            str(tmp_path / "ops"),
            "--sample-lattice",
            "2",
            "--metrics-file",
            str(tmp_path / "alfeld.prom"),
            "--out",
            str(tmp_path),
        ]

        assert main(argv) == 0
        operators = read_operators(tmp_path / "ops")
        assert set(operators) == {"A", "B", "Mp", "Mu"}
        assert operators["B"].shape == (8, 10)
        assert (tmp_path / "solution_samples.csv").exists()
        assert "stokes_solves_total" in (tmp_path / "alfeld.prom").read_text()

    def test_solve_on_kuhn_cube(self, tmp_path):
        argv = ["solve", "--mesh", "cube6", "--pair", "thm6.6", "--case", "stream", "--out", str(tmp_path)]

        assert main(argv) == 0
        report = _report(tmp_path, "solve")
        assert report["summary"]["divergence_image_residual"] < 1e-10
        assert report["failures"] == []

    def test_surjectivity(self, tmp_path):
        assert main(["surjectivity", "--levels", "2", "--trials", "2", "--out", str(tmp_path)]) == 0

        assert len(_report(tmp_path, "surjectivity")["rows"]) == 2

    def test_library_error_becomes_failure(self, tmp_path):
        """cor6.4 needs k < d"""
        assert main(["solve", "--pair", "cor6.4", "--k", "2", "--out", str(tmp_path)]) == 1

        assert _report(tmp_path, "solve")["failures"][0]["check"] == "DimensionRule"


class TestReports:
    """RunReport bookkeeping and writers"""

    def test_require_records_failures(self):
        report = RunReport(subcommand="infsup", config={})
        report.require(True, "infsup_positive", "level 0")
        report.require(False, "infsup_positive", "level 1", beta_h=0.0)

        assert not report.passed
        assert report.failures[0].context == {"beta_h": 0.0}

    def test_write_report(self, tmp_path):
        report = RunReport(subcommand="infsup", config={"k": 1})
        report.rows.append({"level": 0, "beta_h": float("inf")})
        paths = write_report(report, tmp_path)

        assert set(paths) == {"json", "csv"}
        assert json.loads(paths["json"].read_text())["rows"][0]["beta_h"] == "Infinity"

    def test_report_is_strict_json(self, tmp_path):
        def reject(constant):
            raise ValueError(constant)

        report = RunReport(subcommand="infsup", config={})
        report.rows.append({"beta_h": float("inf"), "ratio": float("nan")})
        report.summary["min_beta_h"] = float("inf")
        text = write_report(report, tmp_path)["json"].read_text()

        data = json.loads(text, parse_constant=reject)
        assert data["rows"][0]["ratio"] == "NaN"
        assert data["summary"]["min_beta_h"] == "Infinity"

    def test_csv_columns_in_first_seen_order(self, tmp_path):
        path = tmp_path / "rows.csv"
        write_csv(path, [{"a": 1, "b": None}, {"c": 3, "a": 2}])

        assert path.read_text().splitlines() == ["a,b,c", "1,,", "2,,3"]
