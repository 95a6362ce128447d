"""Command-line entry point for the barycentric-split Stokes element toolkit"""

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import structlog
from dotenv import load_dotenv
from pydantic import ValidationError

from src.cli.commands import CommandRunner
from src.cli.reports import write_report
from src.config.models import RunConfig, Subcommand, get_settings
from src.monitoring.metrics import dump_metrics
from src.utils.logging import setup_logging

# Load environment variables
load_dotenv()

logger = structlog.get_logger()

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

TOLERANCE_FLAGS = ("exactness_tol", "sampling_tol", "stable_threshold")


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--mesh", help="Builtin mesh name (tri1, square2, squareN, tet1, cube6, cubeN, simplexD)")
    parser.add_argument("--mesh-file", dest="mesh_path", type=Path, help="ASCII mesh file")
    parser.add_argument("--split", dest="split_rule", choices=["barycenter", "explicit"], default="barycenter")
    parser.add_argument("--split-points", dest="split_points_path", type=Path, help="Split points, one row per cell")
    parser.add_argument("--pair", help="Velocity/pressure pair")
    parser.add_argument("--space", help="Local space (VR, MF, VDIV, VH68)")
    parser.add_argument("--k", type=int, default=1)
    parser.add_argument("--d", type=int, default=2)
    parser.add_argument("--levels", type=int, default=1)
    parser.add_argument("--trials", type=int, default=10)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--random-geometry", action="store_true")
    parser.add_argument("--case", default="stream", help="Manufactured case (zero, stream, stream-shifted)")
    parser.add_argument("--pressure-shift", type=float, default=0.0)
    parser.add_argument("--out", dest="output_dir", type=Path, default=Path("results"))
    parser.add_argument("--export-ops", type=Path, help="Directory for Matrix Market operators")
    parser.add_argument("--sample-lattice", type=int, default=0, help="Lattice order of the solution dump")
    parser.add_argument("--dump", action="store_true", help="Dump modified bubble coefficients")
    parser.add_argument("--metrics-file", type=Path, help="Write Prometheus metrics to this file")
    for name in TOLERANCE_FLAGS:
        parser.add_argument(f"--{name.replace('_', '-')}", dest=name, type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="alfeld",
        description="Divergence-free Stokes pairs on barycentric refinements: constructions and checks",
    )
    subparsers = parser.add_subparsers(dest="subcommand", required=True)
    for command in Subcommand:
        _common(subparsers.add_parser(command.value))
    return parser


def run_config_from_args(args: argparse.Namespace) -> RunConfig:
    """
    Validate parsed arguments into a RunConfig

    Raises:
        ValidationError: Invalid combination or out-of-range value
    """
    values: Dict[str, Any] = {
        key: value for key, value in vars(args).items() if value is not None and key not in TOLERANCE_FLAGS
    }
    values["tolerances"] = {name: getattr(args, name) for name in TOLERANCE_FLAGS if getattr(args, name) is not None}
    return RunConfig(**values)


class Application:
    """Parses, validates, runs one subcommand and writes its report"""

    def __init__(self):
        self.settings = get_settings()
        setup_logging(self.settings.log_level, sys.stderr)
        self._logger = logger.bind(component="application")

    def run(self, argv: Optional[Sequence[str]] = None) -> int:
        args = build_parser().parse_args(argv)
        try:
            config = run_config_from_args(args)
        except ValidationError as e:
            errors: List[Dict[str, Any]] = [
                {"loc": [str(part) for part in error["loc"]], "msg": error["msg"]} for error in e.errors()
            ]
            self._logger.error("invalid_configuration", errors=errors)
            print(json.dumps({"usage_error": errors}, indent=2), file=sys.stderr)
            return EXIT_USAGE

        report = CommandRunner(self.settings).run(config)
        paths = write_report(report, config.output_dir)
        if config.metrics_file is not None:
            dump_metrics(config.metrics_file)

        summary = {
            "subcommand": report.subcommand,
            "passed": report.passed,
            "report": str(paths["json"]),
            "failures": [failure.model_dump() for failure in report.failures],
        }
        print(json.dumps(summary, indent=2))
        return EXIT_OK if report.passed else EXIT_FAILED


def main(argv: Optional[Sequence[str]] = None) -> int:
    return Application().run(argv)


if __name__ == "__main__":
    sys.exit(main())
