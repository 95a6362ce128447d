"""Machine-readable run reports (JSON and CSV)"""

import csv
from pathlib import Path
from typing import Any, Dict, List

import structlog
from pydantic import BaseModel, ConfigDict, Field

logger = structlog.get_logger()


class Failure(BaseModel):
    """One failed assertion of a run"""

    check: str
    detail: str
    context: Dict[str, Any] = Field(default_factory=dict)


class RunReport(BaseModel):
    """Rows, summary and failures of one subcommand run"""

    subcommand: str
    config: Dict[str, Any]
    rows: List[Dict[str, Any]] = Field(default_factory=list)
    summary: Dict[str, Any] = Field(default_factory=dict)
    failures: List[Failure] = Field(default_factory=list)

    model_config = ConfigDict(ser_json_inf_nan="strings")

    @property
    def passed(self) -> bool:
        return not self.failures

    def fail(self, check: str, detail: str, **context: Any) -> None:
        self.failures.append(Failure(check=check, detail=detail, context=context))
        logger.warning("assertion_failed", check=check, detail=detail)

    def require(self, condition: bool, check: str, detail: str, **context: Any) -> None:
        if not condition:
            self.fail(check, detail, **context)


def _columns(rows: List[Dict[str, Any]]) -> List[str]:
    columns: List[str] = []
    for row in rows:
        for key in row:
            if key not in columns:
                columns.append(key)
    return columns


def write_csv(path: Path, rows: List[Dict[str, Any]]) -> None:
    """Rows as CSV with columns in first-seen order"""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=_columns(rows), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({key: ("" if value is None else value) for key, value in row.items()})


def write_report(report: RunReport, output_dir: Path) -> Dict[str, Path]:
    """
    Write ``<subcommand>.json`` and, when there are rows, ``<subcommand>.csv``

    Returns:
        Written paths by format
    """
    output_dir.mkdir(parents=True, exist_ok=True)
    paths = {"json": output_dir / f"{report.subcommand}.json"}
    paths["json"].write_text(report.model_dump_json(indent=2) + "\n")
    if report.rows:
        paths["csv"] = output_dir / f"{report.subcommand}.csv"
        write_csv(paths["csv"], report.rows)
    written = {name: str(path) for name, path in paths.items()}
    logger.info("report_written", subcommand=report.subcommand, failures=len(report.failures), **written)
    return paths
