"""
Scan reports: verdicts with the tolerances behind them, report.json and the
CSV series handed to plotting scripts
"""

# Standard Library
import csv
import json
import logging
import os
from datetime import datetime, timezone

# Local
from . import constants
from .toolbox import format_float, jsonable

logger = logging.getLogger("cuspfunnel")

TOLERANCE_NAMES = (
    "HERMITIAN_TOL",
    "RESIDUAL_TOL",
    "COMPACT_TAIL_TOL",
    "COMPACT_DECAY_RATIO",
    "TAU_RELATIVE",
    "BOUNDED_VARIATION",
    "PLATEAU_TOL",
    "LAP_CONVERGENCE_TOL",
    "PERSIST_TOL",
    "PROPAGATION_VARIATION",
    "H0_RATIO",
)


def timestamp():
    return datetime.now(timezone.utc).isoformat()


class ScanReport(object):
    """Everything one command produced

    `verdicts` maps a name to {"passed", "tolerance", "value"}; every verdict
    carries the tolerance that decided it.
    """

    def __init__(self, command, config_echo):
        self.command = command
        self.config_echo = config_echo
        self.results = {}
        self.verdicts = {}
        self.series = {}
        self.tool_version = constants.VERSION
        self.tolerances = {name: getattr(constants, name) for name in TOLERANCE_NAMES}

    def __repr__(self):
        return f"<ScanReport: {self}>"  # pragma: no cover

    def __str__(self):
        state = "pass" if self.passed else "fail"
        return f"{self.command} ({len(self.verdicts)} verdicts, {state})"

    def add_result(self, name, value):
        if hasattr(value, "to_dict"):
            value = value.to_dict()
        self.results[name] = jsonable(value)

    def add_verdict(self, name, passed, tolerance, value=None):
        self.verdicts[name] = {
            "passed": bool(passed),
            "tolerance": jsonable(tolerance),
            "value": jsonable(value),
        }
        if not passed:
            logger.warning(
                "Verdict %s failed (value %s, tolerance %s)", name, value, tolerance
            )

    def add_series(self, filename, columns, rows):
        """A CSV series; rows are dicts or sequences in column order"""
        self.series[filename] = (
            list(columns), [self._row(columns, row) for row in rows]
        )

    @staticmethod
    def _row(columns, row):
        if isinstance(row, dict):
            return [row[column] for column in columns]
        return list(row)

    @property
    def passed(self):
        return all(verdict["passed"] for verdict in self.verdicts.values())

    def to_dict(self):
        return {
            "command": self.command,
            "config_echo": jsonable(self.config_echo),
            "results": self.results,
            "verdicts": self.verdicts,
            "passed": self.passed,
            "tool_version": self.tool_version,
            "tolerances": self.tolerances,
            "timestamp": timestamp(),
        }


def _cell(value):
    if isinstance(value, float):
        return format_float(value)
    if value is None:
        return ""
    if hasattr(value, "dtype"):
        return _cell(value.item())
    return value


def emit_series(report, directory):
    """Write one CSV per series, with a header row, and return the paths"""
    os.makedirs(directory, exist_ok=True)
    paths = []
    for filename, (columns, rows) in sorted(report.series.items()):
        path = os.path.join(directory, filename)
        with open(path, "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_cell(value) for value in row])
        logger.debug("Wrote %d rows to %s", len(rows), path)
        paths.append(path)
    return paths


def write_report(report, directory):
    """report.json with sorted keys and a 2-space indent"""
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, "report.json")
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(report.to_dict(), handle, indent=2, sort_keys=True)
        handle.write("\n")
    logger.info("Report written to %s", path)
    return path
