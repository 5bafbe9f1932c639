# Future
from __future__ import division, print_function, unicode_literals

# Standard Library
import csv
import json
import logging

# Third Party
import numpy as np

# CuspFunnel
from cuspfunnel.constants import VERSION
from cuspfunnel.reports import ScanReport, emit_series, write_report


def _report():
    report = ScanReport("build", {"seed": 0})
    report.add_result("count", np.int64(3))
    report.add_verdict("good", True, 1e-12, 0.0)
    return report


class TestScanReport:
    def test_passed(self):
        report = _report()
        assert report.passed
        report.add_verdict("bad", False, 0.1, 0.5)
        assert not report.passed
        assert report.verdicts["bad"] == {
            "passed": False,
            "tolerance": 0.1,
            "value": 0.5,
        }

    def test_failed_verdict_is_logged(self, caplog):
        report = _report()
        with caplog.at_level(logging.WARNING, logger="cuspfunnel"):
            report.add_verdict("bad", False, 0.1, 0.5)
        assert "Verdict bad failed" in caplog.text

    def test_to_dict(self, mocker):
        mocker.patch(
            "cuspfunnel.reports.timestamp", return_value="2026-01-01T00:00:00"
        )
        data = _report().to_dict()
        assert data["timestamp"] == "2026-01-01T00:00:00"
        assert data["tool_version"] == VERSION
        assert data["results"] == {"count": 3}
        assert data["tolerances"]["TAU_RELATIVE"] == 0.1
        assert data["config_echo"] == {"seed": 0}

    def test_results_from_records(self):
        report = _report()

        class Record(object):
            def to_dict(self):
                return {"value": np.float64(2.5)}

        report.add_result("record", Record())
        assert report.results["record"] == {"value": 2.5}

    def test_str(self):
        assert str(_report()) == "build (1 verdicts, pass)"


class TestWriting:
    def test_series(self, tmp_path):
        report = _report()
        report.add_series("values.csv", ["N1", "value"], [[10, 0.1], [20, None]])
        report.add_series("rows.csv", ["b", "a"], [{"a": 1, "b": np.float64(0.5)}])
        paths = emit_series(report, str(tmp_path))
        assert [p.rsplit("/", 1)[-1] for p in paths] == ["rows.csv", "values.csv"]
        with open(tmp_path / "values.csv", encoding="utf-8") as handle:
            rows = list(csv.reader(handle))
        assert rows == [["N1", "value"], ["10", "0.10000000000000001"], ["20", ""]]
        with open(tmp_path / "rows.csv", encoding="utf-8") as handle:
            assert list(csv.reader(handle)) == [["b", "a"], ["0.5", "1"]]

    def test_report_json(self, tmp_path, mocker):
        mocker.patch("cuspfunnel.reports.timestamp", return_value="now")
        path = write_report(_report(), str(tmp_path / "out"))
        with open(path, encoding="utf-8") as handle:
            text = handle.read()
        data = json.loads(text)
        assert data["passed"] is True
        assert text.startswith('{\n  "command": "build"')
        assert list(data) == sorted(data)
