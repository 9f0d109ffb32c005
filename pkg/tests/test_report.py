import json

import pytest

from fewbody.report import (
    SWEEP_COLUMNS,
    SweepReport,
    emit_report,
    read_report_csv,
)


def tiny_report(rows):
    return SweepReport(
        mode="sweep",
        columns=("energy", "eps", "err_finite"),
        rows=tuple(rows),
        summary={"slope": 2.0},
        config_hash="abc123",
        seed=7,
    )


class TestEmitCsv:
    def test_header_only_for_empty_rows(self):
        data = emit_report(tiny_report([]), "csv").decode()
        lines = [l for l in data.splitlines() if not l.startswith("#")]
        assert lines == ["energy,eps,err_finite"]

    def test_one_row_two_lines(self):
        data = emit_report(tiny_report([(1.0, 0.1, 1e-3)]), "csv").decode()
        lines = [l for l in data.splitlines() if not l.startswith("#")]
        assert len(lines) == 2

    def test_metadata_embedded(self):
        data = emit_report(tiny_report([]), "csv").decode()
        assert "# config_hash=abc123" in data
        assert "# seed=7" in data
        assert "# version=" in data
        assert "# summary.slope=2" in data

    def test_seventeen_digit_round_trip(self):
        # bit-for-bit float fidelity through the text format
        vals = (0.1 + 0.2, 1.0 / 3.0, 2.0**-52)
        report = tiny_report([vals])
        back = read_report_csv(emit_report(report, "csv"))
        assert back.rows[0] == vals
        assert back.config_hash == "abc123"
        assert back.seed == 7
        assert back.columns == report.columns

    def test_deterministic_bytes(self):
        a = emit_report(tiny_report([(1.0, 0.1, 1e-3)]), "csv")
        b = emit_report(tiny_report([(1.0, 0.1, 1e-3)]), "csv")
        assert a == b


class TestEmitJson:
    def test_stable_key_order_and_content(self):
        report = tiny_report([(1.0, 0.1, 1e-3)])
        payload = json.loads(emit_report(report, "json"))
        assert payload["meta"]["config_hash"] == "abc123"
        assert payload["columns"] == ["energy", "eps", "err_finite"]
        assert payload["rows"] == [[1.0, 0.1, 1e-3]]
        a = emit_report(report, "json")
        b = emit_report(report, "json")
        assert a == b

    def test_unknown_format_rejected(self):
        with pytest.raises(ValueError):
            emit_report(tiny_report([]), "xml")


class TestColumnsContract:
    def test_sweep_columns_frozen(self):
        # the published compatibility contract; extend only at the end
        assert SWEEP_COLUMNS[:6] == (
            "energy",
            "eps",
            "err_kimp",
            "err_asym",
            "err_finite",
            "defect_ls",
        )
        assert len(SWEEP_COLUMNS) == 22
