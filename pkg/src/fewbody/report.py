"""Report records and deterministic serialization (CSV / JSON).

The column orders below are the output compatibility contract; reorder only
with a version bump.  CSV numbers carry 17 significant digits so a report
round-trips bit-for-bit through text.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, replace

TOOL_VERSION = "0.1.0"

SWEEP_COLUMNS = (
    "energy",
    "eps",
    "err_kimp",
    "err_asym",
    "err_finite",
    "defect_ls",
    "defect_asym",
    "defect_finite",
    "gap_finite_asym",
    "truncation_bound",
    "defect_finite_bound",
    "tg0_max",
    "tg1_max",
    "kg2_max",
    "ttg1_max",
    "kkg2_max",
    "vg0_max",
    "vg1_max",
    "vg2_max",
    "tg0_vs_vg0_dev",
    "tg1_vs_vg1_dev",
    "kg2_vs_vg2_dev",
)

TWOBODY_COLUMNS = (
    "energy",
    "p0",
    "k_onshell",
    "t_real",
    "t_imag",
    "phase_shift",
    "s_abs_dev",
    "kz_ratio",
    "route_t_rel_err",
)

VALIDATE_COLUMNS = ("check", "measured", "threshold", "status")


@dataclass(frozen=True)
class SweepReport:
    """Deterministic tabular result of one run."""

    mode: str
    columns: tuple[str, ...]
    rows: tuple[tuple, ...]
    summary: dict = field(default_factory=dict)
    config_hash: str = ""
    seed: int = 0
    norm_kind: str = "frobenius"
    version: str = TOOL_VERSION
    errors: tuple[str, ...] = ()

    def with_meta(self, **kwargs) -> "SweepReport":
        return replace(self, **kwargs)


def _format_cell(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int,)) and not isinstance(value, bool):
        return str(value)
    return format(float(value), ".17g")


def emit_report(report: SweepReport, fmt: str = "csv") -> bytes:
    """Serialize a report; byte-identical for identical reports."""
    if fmt == "csv":
        return _emit_csv(report)
    if fmt == "json":
        return _emit_json(report)
    raise ValueError(f"unknown report format {fmt!r}")


def _meta_items(report: SweepReport) -> list[tuple[str, str]]:
    items = [
        ("version", report.version),
        ("mode", report.mode),
        ("config_hash", report.config_hash),
        ("seed", str(report.seed)),
        ("norm_kind", report.norm_kind),
    ]
    for key in sorted(report.summary):
        items.append((f"summary.{key}", _format_cell(report.summary[key])))
    for i, err in enumerate(report.errors):
        items.append((f"error.{i}", err))
    return items


def _emit_csv(report: SweepReport) -> bytes:
    buf = io.StringIO(newline="")
    for key, value in _meta_items(report):
        buf.write(f"# {key}={value}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(report.columns)
    for row in report.rows:
        writer.writerow([_format_cell(c) for c in row])
    return buf.getvalue().encode("utf-8")


def _emit_json(report: SweepReport) -> bytes:
    payload = {
        "meta": dict(_meta_items(report)),
        "columns": list(report.columns),
        "rows": [list(row) for row in report.rows],
    }
    return (json.dumps(payload, indent=2, sort_keys=True) + "\n").encode("utf-8")


def read_report_csv(data: bytes) -> SweepReport:
    """Parse bytes produced by emit_report(..., "csv") back into a report.

    Numeric cells come back as floats; the `check`/`status` columns of
    validate reports stay strings.
    """
    meta: dict[str, str] = {}
    table_lines = []
    for line in data.decode("utf-8").splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition("=")
            meta[key] = value
        elif line:
            table_lines.append(line)
    rows = list(csv.reader(table_lines))
    columns = tuple(rows[0])
    parsed = []
    for row in rows[1:]:
        cells = []
        for cell in row:
            try:
                cells.append(float(cell))
            except ValueError:
                cells.append(cell)
        parsed.append(tuple(cells))
    summary = {}
    errors = []
    for key, value in meta.items():
        if key.startswith("summary."):
            summary[key[len("summary.") :]] = float(value)
        elif key.startswith("error."):
            errors.append(value)
    return SweepReport(
        mode=meta.get("mode", ""),
        columns=columns,
        rows=tuple(parsed),
        summary=summary,
        config_hash=meta.get("config_hash", ""),
        seed=int(meta.get("seed", "0")),
        norm_kind=meta.get("norm_kind", "frobenius"),
        version=meta.get("version", TOOL_VERSION),
        errors=tuple(errors),
    )
