"""Batch front door: ``fewbody <mode> --config run.toml [flags]``.

Subcommands: two-body, few-body, sweep, validate.  Identical config and
seed produce byte-identical report files; the exit code is 0 iff every
row succeeded and, in validate mode, every check passed.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import asym, twobody as tb
from .config import (
    MODES,
    RunConfig,
    build_channel_at,
    build_model_spec,
    config_hash,
    parse_config,
)
from .errors import FewBodyError, SolveError
from .report import TWOBODY_COLUMNS, SweepReport, emit_report
from .validate import run_validation


def _run_sweep(cfg: RunConfig) -> SweepReport:
    spec = build_model_spec(cfg.model, cfg.seed)
    report = asym.asym_error_sweep(
        spec,
        cfg.energies.resolve(),
        cfg.eps,
        pair_mode=cfg.pair_mode,
        norm_kind=cfg.norm_kind,
        threads=cfg.threads,
    )
    return report.with_meta(mode=cfg.mode)


def _twobody_point(cfg: RunConfig, energy: float) -> tuple:
    ch = build_channel_at(cfg.channel, energy)
    direct = tb.solve_ls_onshell(ch)
    via_k = tb.solve_kmatrix_onshell(ch)
    route_err = abs(via_k.t_onshell - direct.t_onshell) / max(
        abs(direct.t_onshell), 1e-300
    )
    return (
        energy,
        ch.p0,
        via_k.k_onshell,
        direct.t_onshell.real,
        direct.t_onshell.imag,
        direct.phase_shift,
        abs(abs(via_k.s_matrix) - 1.0),
        tb.klein_zemach_ratio(ch, energy, cfg.norm_kind),
        route_err,
    )


def _run_twobody(cfg: RunConfig) -> SweepReport:
    rows = []
    errors = []
    for energy in cfg.energies.resolve():
        try:
            rows.append(_twobody_point(cfg, energy))
        except FewBodyError as exc:
            errors.append(f"energy={energy:.12g}: {exc}")
    summary = {}
    ratios = [row[7] for row in rows]
    energies = [row[0] for row in rows]
    if len(rows) >= 2:
        summary["loglog_slope_kz_ratio"] = asym.loglog_slope(energies, ratios)
    return SweepReport(
        mode="two-body",
        columns=TWOBODY_COLUMNS,
        rows=tuple(rows),
        summary=summary,
        norm_kind=cfg.norm_kind,
        errors=tuple(errors),
    )


def run(cfg: RunConfig) -> SweepReport:
    """Execute a parsed config; a pure function of (config, seed, version)."""
    if cfg.mode in ("sweep", "few-body"):
        report = _run_sweep(cfg)
    elif cfg.mode == "two-body":
        report = _run_twobody(cfg)
    elif cfg.mode == "validate":
        report = run_validation(cfg)
    else:  # pragma: no cover - parse_config rejects unknown modes
        raise ValueError(f"unknown mode {cfg.mode!r}")
    return report.with_meta(config_hash=config_hash(cfg), seed=cfg.seed)


def report_failed(report: SweepReport) -> bool:
    if report.errors:
        return True
    if report.mode == "validate":
        status = report.columns.index("status")
        return any(row[status] != "pass" for row in report.rows)
    return False


def _write_atomic(path: Path, data: bytes):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fewbody",
        description="Few-body scattering studies: exact equations, "
        "high-energy forms, unitarity and error reports.",
    )
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        p = sub.add_parser(mode, help=f"run a {mode} study")
        p.add_argument("--config", required=True, help="path to the TOML run config")
        p.add_argument("--output", default=None, help="report path (default: stdout)")
        p.add_argument("--format", default=None, choices=("csv", "json"))
        p.add_argument("--seed", default=None, type=int)
        p.add_argument("--norm", default=None, choices=("frobenius", "spectral"))
        p.add_argument("--threads", default=None, type=int)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"fewbody: cannot read config: {exc}", file=sys.stderr)
        return 2
    try:
        cfg = parse_config(
            text,
            mode=args.mode,
            seed=args.seed,
            norm_kind=args.norm,
            output=args.output,
            format=args.format,
            threads=args.threads,
        )
        report = run(cfg)
    except FewBodyError as exc:
        print(f"fewbody: {exc}", file=sys.stderr)
        return 2
    data = emit_report(report, cfg.format)
    if cfg.output:
        _write_atomic(Path(cfg.output), data)
    else:
        sys.stdout.write(data.decode("utf-8"))
    return 1 if report_failed(report) else 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
