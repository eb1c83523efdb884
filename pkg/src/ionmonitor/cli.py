"""Command-line entry point: track, scan-probe, scan-noise, psd-check."""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .config import ConfigError, ScanConfig, apply_overrides, load_config, serialize_config
from .experiments import (
    noise_calibration_report,
    ratio_table,
    run_track,
    scan_probe,
    write_json,
    write_ratio_csv,
)
from .protocol import PROTOCOL_INTERLEAVED, PROTOCOL_MONITOR


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="flat key=value config file")
    parser.add_argument("--seed", type=int, help="master seed (overrides config)")
    parser.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    parser.add_argument("--workers", type=int, default=1, help="parallel scan workers")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a single config key (repeatable)",
    )


def _load(args: argparse.Namespace) -> ScanConfig:
    cfg = load_config(args.config) if args.config else ScanConfig()
    overrides = {}
    for item in args.overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()
    cfg = apply_overrides(cfg, overrides)
    if args.seed is not None:
        cfg = replace(cfg, base=replace(cfg.base, seed=args.seed))
    cfg.validate()
    return cfg


def cmd_track(args: argparse.Namespace) -> int:
    cfg = _load(args)
    summary = run_track(cfg.base, out_dir=args.out)
    write_json(summary, args.out / "summary.json")
    print(
        f"track: {summary['n_data_realizations']} data realizations, "
        f"measured fidelity {summary['measured_fidelity']:.4f}, "
        f"predicted corrected {summary['mean_predicted_corrected']:.4f} "
        f"vs uncorrected {summary['mean_predicted_uncorrected']:.4f}"
    )
    return 0


def _scan(args: argparse.Namespace, cfg: ScanConfig):
    protocols = (PROTOCOL_MONITOR, PROTOCOL_INTERLEAVED)
    results = scan_probe(cfg, out_dir=args.out, workers=args.workers, protocols=protocols)
    rows = ratio_table(results, cfg.noise_asds_uG_sqrtHz)
    write_ratio_csv(rows, args.out / "scan" / "ratios.csv")
    return results, rows


def cmd_scan_probe(args: argparse.Namespace) -> int:
    cfg = _load(args)
    results, rows = _scan(args, cfg)
    summary = {
        "config": serialize_config(cfg),
        "cells": [r.fit_summary() for r in results.values()],
    }
    write_json(summary, args.out / "summary.json")
    missing = [r for r in results.values() if r.tau_max is None]
    for r in results.values():
        tau = "n/a" if r.tau_max is None else f"{r.tau_max * 1e3:.2f} ms"
        flag = " (extrapolated)" if r.extrapolated else ""
        print(f"{r.protocol:12s} asd {r.noise_asd_1hz * 1e6:7.3g} uG/rtHz: tau_max {tau}{flag}")
    if missing:
        print(f"warning: {len(missing)} cells without a usable tau_max", file=sys.stderr)
        return 1
    return 0


def cmd_scan_noise(args: argparse.Namespace) -> int:
    cfg = _load(args)
    if len(cfg.noise_asds_uG_sqrtHz) < 3:
        raise ConfigError("noise_asds_uG_sqrtHz: scan-noise needs at least 3 strengths")
    results, rows = _scan(args, cfg)
    summary = {
        "config": serialize_config(cfg),
        "table": rows,
    }
    write_json(summary, args.out / "summary.json")
    incomplete = [row for row in rows if row["tau_max_s"] is None]
    for row in rows:
        tau = "n/a" if row["tau_max_s"] is None else f"{row['tau_max_s'] * 1e3:.2f} ms"
        ratio = row["ratio"]
        extra = f" ratio {ratio:.3f}" if ratio is not None else ""
        print(f"asd {row['asd_uG_sqrtHz']:7.3g} {row['protocol']:12s} tau_max {tau}{extra}")
    if incomplete:
        print(
            f"warning: partial output, {len(incomplete)} rows missing tau_max",
            file=sys.stderr,
        )
        return 1
    return 0


def cmd_psd_check(args: argparse.Namespace) -> int:
    cfg = _load(args)
    report = noise_calibration_report(cfg.base)
    write_json(report, args.out / "psd_check.json")
    if report.get("zero_power"):
        print("psd-check: pass (zero noise power)")
        return 0
    print(
        f"psd-check: slope {report['slope']:.3f} "
        f"({'ok' if report['slope_ok'] else 'FAIL'}), "
        f"PSD(1 Hz) {report['psd_1hz_gauss2_per_hz']:.3e} G^2/Hz vs "
        f"target {report['psd_1hz_target']:.3e} "
        f"({'ok' if report['level_ok'] else 'FAIL'})"
    )
    return 0 if report["passed"] else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ionmon",
        description="Monitor-qubit field-tracking feedforward simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, doc in [
        ("track", cmd_track, "single tracking run, per-realization CSV + summary"),
        ("scan-probe", cmd_scan_probe, "fidelity vs probe time per noise strength"),
        ("scan-noise", cmd_scan_noise, "tau_max vs noise strength table"),
        ("psd-check", cmd_psd_check, "noise-synthesis calibration self-test"),
    ]:
        p = sub.add_parser(name, help=doc)
        _add_common(p)
        p.set_defaults(fn=fn)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
