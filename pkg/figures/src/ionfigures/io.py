"""Readers for the simulator's documented CSV/JSON output schemas.

All readers validate headers against the owning schema and raise
``SchemaError`` naming the first missing column; they never modify the
input files.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

RUN_COLUMNS = [
    "i",
    "t_start_s",
    "t_end_s",
    "b_applied_gauss",
    "b_estimate_gauss",
    "monitor_outcome",
    "data_outcome",
    "f_pred_corr",
    "f_pred_uncorr",
]
POINTS_COLUMNS = ["probe_time_s", "mean_fidelity", "stderr"]
RATIO_COLUMNS = ["asd_uG_sqrtHz", "protocol", "tau_max_s", "tau_max_err_s", "ratio"]


class SchemaError(ValueError):
    """An input file does not match the expected CSV schema."""


def _check_header(path: Path, header: list[str], expected: list[str]) -> None:
    for column in expected:
        if column not in header:
            raise SchemaError(f"{path}: missing column {column!r}")


def _read_rows(path: Path, expected: list[str]) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise SchemaError(f"{path}: empty file, no header")
        _check_header(path, list(reader.fieldnames), expected)
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def _column(rows: list[dict], name: str) -> np.ndarray:
    return np.array(
        [float(r[name]) if r[name] not in ("", None) else np.nan for r in rows]
    )


def read_run_csv(path) -> dict[str, np.ndarray]:
    """Per-realization tracking run; blank cells become NaN."""
    rows = _read_rows(Path(path), RUN_COLUMNS)
    return {name: _column(rows, name) for name in RUN_COLUMNS}


@dataclass
class ScanCell:
    protocol: str
    asd_ug: float
    probe_times: np.ndarray
    mean_fidelity: np.ndarray
    stderr: np.ndarray
    fit: dict | None
    tau_max: float | None
    extrapolated: bool


def read_scan_cells(scan_dir) -> list[ScanCell]:
    """All (protocol, noise strength) cells under ``<out>/scan/``."""
    scan_dir = Path(scan_dir)
    cells = []
    for points_path in sorted(scan_dir.glob("*/*/points.csv")):
        cell_dir = points_path.parent
        rows = _read_rows(points_path, POINTS_COLUMNS)
        sidecar = cell_dir / "fit.json"
        summary = json.loads(sidecar.read_text()) if sidecar.exists() else {}
        cells.append(
            ScanCell(
                protocol=cell_dir.parent.name,
                asd_ug=float(cell_dir.name),
                probe_times=_column(rows, "probe_time_s"),
                mean_fidelity=_column(rows, "mean_fidelity"),
                stderr=_column(rows, "stderr"),
                fit=summary.get("fit"),
                tau_max=summary.get("tau_max_s"),
                extrapolated=bool(summary.get("extrapolated", False)),
            )
        )
    if not cells:
        raise SchemaError(f"{scan_dir}: no scan cells found")
    return cells


def read_ratio_table(path) -> list[dict]:
    """tau_max vs noise-strength table; blank numeric cells become None."""
    rows = _read_rows(Path(path), RATIO_COLUMNS)
    out = []
    for row in rows:
        parsed = {"protocol": row["protocol"]}
        for name in ("asd_uG_sqrtHz", "tau_max_s", "tau_max_err_s", "ratio"):
            parsed[name] = float(row[name]) if row[name] not in ("", None) else None
        out.append(parsed)
    return out
