"""Batch rendering of tracking, probe-scan, and noise-scan figures."""
from __future__ import annotations

import sys
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import read_ratio_table, read_run_csv, read_scan_cells

UG = 1e-6  # gauss per microgauss
DPI = 120


@dataclass
class FigureSpec:
    figure: str  # tracking | probe_scan | noise_scan
    in_dir: Path
    out_path: Path
    log_x: bool = False
    log_y: bool = False

    KINDS = ("tracking", "probe_scan", "noise_scan")

    def __post_init__(self):
        if self.figure not in self.KINDS:
            raise ValueError(f"figure must be one of {self.KINDS}, got {self.figure!r}")
        self.in_dir = Path(self.in_dir)
        self.out_path = Path(self.out_path)


def _phase_error(fidelity: np.ndarray) -> np.ndarray:
    """Fold a predicted fidelity cos^2(phi) back to |phi| in [0, pi/2]."""
    return np.arccos(np.clip(np.sqrt(np.clip(fidelity, 0.0, 1.0)), 0.0, 1.0))


def _binned(values: np.ndarray, bin_size: int):
    n_bins = values.size // bin_size
    chunks = values[: n_bins * bin_size].reshape(n_bins, bin_size)
    return chunks.mean(axis=1)


def servo_step_from_run(run: dict) -> float:
    """Smallest nonzero estimate move — the servo's one-update resolution."""
    steps = np.abs(np.diff(run["b_estimate_gauss"]))
    steps = steps[steps > 0]
    if steps.size == 0:
        raise ValueError("estimate never moves; cannot infer the servo step")
    return float(steps.min())


def plot_tracking(run_csv, out_path) -> dict:
    """Three stacked panels: field tracking, phase error, binned fidelity.

    Returns a summary with the estimate-vs-applied RMS residual and the
    servo step inferred from the run; the residual is also printed in the
    figure caption.
    """
    run = read_run_csv(run_csv)
    t = run["t_start_s"]
    applied = run["b_applied_gauss"]
    estimate = run["b_estimate_gauss"]
    residual = estimate - applied
    rms = float(np.sqrt(np.nanmean(residual**2)))
    step = servo_step_from_run(run)

    fig, axes = plt.subplots(3, 1, figsize=(7, 8), sharex=True)

    axes[0].plot(t, applied / UG, lw=0.8, label="applied")
    axes[0].plot(t, estimate / UG, lw=0.8, label="estimate")
    axes[0].set_ylabel("field (uG)")
    axes[0].legend(loc="upper left", fontsize=8)
    axes[0].set_title(
        f"tracking: RMS residual {rms / UG:.2f} uG (servo step {step / UG:.2f} uG)",
        fontsize=9,
    )

    axes[1].plot(t, _phase_error(run["f_pred_uncorr"]), lw=0.6, label="uncorrected")
    axes[1].plot(t, _phase_error(run["f_pred_corr"]), lw=0.6, label="corrected")
    axes[1].set_ylabel("|phase error| (rad)")
    axes[1].legend(loc="upper left", fontsize=8)

    data_mask = ~np.isnan(run["data_outcome"])
    outcomes = run["data_outcome"][data_mask]
    bin_size = max(10, outcomes.size // 25)
    n_bins = outcomes.size // bin_size
    if n_bins >= 1:
        means = _binned(outcomes, bin_size)
        err = np.sqrt(means * (1 - means) / bin_size)
        centers = t[data_mask][: n_bins * bin_size].reshape(n_bins, bin_size).mean(axis=1)
        axes[2].errorbar(centers, means, yerr=err, fmt="o", ms=3, label="measured")
        axes[2].plot(
            centers, _binned(run["f_pred_corr"][data_mask], bin_size),
            lw=1.0, label="predicted corrected",
        )
        axes[2].plot(
            centers, _binned(run["f_pred_uncorr"][data_mask], bin_size),
            lw=1.0, ls=":", label="predicted uncorrected",
        )
    axes[2].set_ylabel("fidelity")
    axes[2].set_xlabel("time (s)")
    axes[2].set_ylim(-0.05, 1.05)
    axes[2].legend(loc="lower left", fontsize=8)

    fig.tight_layout()
    fig.savefig(out_path, dpi=DPI)
    plt.close(fig)
    print(f"tracking figure: RMS residual {rms / UG:.3f} uG, servo step {step / UG:.3f} uG")
    return {"rms_residual_gauss": rms, "servo_step_gauss": step}


def _tanh_curve(fit: dict, t: np.ndarray) -> np.ndarray:
    floor = fit.get("f_floor", 0.5)
    return floor + (fit["f_max"] - floor) * 0.5 * (
        1.0 - np.tanh((t - fit["tau0_s"]) / fit["width_s"])
    )


def plot_probe_scan(scan_dir, out_path) -> dict:
    """One subplot per noise strength: points, error bars, and fit curves."""
    cells = read_scan_cells(scan_dir)
    asds = sorted({c.asd_ug for c in cells})
    n = len(asds)
    ncols = min(n, 3)
    nrows = -(-n // ncols)
    fig, axes = plt.subplots(
        nrows, ncols, figsize=(4 * ncols, 3 * nrows), squeeze=False
    )
    colors = {"monitor": "C0", "interleaved": "C1"}
    for k, asd in enumerate(asds):
        ax = axes[k // ncols][k % ncols]
        for cell in (c for c in cells if c.asd_ug == asd):
            color = colors.get(cell.protocol, "C2")
            ax.errorbar(
                cell.probe_times * 1e3, cell.mean_fidelity, yerr=cell.stderr,
                fmt="o", ms=3, color=color, label=cell.protocol,
            )
            if cell.fit is not None:
                grid = np.linspace(
                    cell.probe_times.min(), cell.probe_times.max(), 200
                )
                style = "--" if cell.extrapolated else "-"
                ax.plot(grid * 1e3, _tanh_curve(cell.fit, grid), style, color=color)
                if not cell.extrapolated and cell.tau_max is not None:
                    ax.axvline(cell.tau_max * 1e3, color=color, lw=0.5, alpha=0.5)
        ax.axhline(0.75, color="gray", lw=0.8, ls=":")
        ax.text(
            0.97, 0.95, f"{asd:g} uG/rtHz", transform=ax.transAxes,
            ha="right", va="top", fontsize=9,
        )
        ax.set_ylim(0.4, 1.05)
        ax.set_xlabel("probe time (ms)")
        ax.set_ylabel("fidelity")
        if k == 0:
            ax.legend(fontsize=8, loc="lower left")
    for k in range(n, nrows * ncols):
        axes[k // ncols][k % ncols].axis("off")
    fig.tight_layout()
    fig.savefig(out_path, dpi=DPI)
    plt.close(fig)
    return {"n_panels": n, "n_cells": len(cells)}


def plot_noise_scan(ratio_csv, out_path) -> dict:
    """Log-log tau_max vs noise ASD for each protocol with guide lines."""
    rows = read_ratio_table(ratio_csv)
    protocols = sorted({r["protocol"] for r in rows})
    fig, ax = plt.subplots(figsize=(5.5, 4))
    warned = 0
    for protocol in protocols:
        series = [
            r for r in rows
            if r["protocol"] == protocol and r["tau_max_s"] is not None
        ]
        series.sort(key=lambda r: r["asd_uG_sqrtHz"])
        asd = np.array([r["asd_uG_sqrtHz"] for r in series])
        tau = np.array([r["tau_max_s"] for r in series]) * 1e3
        err = np.array(
            [0.0 if r["tau_max_err_s"] is None else r["tau_max_err_s"] for r in series]
        ) * 1e3
        if np.any(np.diff(tau) >= 0):
            print(
                f"warning: tau_max not monotone decreasing for {protocol}",
                file=sys.stderr,
            )
            warned += 1
        ax.errorbar(asd, tau, yerr=err, fmt="o-", ms=4, label=protocol)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("noise ASD at 1 Hz (uG/rtHz)")
    ax.set_ylabel("max usable probe time (ms)")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=DPI)
    plt.close(fig)
    return {"n_protocols": len(protocols), "warnings": warned}
