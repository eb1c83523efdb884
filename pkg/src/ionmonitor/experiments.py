"""Experiment drivers: seeded runs, probe-time scans, and noise-strength scans.

Every scan cell derives its RNG from (master seed, protocol index, noise
index, probe index, repeat index), so cells are reproducible regardless of
execution order or worker count.
"""
from __future__ import annotations

import csv
import json
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .analysis import (
    NeverAboveThresholdError,
    NoTransitionError,
    ScanResult,
    compare_protocols,
    fit_tanh,
    max_probe_time,
    max_probe_time_err,
)
from .config import RunConfig, ScanConfig
from .noise import (
    NoiseSpec,
    apply_lowpass,
    psd_band_level,
    psd_slope_loglog,
    synthesize_random_walk,
    welch_psd,
)
from .protocol import (
    PROTOCOL_INTERLEAVED,
    PROTOCOL_MONITOR,
    RunResult,
    TimingConfig,
    run_interleaved_protocol,
    run_monitor_protocol,
)
from .servo import ServoState

PROTOCOL_INDEX = {PROTOCOL_MONITOR: 0, PROTOCOL_INTERLEAVED: 1}


def derive_rng(master_seed: int, *key: int) -> np.random.Generator:
    """Independent generator for one cell of a run/scan grid."""
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=key))


def make_timing(cfg: RunConfig, data_probe_s: float | None = None) -> TimingConfig:
    return TimingConfig(
        data_probe_s=cfg.data_probe_s if data_probe_s is None else data_probe_s,
        prep_s=cfg.prep_s,
        spam_s=cfg.spam_s,
    )


def simulate_run(
    cfg: RunConfig,
    rng: np.random.Generator,
    *,
    protocol: str | None = None,
    data_probe_s: float | None = None,
    noise_asd_gauss: float | None = None,
    duration_s: float | None = None,
) -> RunResult:
    """One seeded run: synthesize noise, low-pass it, and drive the protocol."""
    protocol = cfg.protocol if protocol is None else protocol
    asd = cfg.noise_asd_gauss if noise_asd_gauss is None else noise_asd_gauss
    duration = cfg.duration_s if duration_s is None else duration_s
    timing = make_timing(cfg, data_probe_s)
    period = (
        timing.monitor_period_s
        if protocol == PROTOCOL_MONITOR
        else timing.interleaved_pair_period_s
    )
    spec = NoiseSpec(
        asd_at_1hz=asd, cutoff_hz=cfg.cutoff_hz, sample_rate_hz=cfg.sample_rate_hz
    )
    commanded = synthesize_random_walk(spec, duration + 2 * period, rng)
    applied = apply_lowpass(commanded, cfg.cutoff_hz)
    servo_init = ServoState(
        estimate=0.0, alpha=cfg.alpha, probe_time=timing.monitor_probe_s
    )
    kwargs = dict(
        spam_fidelity=cfg.spam_fidelity,
        fidelity_convention=cfg.fidelity_convention,
    )
    if protocol == PROTOCOL_MONITOR:
        return run_monitor_protocol(
            applied, timing, servo_init, duration, rng, **kwargs
        )
    return run_interleaved_protocol(
        applied,
        timing,
        servo_init,
        duration,
        rng,
        calibration_encoding=cfg.interleaved_cal_encoding,
        **kwargs,
    )


def _atomic_write(path: Path, writer) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    os.close(fd)
    try:
        writer(tmp)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.remove(tmp)


def run_track(cfg: RunConfig, out_dir: Path | None = None) -> dict:
    """Single tracking run; optionally writes track/run.csv and summary fields."""
    rng = derive_rng(cfg.seed, PROTOCOL_INDEX[cfg.protocol])
    result = simulate_run(cfg, rng)
    last = result.data_records()[-1]
    tau_d = result.timing.data_probe_s
    summary = {
        "protocol": cfg.protocol,
        "n_realizations": len(result.records),
        "n_data_realizations": len(result.data_records()),
        "measured_fidelity": result.measured_fidelity(),
        "mean_predicted_corrected": result.mean_predicted_corrected(),
        "mean_predicted_uncorrected": result.mean_predicted_uncorrected(),
        "final_estimate_gauss": float(last.estimate_after),
        "final_estimate_error_gauss": float(
            last.estimate_after - last.applied_integral_data / tau_d
        ),
        "wall_time_simulated_s": result.wall_time_simulated,
    }
    if out_dir is not None:
        track_dir = Path(out_dir) / "track"
        _atomic_write(track_dir / "run.csv", result.to_csv)
    return summary


def _cell_fidelity(args) -> tuple:
    """One scan cell run; top-level so it can cross a process boundary.

    Interleaved cells are clipped to the same total realization count as the
    monitor cell of equal probe time (pairs = monitor realizations / 2) rather
    than the same wall time.
    """
    cfg, protocol, asd_ug, probe_s, key = args
    rng = derive_rng(cfg.seed, *key)
    duration = cfg.duration_s
    if protocol == PROTOCOL_INTERLEAVED:
        timing = make_timing(cfg, probe_s)
        pairs = int(duration / timing.monitor_period_s) // 2
        duration = max(pairs, 1) * timing.interleaved_pair_period_s * (1 + 1e-12)
    result = simulate_run(
        cfg,
        rng,
        protocol=protocol,
        data_probe_s=probe_s,
        noise_asd_gauss=asd_ug * 1e-6,
        duration_s=duration,
    )
    return key, result.measured_fidelity()


def default_probe_grid(asd_ug: float, n_points: int = 7) -> list[float]:
    """Probe-time grid straddling the coherence transition at one noise strength.

    The transition time follows an empirical power law in the noise ASD
    (microgauss/sqrt(Hz)); the grid spans a factor of ~10 around it so the
    tanh fit sees both the plateau and the floor.
    """
    if asd_ug <= 0:
        raise ValueError(f"asd_ug must be positive, got {asd_ug}")
    tau_star = 11.8e-3 * asd_ug**-0.48
    return list(np.geomspace(tau_star / 6.0, tau_star * 3.0, n_points))


def scan_probe(
    scan: ScanConfig,
    out_dir: Path | None = None,
    workers: int = 1,
    protocols: tuple[str, ...] = (PROTOCOL_MONITOR, PROTOCOL_INTERLEAVED),
    probe_times_by_asd: dict[float, list[float]] | None = None,
) -> dict[tuple[str, float], ScanResult]:
    """Fidelity-vs-probe-time scan over (protocol, noise strength) cells.

    ``probe_times_by_asd`` optionally overrides the probe grid per noise
    strength (the scanned range must straddle each strength's coherence
    transition for the fits to be meaningful).
    """
    cfg = scan.base
    jobs = []
    for protocol in protocols:
        p_idx = PROTOCOL_INDEX[protocol]
        for n_idx, asd_ug in enumerate(scan.noise_asds_uG_sqrtHz):
            probes = (
                probe_times_by_asd[asd_ug]
                if probe_times_by_asd is not None
                else scan.probe_times_s
            )
            for t_idx, probe_s in enumerate(probes):
                for rep in range(cfg.repeats):
                    key = (p_idx, n_idx, t_idx, rep)
                    jobs.append((cfg, protocol, asd_ug, probe_s, key))

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = dict(pool.map(_cell_fidelity, jobs, chunksize=4))
    else:
        outcomes = dict(map(_cell_fidelity, jobs))

    results: dict[tuple[str, float], ScanResult] = {}
    for protocol in protocols:
        p_idx = PROTOCOL_INDEX[protocol]
        for n_idx, asd_ug in enumerate(scan.noise_asds_uG_sqrtHz):
            probes = (
                probe_times_by_asd[asd_ug]
                if probe_times_by_asd is not None
                else scan.probe_times_s
            )
            means, errs = [], []
            for t_idx in range(len(probes)):
                vals = np.array(
                    [outcomes[(p_idx, n_idx, t_idx, rep)] for rep in range(cfg.repeats)]
                )
                means.append(vals.mean())
                errs.append(
                    vals.std(ddof=1) / math.sqrt(len(vals)) if len(vals) > 1 else 0.0
                )
            result = ScanResult(
                noise_asd_1hz=asd_ug * 1e-6,
                protocol=protocol,
                probe_times=np.asarray(probes, dtype=float),
                mean_fidelity=np.array(means),
                stderr=np.array(errs),
            )
            _extract_tau_max(result)
            results[(protocol, asd_ug)] = result
            if out_dir is not None:
                cell_dir = Path(out_dir) / "scan" / protocol / f"{asd_ug:g}"
                _atomic_write(cell_dir / "points.csv", result.to_csv)
                _atomic_write(cell_dir / "fit.json", result.write_fit_json)
    return results


def _extract_tau_max(result: ScanResult) -> None:
    try:
        result.fit = fit_tanh(result.probe_times, result.mean_fidelity, result.stderr)
    except (NoTransitionError, ValueError):
        result.fit = None
        result.extrapolated = True
        return
    try:
        result.tau_max = max_probe_time(result.fit)
        result.tau_max_err = max_probe_time_err(result.fit)
    except NeverAboveThresholdError:
        result.extrapolated = True
        return
    lo, hi = result.probe_times.min(), result.probe_times.max()
    result.extrapolated = not lo <= result.tau_max <= hi


def ratio_table(
    results: dict[tuple[str, float], ScanResult], asds_ug: list[float]
) -> list[dict]:
    """tau_max rows per (asd, protocol) with monitor/interleaved ratios."""
    rows = []
    for asd_ug in asds_ug:
        scan_m = results.get((PROTOCOL_MONITOR, asd_ug))
        scan_i = results.get((PROTOCOL_INTERLEAVED, asd_ug))
        ratio = err = None
        if (
            scan_m is not None
            and scan_i is not None
            and scan_m.tau_max is not None
            and scan_i.tau_max is not None
        ):
            ratio, err = compare_protocols(scan_m, scan_i)
        for scan in (scan_m, scan_i):
            if scan is None:
                continue
            rows.append(
                {
                    "asd_uG_sqrtHz": asd_ug,
                    "protocol": scan.protocol,
                    "tau_max_s": scan.tau_max,
                    "tau_max_err_s": scan.tau_max_err,
                    "ratio": ratio if scan.protocol == PROTOCOL_MONITOR else None,
                }
            )
    return rows


def write_ratio_csv(rows: list[dict], path: Path, include_ratio: bool = True) -> None:
    columns = ["asd_uG_sqrtHz", "protocol", "tau_max_s", "tau_max_err_s"]
    if include_ratio:
        columns.append("ratio")

    def writer(tmp):
        with open(tmp, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(columns)
            for row in rows:
                w.writerow(["" if row[c] is None else row[c] for c in columns])

    _atomic_write(Path(path), writer)


def noise_calibration_report(
    cfg: RunConfig, duration_s: float = 3000.0, seed_key: int = 0
) -> dict:
    """Self-test of the noise synthesis against the Welch oracle.

    Checks the log-log slope over [0.1, 1] Hz (target -2.0 +/- 0.1) and the
    1 Hz PSD level (target asd^2 within a factor of 1.3) on the commanded
    (pre-low-pass) trace.
    """
    spec = NoiseSpec(
        asd_at_1hz=cfg.noise_asd_gauss,
        cutoff_hz=cfg.cutoff_hz,
        sample_rate_hz=cfg.sample_rate_hz,
    )
    if spec.asd_at_1hz == 0:
        return {
            "zero_power": True,
            "passed": True,
            "note": "zero noise strength: spectrum identically zero",
        }
    rng = derive_rng(cfg.seed, 2, seed_key)
    trace = synthesize_random_walk(spec, duration_s, rng)
    n = trace.samples.size
    seg_slope = min(32768, n // 4)
    seg_level = min(8192, n // 8)
    slope = psd_slope_loglog(welch_psd(trace, seg_slope), 0.1, 1.0)
    level = psd_band_level(welch_psd(trace, seg_level), f_ref=1.0)
    target = spec.asd_at_1hz**2
    slope_ok = abs(slope + 2.0) <= 0.1
    level_ok = target / 1.3 <= level <= target * 1.3
    return {
        "zero_power": False,
        "duration_s": duration_s,
        "slope": slope,
        "slope_ok": slope_ok,
        "psd_1hz_gauss2_per_hz": level,
        "psd_1hz_target": target,
        "level_ok": level_ok,
        "passed": slope_ok and level_ok,
    }


def write_json(obj: dict, path: Path) -> None:
    def writer(tmp):
        with open(tmp, "w") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True)
            fh.write("\n")

    _atomic_write(Path(path), writer)
