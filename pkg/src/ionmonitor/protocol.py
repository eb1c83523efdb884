"""Timeline simulation of the parallel-monitor and interleaved protocols.

Each realization reads the field trace over its probe windows, applies the
estimate in force (from the previous realization), samples outcomes, and
advances the servo. Runs are strictly sequential; parallelism lives one level
up, across seeds and scan cells.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import physics
from .noise import FieldTrace
from .physics import DATA_G, sensitivity
from .servo import ServoState, servo_update

PROTOCOL_MONITOR = "monitor"
PROTOCOL_INTERLEAVED = "interleaved"


@dataclass(frozen=True)
class TimingConfig:
    """Durations of the pieces of one experimental realization.

    The monitor Ramsey probe envelops the data probe plus the data qubit's
    SPAM block, so monitor_probe_s = data_probe_s + spam_s.
    """

    data_probe_s: float
    prep_s: float = 100e-6
    spam_s: float = 1.1e-3

    def __post_init__(self) -> None:
        for name in ("data_probe_s", "prep_s", "spam_s"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def monitor_probe_s(self) -> float:
        return self.data_probe_s + self.spam_s

    @property
    def monitor_period_s(self) -> float:
        """Wall time of one parallel-monitor realization."""
        return self.prep_s + self.monitor_probe_s + self.spam_s

    @property
    def interleaved_pair_period_s(self) -> float:
        """Wall time of one calibration + data realization pair."""
        return 2 * self.prep_s + self.monitor_probe_s + self.data_probe_s + 2 * self.spam_s


@dataclass
class RealizationRecord:
    """Per-realization timestamps, field integrals, outcomes, and fidelities.

    Fields that do not apply to a realization (e.g. the data outcome of an
    interleaved calibration realization) are None / NaN.
    """

    index: int
    t_start: float
    t_end: float
    applied_integral_monitor: float
    applied_integral_data: float
    estimate_before: float
    estimate_after: float
    monitor_outcome: int | None
    data_outcome: int | None
    predicted_fidelity_corrected: float
    predicted_fidelity_uncorrected: float


@dataclass
class RunResult:
    """Ordered realization records for one simulated run."""

    protocol: str
    records: list[RealizationRecord]
    timing: TimingConfig
    servo_init: ServoState
    fidelity_convention: str
    spam_fidelity: float
    seed: int | None = None

    @property
    def wall_time_simulated(self) -> float:
        return self.records[-1].t_end if self.records else 0.0

    def data_records(self) -> list[RealizationRecord]:
        return [r for r in self.records if r.data_outcome is not None]

    def data_outcomes(self) -> np.ndarray:
        return np.array([r.data_outcome for r in self.data_records()], dtype=int)

    def measured_fidelity(self) -> float:
        """Fraction of data realizations that returned the intended state."""
        outcomes = self.data_outcomes()
        if outcomes.size == 0:
            raise ValueError("run contains no data realizations")
        return float(outcomes.mean())

    def mean_predicted_corrected(self) -> float:
        vals = [r.predicted_fidelity_corrected for r in self.data_records()]
        return float(np.mean(vals))

    def mean_predicted_uncorrected(self) -> float:
        vals = [r.predicted_fidelity_uncorrected for r in self.data_records()]
        return float(np.mean(vals))

    def estimates(self) -> np.ndarray:
        return np.array([r.estimate_after for r in self.records])

    def to_csv(self, path) -> None:
        """One row per realization; absent outcomes/fidelities left empty."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                [
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
            )
            tau_m = self.timing.monitor_probe_s
            tau_d = self.timing.data_probe_s
            for r in self.records:
                if not math.isnan(r.applied_integral_monitor):
                    b_applied = r.applied_integral_monitor / tau_m
                else:
                    b_applied = r.applied_integral_data / tau_d
                writer.writerow(
                    [
                        r.index,
                        f"{r.t_start:.9f}",
                        f"{r.t_end:.9f}",
                        f"{b_applied:.12e}",
                        f"{r.estimate_after:.12e}",
                        "" if r.monitor_outcome is None else r.monitor_outcome,
                        "" if r.data_outcome is None else r.data_outcome,
                        _fmt(r.predicted_fidelity_corrected),
                        _fmt(r.predicted_fidelity_uncorrected),
                    ]
                )


def _fmt(x: float) -> str:
    return "" if math.isnan(x) else f"{x:.9f}"


def _phase_argument(convention: str) -> float:
    if convention == "paper":
        return 1.0
    if convention == "half-angle":
        return 0.5
    raise ValueError(f"unknown fidelity convention: {convention}")


def run_monitor_protocol(
    noise: FieldTrace,
    timing: TimingConfig,
    servo_init: ServoState,
    duration: float,
    rng: np.random.Generator,
    *,
    spam_fidelity: float = 0.99,
    fidelity_convention: str = "paper",
    projection_noise: bool = True,
) -> RunResult:
    """Parallel-monitor run: monitor probe and data probe share each window.

    Per realization: prep dead time, then the monitor Ramsey window with the
    data Ramsey plus data SPAM nested inside it, then the monitor SPAM dead
    time. The estimate applied to realization i is the one produced by
    realization i-1. The monitor outcome is sampled at mid-fringe on the
    residual data-qubit phase error: the field averaged over the monitor
    window minus the estimate, converted to phase with the data sensitivity
    and the data probe time. ``projection_noise=False`` replaces all sampling
    by deterministic thresholding (for convergence oracles).
    """
    period = timing.monitor_period_s
    n = int(duration / period)
    t_last = noise.t0 + n * period
    if n < 1 or t_last > noise.t_end + 1e-9 * noise.dt:
        raise ValueError("noise trace does not cover the requested duration")

    half = _phase_argument(fidelity_convention)
    sens_d = sensitivity(DATA_G)
    tau_d = timing.data_probe_s
    tau_m = timing.monitor_probe_s
    two_pi = 2.0 * math.pi

    starts = noise.t0 + period * np.arange(n)
    probe_start = starts + timing.prep_s
    integ_m = np.atleast_1d(noise.integrate(probe_start, probe_start + tau_m))
    integ_d = np.atleast_1d(noise.integrate(probe_start, probe_start + tau_d))

    state = servo_init
    records: list[RealizationRecord] = []
    cos = math.cos
    sin = math.sin
    for i in range(n):
        est = state.estimate
        dphi_m = two_pi * sens_d * (integ_m[i] / tau_m - est) * tau_d
        if projection_noise:
            p_m = 0.5 * (1.0 + sin(dphi_m))
            m = physics.sample_outcome(p_m, rng)
            m = physics.spam_corrupt(m, spam_fidelity, rng)
        else:
            m = 1 if dphi_m > 0 else 0
        state = servo_update(state, m)

        dphi_d = two_pi * sens_d * (integ_d[i] - est * tau_d)
        f_corr = cos(half * dphi_d) ** 2
        f_unc = cos(half * two_pi * sens_d * integ_d[i]) ** 2
        if projection_noise:
            d = physics.sample_outcome(f_corr, rng)
            d = physics.spam_corrupt(d, spam_fidelity, rng)
        else:
            d = 1 if f_corr > 0.5 else 0

        records.append(
            RealizationRecord(
                index=i,
                t_start=starts[i],
                t_end=starts[i] + period,
                applied_integral_monitor=integ_m[i],
                applied_integral_data=integ_d[i],
                estimate_before=est,
                estimate_after=state.estimate,
                monitor_outcome=m,
                data_outcome=d,
                predicted_fidelity_corrected=f_corr,
                predicted_fidelity_uncorrected=f_unc,
            )
        )
    return RunResult(
        protocol=PROTOCOL_MONITOR,
        records=records,
        timing=timing,
        servo_init=servo_init,
        fidelity_convention=fidelity_convention,
        spam_fidelity=spam_fidelity,
    )


def run_interleaved_protocol(
    noise: FieldTrace,
    timing: TimingConfig,
    servo_init: ServoState,
    duration: float,
    rng: np.random.Generator,
    *,
    spam_fidelity: float = 0.99,
    fidelity_convention: str = "paper",
    projection_noise: bool = True,
    calibration_encoding: str = "monitor",
) -> RunResult:
    """Single-ion run alternating calibration and data realizations.

    Calibration realizations use the monitor-length probe and update the servo;
    data realizations use the data-length probe and leave the servo untouched.
    ``calibration_encoding`` selects which encoding carries the calibration
    probe ("monitor" for the m-type default, "data" for g-type); the servo
    discriminator is the residual phase error referred to the data qubit in
    either case, so the choice is recorded but does not alter outcome
    statistics.
    """
    if calibration_encoding not in ("monitor", "data"):
        raise ValueError(f"unknown calibration encoding: {calibration_encoding}")

    pair_period = timing.interleaved_pair_period_s
    n_pairs = int(duration / pair_period)
    t_last = noise.t0 + n_pairs * pair_period
    if n_pairs < 1 or t_last > noise.t_end + 1e-9 * noise.dt:
        raise ValueError("noise trace does not cover the requested duration")

    half = _phase_argument(fidelity_convention)
    sens_d = sensitivity(DATA_G)
    tau_d = timing.data_probe_s
    tau_m = timing.monitor_probe_s
    cal_block = timing.prep_s + tau_m + timing.spam_s
    two_pi = 2.0 * math.pi

    pair_starts = noise.t0 + pair_period * np.arange(n_pairs)
    cal_probe_start = pair_starts + timing.prep_s
    data_start = pair_starts + cal_block
    data_probe_start = data_start + timing.prep_s
    integ_cal = np.atleast_1d(noise.integrate(cal_probe_start, cal_probe_start + tau_m))
    integ_d = np.atleast_1d(noise.integrate(data_probe_start, data_probe_start + tau_d))

    state = servo_init
    records: list[RealizationRecord] = []
    nan = float("nan")
    cos = math.cos
    sin = math.sin
    for i in range(n_pairs):
        # calibration realization: servo update, no data qubit
        est = state.estimate
        dphi_c = two_pi * sens_d * (integ_cal[i] / tau_m - est) * tau_d
        if projection_noise:
            p_c = 0.5 * (1.0 + sin(dphi_c))
            m = physics.sample_outcome(p_c, rng)
            m = physics.spam_corrupt(m, spam_fidelity, rng)
        else:
            m = 1 if dphi_c > 0 else 0
        state = servo_update(state, m)
        records.append(
            RealizationRecord(
                index=2 * i,
                t_start=pair_starts[i],
                t_end=pair_starts[i] + cal_block,
                applied_integral_monitor=integ_cal[i],
                applied_integral_data=nan,
                estimate_before=est,
                estimate_after=state.estimate,
                monitor_outcome=m,
                data_outcome=None,
                predicted_fidelity_corrected=nan,
                predicted_fidelity_uncorrected=nan,
            )
        )

        # data realization: estimate frozen at the calibration result
        est = state.estimate
        dphi_d = two_pi * sens_d * (integ_d[i] - est * tau_d)
        f_corr = cos(half * dphi_d) ** 2
        f_unc = cos(half * two_pi * sens_d * integ_d[i]) ** 2
        if projection_noise:
            d = physics.sample_outcome(f_corr, rng)
            d = physics.spam_corrupt(d, spam_fidelity, rng)
        else:
            d = 1 if f_corr > 0.5 else 0
        records.append(
            RealizationRecord(
                index=2 * i + 1,
                t_start=data_start[i],
                t_end=pair_starts[i] + pair_period,
                applied_integral_monitor=nan,
                applied_integral_data=integ_d[i],
                estimate_before=est,
                estimate_after=est,
                monitor_outcome=None,
                data_outcome=d,
                predicted_fidelity_corrected=f_corr,
                predicted_fidelity_uncorrected=f_unc,
            )
        )
    return RunResult(
        protocol=PROTOCOL_INTERLEAVED,
        records=records,
        timing=timing,
        servo_init=servo_init,
        fidelity_convention=fidelity_convention,
        spam_fidelity=spam_fidelity,
    )


def uncorrected_reference(
    records: list[RealizationRecord], convention: str = "paper"
) -> np.ndarray:
    """Predicted fidelities had the estimate been held at zero throughout."""
    half = _phase_argument(convention)
    sens_d = sensitivity(DATA_G)
    out = []
    for r in records:
        if math.isnan(r.applied_integral_data):
            continue
        dphi = 2.0 * math.pi * sens_d * r.applied_integral_data
        out.append(math.cos(half * dphi) ** 2)
    return np.array(out)
