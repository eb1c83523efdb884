"""End-to-end acceptance suite.

These tests pin the headline behaviors of the simulator: noise-synthesis
calibration, servo algebra, protocol timing, the tracking and probe-scan
experiments, fit recovery, and byte-level determinism. The scan-based tests
run full seeded experiments and take a few minutes in total.
"""
import math
import time

import numpy as np
import pytest

from ionmonitor.analysis import TanhFit, fit_tanh, max_probe_time, tanh_model
from ionmonitor.cli import main
from ionmonitor.config import DEFAULT_SCAN_ASDS_UG, RunConfig, ScanConfig
from ionmonitor.experiments import (
    default_probe_grid,
    derive_rng,
    noise_calibration_report,
    scan_probe,
    simulate_run,
)
from ionmonitor.physics import DATA_G, MONITOR_M, MU_B_OVER_H_HZ_PER_G, sensitivity
from ionmonitor.protocol import PROTOCOL_INTERLEAVED, PROTOCOL_MONITOR, TimingConfig
from ionmonitor.servo import ServoState, servo_update


def test_noise_calibration():
    start = time.monotonic()
    report = noise_calibration_report(RunConfig(noise_asd_uG_sqrtHz=18.0))
    elapsed = time.monotonic() - start
    assert report["slope"] == pytest.approx(-2.0, abs=0.1)
    target = 3.24e-10
    assert target / 1.3 <= report["psd_1hz_gauss2_per_hz"] <= target * 1.3
    assert report["passed"] is True
    assert elapsed < 10.0


def test_sensitivity_ratio():
    assert sensitivity(MONITOR_M) / sensitivity(DATA_G) == pytest.approx(2.4, rel=1e-12)


class TestServoUnitBehavior:
    def test_step_values(self):
        for tau, expected in [
            (1e-3, 3.5723851e-5),
            (5e-3, 7.1447702e-6),
            (14.5e-3, None),
        ]:
            derived = 0.05 / (MU_B_OVER_H_HZ_PER_G * tau)
            state = ServoState(alpha=0.05, probe_time=tau)
            assert state.step == pytest.approx(derived, rel=1e-12)
            if expected is not None:
                assert state.step == pytest.approx(expected, rel=1e-4)

    @pytest.mark.parametrize("offset_steps", np.arange(0.3, 25.0, 1.7))
    def test_bang_bang_convergence_grid(self, offset_steps):
        state = ServoState(estimate=0.0, alpha=0.05, probe_time=5e-3)
        offset = offset_steps * state.step
        n_converge = math.ceil(offset_steps)
        history = []
        for _ in range(n_converge + 100):
            state = servo_update(state, 1 if offset > state.estimate else 0)
            history.append(state.estimate)
        tail = history[n_converge:]
        # within one step of the offset, then a bounded limit cycle
        assert all(abs(e - offset) <= state.step * (1 + 1e-12) for e in tail)
        assert max(tail) - min(tail) <= 2 * state.step * (1 + 1e-12)


@pytest.fixture(scope="module")
def runs():
    """Corrected/uncorrected mean fidelities for 20 seeded 45 s runs."""
    cfg = RunConfig(noise_asd_uG_sqrtHz=18.0, duration_s=45.0)
    out = []
    for seed in range(20):
        rng = derive_rng(2026, 3, seed)
        result = simulate_run(cfg, rng)
        out.append(
            (result.mean_predicted_corrected(), result.mean_predicted_uncorrected())
        )
    return out


class TestTrackingAnalogue:
    """Tracking at the headline noise strength: 20 seeded 45 s runs.

    The corrected fidelity is expected to beat the uncorrected one in at
    least 19 of 20 runs with a median above 0.85. With the calibrated noise
    (10.3 uG field diffusion per 16.7 ms update) and the one-step-per-update
    servo (2.3 uG steps), the tracker cannot hold the fringe, so both
    fidelities sit near the 0.5 floor; see the repository notes for the
    quantitative argument. The assertions are kept as stated and fail.
    """

    def test_realization_count(self):
        cfg = RunConfig(noise_asd_uG_sqrtHz=18.0, duration_s=45.0)
        result = simulate_run(cfg, derive_rng(2026, 3, 0))
        assert len(result.records) == pytest.approx(2700, abs=20)
        assert result.timing.monitor_period_s == pytest.approx(16.7e-3, abs=0.1e-3)

    def test_corrected_beats_uncorrected(self, runs):
        # known failure: field diffusion per update (~4.5 servo steps)
        # exceeds the one-step slew limit at this noise strength, so
        # corrected tracking cannot hold the fringe
        wins = sum(1 for corr, uncorr in runs if corr > uncorr)
        assert wins >= 19

    def test_median_corrected_fidelity(self, runs):
        # known failure: the corrected fidelity sits at the decohered
        # floor (~0.5) for the same slew-limit reason
        assert np.median([corr for corr, _ in runs]) > 0.85


def test_duty_cycle():
    timing = TimingConfig(data_probe_s=50e-3, prep_s=100e-6, spam_s=1.1e-3)
    ratio = timing.interleaved_pair_period_s / timing.monitor_period_s
    assert 1.9 <= ratio <= 2.0


@pytest.fixture(scope="module")
def decade_scan():
    """Three repetitions of the probe-time scan over the five decade ASDs.

    Each cell is 10 one-minute repeats; probe grids straddle each strength's
    coherence transition. Serial runtime is a few minutes.
    """
    reps = []
    grids = {asd: default_probe_grid(asd) for asd in DEFAULT_SCAN_ASDS_UG}
    for rep in range(3):
        base = RunConfig(duration_s=60.0, repeats=10, seed=400 + rep)
        scan = ScanConfig(base=base, noise_asds_uG_sqrtHz=list(DEFAULT_SCAN_ASDS_UG))
        reps.append(scan_probe(scan, probe_times_by_asd=grids))
    return reps


def test_scan_cells_all_fitted(decade_scan):
    for results in decade_scan:
        for (protocol, asd), cell in results.items():
            assert cell.tau_max is not None, (protocol, asd)
            assert not cell.extrapolated, (protocol, asd)


def test_probe_time_extension_ratio(decade_scan):
    # known failure: the 2.4 Hz coil filter makes short-horizon drift
    # ballistic and correlated across both protocols' update intervals, and
    # the servo limit cycle caps weak-noise plateaus protocol-independently;
    # measured median ratios are ~1.1-1.2 at the weak strengths and rise
    # toward ~1.45 at the strongest — the opposite trend
    medians = {}
    for asd in DEFAULT_SCAN_ASDS_UG:
        ratios = [
            results[(PROTOCOL_MONITOR, asd)].tau_max
            / results[(PROTOCOL_INTERLEAVED, asd)].tau_max
            for results in decade_scan
        ]
        medians[asd] = float(np.median(ratios))
    for asd in DEFAULT_SCAN_ASDS_UG[:3]:
        assert 1.25 <= medians[asd] <= 1.55, medians
    assert medians[DEFAULT_SCAN_ASDS_UG[-1]] < 1.3, medians


def test_tau_max_monotone_in_noise_strength(decade_scan):
    for results in decade_scan:
        for protocol in (PROTOCOL_MONITOR, PROTOCOL_INTERLEAVED):
            taus = [results[(protocol, asd)].tau_max for asd in DEFAULT_SCAN_ASDS_UG]
            assert all(b < a for a, b in zip(taus, taus[1:])), (protocol, taus)


class TestFitRecovery:
    def test_noise_free_exact(self):
        t = np.linspace(2e-3, 20e-3, 12)
        y = tanh_model(t, 0.97, 9e-3, 2.5e-3)
        fit = fit_tanh(t, y, np.full(t.size, 0.01))
        assert fit.f_max == pytest.approx(0.97, abs=1e-7)
        assert fit.tau0 == pytest.approx(9e-3, rel=1e-6)
        assert fit.width == pytest.approx(2.5e-3, rel=1e-6)

    def test_monte_carlo_recovery(self):
        rng = np.random.default_rng(123)
        hits = 0
        trials = 40
        for _ in range(trials):
            t = np.linspace(2e-3, 20e-3, 15)
            y = tanh_model(t, 0.97, 9e-3, 2.5e-3) + rng.normal(0, 0.02, t.size)
            fit = fit_tanh(t, y, np.full(t.size, 0.02))
            if abs(fit.tau0 - 9e-3) <= 0.5e-3:
                hits += 1
        assert hits >= round(0.95 * trials)

    def test_closed_form_crossing_1000_fits(self):
        rng = np.random.default_rng(321)
        for _ in range(1000):
            f_max = rng.uniform(0.76, 1.0)
            tau0 = rng.uniform(1e-3, 50e-3)
            width = rng.uniform(0.2e-3, 20e-3)
            fit = TanhFit(f_max=f_max, tau0=tau0, width=width, residual_rms=0.0)
            tau = max_probe_time(fit)
            closed = tau0 + width * math.atanh(1 - 0.5 / (f_max - 0.5))
            assert tau == pytest.approx(closed, rel=1e-9, abs=1e-15)
            assert fit(tau) == pytest.approx(0.75, rel=1e-9)


class TestDeterminism:
    def test_track_byte_identical(self, tmp_path):
        args = ["track", "--seed", "7", "--set", "duration_s=3"]
        for name in ("a", "b"):
            assert main(args + ["--out", str(tmp_path / name)]) == 0
        for rel in ("track/run.csv", "summary.json"):
            assert (tmp_path / "a" / rel).read_bytes() == (
                tmp_path / "b" / rel
            ).read_bytes()

    def test_scan_byte_identical(self, tmp_path):
        args = [
            "scan-probe", "--seed", "7",
            "--set", "noise_asds_uG_sqrtHz=17.9",
            "--set", "probe_times_s=0.002,0.004,0.006,0.009",
            "--set", "duration_s=3",
            "--set", "repeats=2",
        ]
        outputs = []
        for name in ("a", "b"):
            main(args + ["--out", str(tmp_path / name)])
            root = tmp_path / name
            outputs.append(
                {
                    str(p.relative_to(root)): p.read_bytes()
                    for p in sorted(root.rglob("*"))
                    if p.is_file()
                }
            )
        assert outputs[0] == outputs[1]

    def test_psd_check_byte_identical(self, tmp_path):
        for name in ("a", "b"):
            assert main(["psd-check", "--out", str(tmp_path / name)]) == 0
        assert (tmp_path / "a" / "psd_check.json").read_bytes() == (
            tmp_path / "b" / "psd_check.json"
        ).read_bytes()
