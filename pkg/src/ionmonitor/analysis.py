"""Fidelity binning, tanh coherence fits, and protocol comparison."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

FIDELITY_FLOOR = 0.5
THRESHOLD_FIDELITY = 0.75  # 50% contrast


class NoTransitionError(ValueError):
    """The data show no high-to-low fidelity transition to fit."""


class NeverAboveThresholdError(ValueError):
    """The fitted curve never reaches the threshold fidelity."""


@dataclass
class FidelitySeries:
    bin_centers: np.ndarray
    mean_fidelity: np.ndarray
    stderr: np.ndarray


@dataclass
class TanhFit:
    """Parameters of F(tau) = 0.5 + (f_max - 0.5) * (1 - tanh((tau-tau0)/width)) / 2."""

    f_max: float
    tau0: float
    width: float
    residual_rms: float
    f_floor: float = FIDELITY_FLOOR
    covariance: np.ndarray | None = None  # over (f_max, tau0, width)

    def __call__(self, tau):
        return tanh_model(tau, self.f_max, self.tau0, self.width, self.f_floor)


@dataclass
class ScanResult:
    """Fidelity-vs-probe-time scan for one (protocol, noise strength) cell."""

    noise_asd_1hz: float  # gauss/sqrt(Hz)
    protocol: str
    probe_times: np.ndarray
    mean_fidelity: np.ndarray
    stderr: np.ndarray
    fit: TanhFit | None = None
    tau_max: float | None = None
    tau_max_err: float | None = None
    extrapolated: bool = False

    def to_csv(self, path) -> None:
        data = np.column_stack([self.probe_times, self.mean_fidelity, self.stderr])
        np.savetxt(
            path,
            data,
            delimiter=",",
            header="probe_time_s,mean_fidelity,stderr",
            comments="",
        )

    def fit_summary(self) -> dict:
        out = {
            "noise_asd_1hz_gauss_sqrthz": self.noise_asd_1hz,
            "protocol": self.protocol,
            "tau_max_s": self.tau_max,
            "tau_max_err_s": self.tau_max_err,
            "extrapolated": self.extrapolated,
        }
        if self.fit is not None:
            out["fit"] = {
                "f_max": self.fit.f_max,
                "f_floor": self.fit.f_floor,
                "tau0_s": self.fit.tau0,
                "width_s": self.fit.width,
                "residual_rms": self.fit.residual_rms,
            }
        return out

    def write_fit_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.fit_summary(), fh, indent=2)
            fh.write("\n")


def bin_fidelity(outcomes, bin_size: int) -> FidelitySeries:
    """Mean and binomial stderr per bin of ``bin_size`` outcomes; partial bin dropped."""
    if bin_size < 2:
        raise ValueError(f"bin_size must be >= 2, got {bin_size}")
    outcomes = np.asarray(outcomes, dtype=float)
    n_bins = outcomes.size // bin_size
    if n_bins == 0:
        empty = np.array([])
        return FidelitySeries(empty, empty, empty)
    chunks = outcomes[: n_bins * bin_size].reshape(n_bins, bin_size)
    means = chunks.mean(axis=1)
    stderr = np.sqrt(means * (1.0 - means) / bin_size)
    centers = (np.arange(n_bins) + 0.5) * bin_size
    return FidelitySeries(centers, means, stderr)


def contrast_to_fidelity(contrast: float) -> float:
    """Map Ramsey fringe contrast C in [-1, 1] to fidelity (C+1)/2."""
    if not -1.0 <= contrast <= 1.0:
        raise ValueError(f"contrast out of [-1, 1]: {contrast}")
    return 0.5 * (contrast + 1.0)


def tanh_model(tau, f_max, tau0, width, f_floor=FIDELITY_FLOOR):
    tau = np.asarray(tau, dtype=float)
    return f_floor + (f_max - f_floor) * 0.5 * (1.0 - np.tanh((tau - tau0) / width))


def fit_tanh(probe_times, fidelities, stderr) -> TanhFit:
    """Weighted fit of the falling tanh model with the floor fixed at 0.5.

    Deterministic: a grid over (tau0, width) with the amplitude solved
    linearly at each node, then local least-squares refinement of the best
    node (ties broken by smaller tau0). Times are normalized internally so
    the fit is exactly covariant under rescaling of the probe-time axis.
    """
    t = np.asarray(probe_times, dtype=float)
    y = np.asarray(fidelities, dtype=float)
    se = np.asarray(stderr, dtype=float)
    if t.size < 4:
        raise ValueError(f"need at least 4 points, got {t.size}")
    order = np.argsort(t, kind="stable")
    t, y, se = t[order], y[order], se[order]

    if y.max() - y.min() < 0.02:
        raise NoTransitionError(
            f"fidelity range {y.max() - y.min():.4f} < 0.02; nothing to fit"
        )
    if np.polyfit(t, y, 1)[0] > 0:
        raise NoTransitionError("fidelity increases with probe time; model is a falling tanh")

    finite = se > 0
    if finite.any():
        w = np.empty_like(se)
        w[finite] = 1.0 / se[finite] ** 2
        w[~finite] = w[finite].max()
    else:
        w = np.ones_like(se)

    t_ref = t.max()
    ts = t / t_ref
    span = ts.max() - ts.min()

    def amplitude_for(tau0, width):
        g = 0.5 * (1.0 - np.tanh((ts - tau0) / width))
        denom = np.sum(w * g * g)
        if denom == 0:
            return 0.0
        a = np.sum(w * g * (y - FIDELITY_FLOOR)) / denom
        return min(max(a, 0.0), 0.5)

    best = None
    for tau0 in np.linspace(ts.min(), ts.max(), 25):
        for width in np.geomspace(span / 50.0, 2.0 * span, 25):
            a = amplitude_for(tau0, width)
            resid = tanh_model(ts, FIDELITY_FLOOR + a, tau0, width) - y
            cost = float(np.sum(w * resid * resid))
            if best is None or cost < best[0] - 1e-15 * abs(best[0]):
                best = (cost, a, tau0, width)

    _, a0, tau0_0, width0 = best
    sw = np.sqrt(w)

    def residuals(params):
        a, tau0, width = params
        return sw * (tanh_model(ts, FIDELITY_FLOOR + a, tau0, width) - y)

    sol = least_squares(
        residuals,
        x0=[a0, tau0_0, width0],
        bounds=([0.0, -np.inf, 1e-9], [0.5, np.inf, np.inf]),
        xtol=1e-15,
        ftol=1e-15,
        gtol=1e-15,
    )
    a, tau0, width = sol.x
    model = tanh_model(ts, FIDELITY_FLOOR + a, tau0, width)
    residual_rms = float(np.sqrt(np.mean((model - y) ** 2)))

    # covariance of (f_max, tau0, width) from the weighted jacobian,
    # rescaled back to seconds on the time-like axes
    try:
        jtj = sol.jac.T @ sol.jac
        cov = np.linalg.inv(jtj)
        scale = np.diag([1.0, t_ref, t_ref])
        cov = scale @ cov @ scale
    except np.linalg.LinAlgError:
        cov = None

    return TanhFit(
        f_max=FIDELITY_FLOOR + float(a),
        tau0=float(tau0) * t_ref,
        width=float(width) * t_ref,
        residual_rms=residual_rms,
        covariance=cov,
    )


def max_probe_time(fit: TanhFit) -> float:
    """Probe time at which the fitted curve crosses 75% fidelity (closed form)."""
    if fit.f_max <= THRESHOLD_FIDELITY:
        raise NeverAboveThresholdError(
            f"fitted f_max {fit.f_max:.4f} never exceeds {THRESHOLD_FIDELITY}"
        )
    arg = 1.0 - 2.0 * (THRESHOLD_FIDELITY - fit.f_floor) / (fit.f_max - fit.f_floor)
    return fit.tau0 + fit.width * math.atanh(arg)


def max_probe_time_err(fit: TanhFit) -> float | None:
    """Delta-method uncertainty of the threshold crossing from the fit covariance."""
    if fit.covariance is None or fit.f_max <= THRESHOLD_FIDELITY:
        return None
    arg = 1.0 - 2.0 * (THRESHOLD_FIDELITY - fit.f_floor) / (fit.f_max - fit.f_floor)
    # d tau_max / d (f_max, tau0, width)
    datanh = 1.0 / (1.0 - arg * arg)
    darg_dfmax = 2.0 * (THRESHOLD_FIDELITY - fit.f_floor) / (fit.f_max - fit.f_floor) ** 2
    grad = np.array([fit.width * datanh * darg_dfmax, 1.0, math.atanh(arg)])
    var = float(grad @ fit.covariance @ grad)
    return math.sqrt(var) if var > 0 else 0.0


def compare_protocols(scan_m: ScanResult, scan_i: ScanResult) -> tuple[float, float | None]:
    """Ratio of monitor to interleaved tau_max at one noise strength."""
    if not math.isclose(scan_m.noise_asd_1hz, scan_i.noise_asd_1hz, rel_tol=1e-12):
        raise ValueError(
            f"noise strengths differ: {scan_m.noise_asd_1hz} vs {scan_i.noise_asd_1hz}"
        )
    if scan_m.tau_max is None or scan_i.tau_max is None:
        raise ValueError("both scans must carry an extracted tau_max")
    ratio = scan_m.tau_max / scan_i.tau_max
    err = None
    if scan_m.tau_max_err is not None and scan_i.tau_max_err is not None:
        err = ratio * math.sqrt(
            (scan_m.tau_max_err / scan_m.tau_max) ** 2
            + (scan_i.tau_max_err / scan_i.tau_max) ** 2
        )
    return ratio, err
