"""Synthesis and analysis of 1/f^2 magnetic-field noise traces.

Traces are uniformly sampled field offsets in gauss. The random walk is
calibrated so the one-sided PSD is asd_at_1hz^2 / f^2 well below Nyquist.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import signal


@dataclass(frozen=True)
class NoiseSpec:
    """Noise strength and shaping parameters.

    asd_at_1hz is the amplitude spectral density at 1 Hz in gauss/sqrt(Hz);
    cutoff_hz is the coil low-pass pole.
    """

    asd_at_1hz: float
    cutoff_hz: float = 2.4
    sample_rate_hz: float = 1000.0

    def __post_init__(self) -> None:
        if self.asd_at_1hz < 0:
            raise ValueError(f"asd_at_1hz must be >= 0, got {self.asd_at_1hz}")
        if not 0 < self.cutoff_hz < self.sample_rate_hz / 2:
            raise ValueError(
                f"cutoff_hz must lie in (0, Nyquist): {self.cutoff_hz} "
                f"vs fs/2 = {self.sample_rate_hz / 2}"
            )


@dataclass
class FieldTrace:
    """Uniformly sampled field-offset time series (gauss vs seconds)."""

    dt: float
    samples: np.ndarray
    t0: float = 0.0
    _cum: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples, dtype=float)
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.samples.size == 0:
            raise ValueError("trace must contain at least one sample")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("trace contains non-finite samples")

    @property
    def t_end(self) -> float:
        return self.t0 + (self.samples.size - 1) * self.dt

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.samples.size)

    def _cumulative(self) -> np.ndarray:
        # exact trapezoid antiderivative at the sample points
        if self._cum is None:
            inner = 0.5 * self.dt * (self.samples[1:] + self.samples[:-1])
            self._cum = np.concatenate([[0.0], np.cumsum(inner)])
        return self._cum

    def _antiderivative(self, t):
        """Antiderivative of the piecewise-linear trace, elementwise over t."""
        cum = self._cumulative()
        t = np.asarray(t, dtype=float)
        s = (t - self.t0) / self.dt
        i = np.clip(np.floor(s).astype(int), 0, self.samples.size - 2)
        frac = s - i
        x_i = self.samples[i]
        x_t = x_i + frac * (self.samples[i + 1] - x_i)
        return cum[i] + (t - (self.t0 + i * self.dt)) * 0.5 * (x_i + x_t)

    def integrate(self, t_start, t_end):
        """Trapezoidal integral over [t_start, t_end], gauss*s; elementwise."""
        t_start = np.asarray(t_start, dtype=float)
        t_end = np.asarray(t_end, dtype=float)
        eps = 1e-9 * self.dt
        if np.any(t_start < self.t0 - eps) or np.any(t_end > self.t_end + eps):
            raise ValueError("integration interval outside trace extent")
        if np.any(t_start >= t_end):
            raise ValueError("require t_start < t_end")
        out = self._antiderivative(t_end) - self._antiderivative(t_start)
        return float(out) if out.ndim == 0 else out

    def to_csv(self, path) -> None:
        data = np.column_stack([self.times, self.samples])
        np.savetxt(path, data, delimiter=",", header="t_s,b_gauss", comments="")

    @classmethod
    def from_csv(cls, path) -> "FieldTrace":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        t, b = data[:, 0], data[:, 1]
        if t.size < 2:
            raise ValueError("trace CSV must contain at least two samples")
        return cls(dt=float(t[1] - t[0]), samples=b, t0=float(t[0]))


@dataclass
class SpectrumEstimate:
    """One-sided Welch PSD estimate (gauss^2/Hz)."""

    frequencies: np.ndarray
    psd: np.ndarray
    segment_count: int

    def to_csv(self, path) -> None:
        data = np.column_stack([self.frequencies, self.psd])
        np.savetxt(
            path, data, delimiter=",", header="f_hz,psd_gauss2_per_hz", comments=""
        )


def synthesize_random_walk(
    spec: NoiseSpec, duration_s: float, rng: np.random.Generator
) -> FieldTrace:
    """Random-walk trace with one-sided PSD ~ asd_at_1hz^2/f^2, starting at zero.

    Increment sigma = pi * asd * sqrt(2*dt) makes the discrete walk's PSD
    match the target well below Nyquist.
    """
    if duration_s <= 0:
        raise ValueError(f"duration must be positive, got {duration_s}")
    dt = 1.0 / spec.sample_rate_hz
    n = int(round(duration_s * spec.sample_rate_hz)) + 1
    sigma = np.pi * spec.asd_at_1hz * np.sqrt(2.0 * dt)
    steps = rng.normal(0.0, sigma, n - 1) if sigma > 0 else np.zeros(n - 1)
    samples = np.concatenate([[0.0], np.cumsum(steps)])
    return FieldTrace(dt=dt, samples=samples)


def apply_lowpass(trace: FieldTrace, cutoff_hz: float) -> FieldTrace:
    """Single-pole recursive low-pass, y_n = y_{n-1} + a*(x_n - y_{n-1})."""
    nyquist = 0.5 / trace.dt
    if cutoff_hz >= nyquist:
        raise ValueError(f"cutoff {cutoff_hz} Hz at or above Nyquist {nyquist} Hz")
    a = 1.0 - np.exp(-2.0 * np.pi * cutoff_hz * trace.dt)
    y = signal.lfilter([a], [1.0, a - 1.0], trace.samples)
    return FieldTrace(dt=trace.dt, samples=y, t0=trace.t0)


def welch_psd(
    trace: FieldTrace, segment_length: int, overlap_fraction: float = 0.5
) -> SpectrumEstimate:
    """One-sided Welch estimate with a Hann window and segment averaging."""
    if not 0.0 <= overlap_fraction <= 0.9:
        raise ValueError(f"overlap_fraction out of [0, 0.9]: {overlap_fraction}")
    if segment_length > trace.samples.size:
        raise ValueError(
            f"trace too short: {trace.samples.size} samples < "
            f"segment_length {segment_length}"
        )
    noverlap = int(segment_length * overlap_fraction)
    freqs, psd = signal.welch(
        trace.samples,
        fs=1.0 / trace.dt,
        window="hann",
        nperseg=segment_length,
        noverlap=noverlap,
        detrend="constant",
    )
    step = segment_length - noverlap
    segments = (trace.samples.size - segment_length) // step + 1
    return SpectrumEstimate(frequencies=freqs, psd=psd, segment_count=int(segments))


def field_at_interval(trace: FieldTrace, t_start: float, t_end: float) -> float:
    """Field-time integral (gauss*s) of the trace over [t_start, t_end]."""
    return trace.integrate(t_start, t_end)


def psd_slope_loglog(
    spectrum: SpectrumEstimate, f_lo: float = 0.1, f_hi: float = 1.0
) -> float:
    """Least-squares log-log slope of the PSD over [f_lo, f_hi]."""
    f, p = spectrum.frequencies, spectrum.psd
    mask = (f >= f_lo) & (f <= f_hi) & (p > 0)
    if mask.sum() < 2:
        raise ValueError("too few spectral bins in the requested band")
    return float(np.polyfit(np.log(f[mask]), np.log(p[mask]), 1)[0])


def psd_band_level(
    spectrum: SpectrumEstimate, f_ref: float = 1.0, half_span: float = 0.35
) -> float:
    """PSD level referred to f_ref assuming a 1/f^2 shape, band-averaged.

    Averages psd * (f/f_ref)^2 over f in [f_ref*(1-half_span), f_ref*(1+half_span)]
    to beat down per-bin estimator noise.
    """
    f, p = spectrum.frequencies, spectrum.psd
    mask = (f >= f_ref * (1 - half_span)) & (f <= f_ref * (1 + half_span))
    if not mask.any():
        raise ValueError("no spectral bins near the reference frequency")
    return float(np.mean(p[mask] * (f[mask] / f_ref) ** 2))
