"""Monte Carlo simulator of a trapped-ion monitor-qubit feedforward protocol."""

from .analysis import (
    FidelitySeries,
    ScanResult,
    TanhFit,
    bin_fidelity,
    compare_protocols,
    contrast_to_fidelity,
    fit_tanh,
    max_probe_time,
)
from .config import RunConfig, ScanConfig
from .noise import (
    FieldTrace,
    NoiseSpec,
    SpectrumEstimate,
    apply_lowpass,
    field_at_interval,
    synthesize_random_walk,
    welch_psd,
)
from .physics import (
    DATA_G,
    MONITOR_M,
    QubitEncoding,
    accumulated_phase,
    monitor_outcome_probability,
    predicted_fidelity,
    sample_outcome,
    sensitivity,
    spam_corrupt,
    splitting_at_field,
)
from .protocol import (
    RealizationRecord,
    RunResult,
    TimingConfig,
    run_interleaved_protocol,
    run_monitor_protocol,
    uncorrected_reference,
)
from .servo import DriveFrequencies, ServoState, feedforward, servo_update

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
