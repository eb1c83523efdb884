"""Fixed-step field estimator driven by monitor outcomes, plus drive feedforward."""
from __future__ import annotations

from dataclasses import dataclass, replace

from .physics import DATA_G, MONITOR_M, MU_B_OVER_H_HZ_PER_G, sensitivity


@dataclass(frozen=True)
class ServoState:
    """Current field estimate and the gain/probe-time pair that fixes the step.

    The update step is alpha * h / (tau * mu_B) = alpha / (mu_B/h * tau),
    in gauss.
    """

    estimate: float = 0.0
    alpha: float = 0.05
    probe_time: float = 5e-3

    def __post_init__(self) -> None:
        if self.alpha <= 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.probe_time <= 0:
            raise ValueError(f"probe_time must be positive, got {self.probe_time}")

    @property
    def step(self) -> float:
        return self.alpha / (MU_B_OVER_H_HZ_PER_G * self.probe_time)


@dataclass(frozen=True)
class DriveFrequencies:
    """Drive frequencies (Hz) fed forward to the two qubits."""

    data_hz: float
    monitor_hz: float


def servo_update(state: ServoState, outcome: int) -> ServoState:
    """Move the estimate one step up (outcome 1) or down (outcome 0).

    Outcome 1 at the mid-fringe probe point is evidence of positive detuning,
    i.e. true field above the current estimate.
    """
    delta = state.step if outcome else -state.step
    return replace(state, estimate=state.estimate + delta)


def feedforward(state: ServoState, b_static: float) -> DriveFrequencies:
    """Drive frequencies for both encodings at the estimated total field."""
    b = b_static + state.estimate
    return DriveFrequencies(
        data_hz=sensitivity(DATA_G) * b,
        monitor_hz=sensitivity(MONITOR_M) * b,
    )
