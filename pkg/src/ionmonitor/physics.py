"""Zeeman qubit encodings, Ramsey phase accumulation, and single-shot sampling.

Field values are in gauss, times in seconds, phases in radians throughout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

# Bohr magneton over Planck constant, Hz per gauss (CODATA, truncated).
MU_B_OVER_H_HZ_PER_G = 1.3996245e6
# Planck constant, J*s (exact SI value).
H_JS = 6.62607015e-34
HBAR_JS = H_JS / (2.0 * math.pi)


class EncodingLabel(Enum):
    DATA_G = "data_g"
    MONITOR_M = "monitor_m"


@dataclass(frozen=True)
class QubitEncoding:
    """A two-level Zeeman encoding characterized by its Lande factor and sublevels.

    The first-order magnetic-field sensitivity of the transition frequency is
    ``lande_g * |m_upper - m_lower| * mu_B/h`` in Hz per gauss.
    """

    label: EncodingLabel
    lande_g: float
    m_upper: float
    m_lower: float

    def __post_init__(self) -> None:
        if self.lande_g <= 0:
            raise ValueError(f"lande_g must be positive, got {self.lande_g}")
        if self.m_upper == self.m_lower:
            raise ValueError(
                f"degenerate encoding: m_upper == m_lower == {self.m_upper}"
            )


# Ideal Lande factors (g_J = 2 for the ground S manifold, 6/5 for the
# metastable D manifold) so the monitor/data sensitivity ratio is exactly 2.4.
DATA_G = QubitEncoding(EncodingLabel.DATA_G, lande_g=2.0, m_upper=0.5, m_lower=-0.5)
MONITOR_M = QubitEncoding(
    EncodingLabel.MONITOR_M, lande_g=1.2, m_upper=1.5, m_lower=-2.5
)


def sensitivity(encoding: QubitEncoding) -> float:
    """First-order field sensitivity of the encoding in Hz per gauss."""
    return encoding.lande_g * abs(encoding.m_upper - encoding.m_lower) * MU_B_OVER_H_HZ_PER_G


def splitting_at_field(encoding: QubitEncoding, b_gauss: float) -> float:
    """Transition frequency (Hz) at a given field (gauss)."""
    return sensitivity(encoding) * b_gauss


def accumulated_phase(encoding: QubitEncoding, field_integral_gauss_s: float) -> float:
    """Ramsey phase (radians) accumulated over a probe window.

    ``field_integral_gauss_s`` is the time-integral of the detuning field over
    the window; for a constant offset dB over a probe of length tau it equals
    dB*tau and the phase reduces to 2*pi*sensitivity*dB*tau.
    """
    return 2.0 * math.pi * sensitivity(encoding) * field_integral_gauss_s


def predicted_fidelity(delta_phi: float) -> float:
    """Predicted data-qubit fidelity cos^2(delta_phi) for a given phase error."""
    return math.cos(delta_phi) ** 2


def monitor_outcome_probability(delta_phi_m: float) -> float:
    """Bright-outcome probability for a mid-fringe monitor Ramsey probe.

    The second pi/2 pulse carries a pi/2 phase offset, so the outcome
    probability is (1 + sin(delta_phi_m))/2 and the sign of the phase error
    biases the outcome.
    """
    return 0.5 * (1.0 + math.sin(delta_phi_m))


def sample_outcome(p: float, rng: np.random.Generator) -> int:
    """Single Bernoulli(p) draw; consumes exactly one uniform from the stream."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability out of range: {p}")
    return int(rng.random() < p)


def spam_corrupt(outcome: int, spam_fidelity: float, rng: np.random.Generator) -> int:
    """Symmetric readout bit-flip channel; consumes exactly one uniform."""
    if not 0.5 <= spam_fidelity <= 1.0:
        raise ValueError(f"spam_fidelity out of range [0.5, 1]: {spam_fidelity}")
    flip = rng.random() < 1.0 - spam_fidelity
    return 1 - outcome if flip else outcome
