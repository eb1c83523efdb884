import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ionmonitor.physics import (
    DATA_G,
    MONITOR_M,
    MU_B_OVER_H_HZ_PER_G,
    QubitEncoding,
    accumulated_phase,
    monitor_outcome_probability,
    predicted_fidelity,
    sample_outcome,
    sensitivity,
    spam_corrupt,
    splitting_at_field,
)


def test_sensitivity_data_qubit():
    assert sensitivity(DATA_G) == pytest.approx(2.7992490e6, rel=1e-12)
    assert sensitivity(DATA_G) == pytest.approx(2 * MU_B_OVER_H_HZ_PER_G, rel=1e-15)


def test_sensitivity_monitor_qubit():
    assert sensitivity(MONITOR_M) == pytest.approx(6.7181976e6, rel=1e-12)
    assert sensitivity(MONITOR_M) == pytest.approx(1.2 * 4 * MU_B_OVER_H_HZ_PER_G, rel=1e-15)


def test_sensitivity_ratio_is_exact():
    assert sensitivity(MONITOR_M) / sensitivity(DATA_G) == pytest.approx(2.4, rel=1e-12)


def test_degenerate_encoding_rejected():
    with pytest.raises(ValueError):
        QubitEncoding(label=DATA_G.label, lande_g=2.0, m_upper=0.5, m_lower=0.5)
    with pytest.raises(ValueError):
        QubitEncoding(label=DATA_G.label, lande_g=-1.0, m_upper=0.5, m_lower=-0.5)


def test_splitting_at_field():
    assert splitting_at_field(DATA_G, 5.0) == pytest.approx(1.39962450e7, rel=1e-9)
    assert splitting_at_field(MONITOR_M, 5.0) == pytest.approx(3.3591e7, rel=1e-4)
    assert splitting_at_field(DATA_G, 0.0) == 0.0
    assert splitting_at_field(MONITOR_M, 0.0) == 0.0


def test_accumulated_phase_examples():
    # constant 1e-4 G over 1 ms -> integral 1e-7 G*s
    phi = accumulated_phase(DATA_G, 1e-7)
    assert phi == pytest.approx(2 * math.pi * 2.799249e6 * 1e-7, rel=1e-12)
    assert phi == pytest.approx(1.758820, abs=1e-5)
    assert accumulated_phase(DATA_G, 0.0) == 0.0
    assert accumulated_phase(MONITOR_M, 0.0) == 0.0
    assert accumulated_phase(MONITOR_M, 1e-7) == pytest.approx(2.4 * phi, rel=1e-12)
    assert accumulated_phase(MONITOR_M, 1e-7) == pytest.approx(4.221168, abs=2e-5)


@given(st.floats(min_value=-1e-3, max_value=1e-3, allow_nan=False))
def test_accumulated_phase_is_linear(integral):
    one = accumulated_phase(DATA_G, integral)
    two = accumulated_phase(DATA_G, 2 * integral)
    assert two == pytest.approx(2 * one, rel=1e-12, abs=1e-18)


def test_predicted_fidelity_examples():
    assert predicted_fidelity(0.0) == 1.0
    assert predicted_fidelity(math.pi / 2) == pytest.approx(0.0, abs=1e-30)
    assert predicted_fidelity(math.pi / 4) == pytest.approx(0.5, rel=1e-12)


@given(st.floats(min_value=-10, max_value=10, allow_nan=False))
def test_predicted_fidelity_even_and_periodic(phi):
    assert predicted_fidelity(phi) == pytest.approx(predicted_fidelity(-phi), abs=1e-12)
    assert predicted_fidelity(phi) == pytest.approx(
        predicted_fidelity(phi + math.pi), abs=1e-9
    )
    assert 0.0 <= predicted_fidelity(phi) <= 1.0


def test_monitor_outcome_probability_examples():
    assert monitor_outcome_probability(0.0) == pytest.approx(0.5)
    assert monitor_outcome_probability(math.pi / 2) == pytest.approx(1.0)
    assert monitor_outcome_probability(-math.pi / 6) == pytest.approx(0.25, rel=1e-12)


def test_monitor_outcome_probability_monotone_on_central_fringe():
    phis = np.linspace(-math.pi / 2 + 1e-6, math.pi / 2 - 1e-6, 101)
    probs = [monitor_outcome_probability(p) for p in phis]
    assert all(b > a for a, b in zip(probs, probs[1:]))


def test_sample_outcome_degenerate_probabilities():
    rng = np.random.default_rng(0)
    assert all(sample_outcome(0.0, rng) == 0 for _ in range(100))
    assert all(sample_outcome(1.0, rng) == 1 for _ in range(100))


def test_sample_outcome_unbiased():
    rng = np.random.default_rng(1)
    draws = [sample_outcome(0.5, rng) for _ in range(100_000)]
    assert np.mean(draws) == pytest.approx(0.5, abs=0.005)


def test_sample_outcome_rejects_bad_probability():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        sample_outcome(-0.1, rng)
    with pytest.raises(ValueError):
        sample_outcome(1.1, rng)


def test_sample_outcome_consumes_exactly_one_draw():
    a = np.random.default_rng(7)
    b = np.random.default_rng(7)
    sample_outcome(0.3, a)
    b.random()
    # streams must be aligned again
    assert a.random() == b.random()


def test_spam_corrupt_perfect_fidelity():
    rng = np.random.default_rng(0)
    assert all(spam_corrupt(1, 1.0, rng) == 1 for _ in range(100))
    assert all(spam_corrupt(0, 1.0, rng) == 0 for _ in range(100))


def test_spam_corrupt_flip_rate():
    rng = np.random.default_rng(2)
    outs = [spam_corrupt(1, 0.99, rng) for _ in range(100_000)]
    assert np.mean(outs) == pytest.approx(0.99, abs=0.001)


def test_spam_corrupt_half_fidelity_decorrelates():
    rng = np.random.default_rng(3)
    bits = np.array([i % 2 for i in range(100_000)])
    outs = np.array([spam_corrupt(int(b), 0.5, rng) for b in bits])
    r = np.corrcoef(bits, outs)[0, 1]
    assert abs(r) < 0.01


def test_spam_corrupt_rejects_bad_fidelity():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        spam_corrupt(1, 0.4, rng)
    with pytest.raises(ValueError):
        spam_corrupt(1, 1.01, rng)


def test_sampling_is_reproducible():
    probs = np.linspace(0.1, 0.9, 50)
    a = [sample_outcome(p, np.random.default_rng(s)) for s, p in enumerate(probs)]
    b = [sample_outcome(p, np.random.default_rng(s)) for s, p in enumerate(probs)]
    assert a == b
