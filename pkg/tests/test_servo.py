import math

import numpy as np
import pytest

from ionmonitor.physics import MU_B_OVER_H_HZ_PER_G
from ionmonitor.servo import DriveFrequencies, ServoState, feedforward, servo_update


def test_step_examples():
    assert ServoState(alpha=0.05, probe_time=5e-3).step == pytest.approx(
        0.05 / (1.3996245e6 * 5e-3), rel=1e-12
    )
    assert ServoState(alpha=0.05, probe_time=1e-3).step == pytest.approx(
        3.5724e-5, rel=1e-4
    )
    assert ServoState(alpha=0.05, probe_time=14.5e-3).step == pytest.approx(
        0.05 / (1.3996245e6 * 14.5e-3), rel=1e-12
    )


def test_step_scales_inversely_with_probe_time():
    taus = np.geomspace(1e-4, 1e-1, 20)
    products = [ServoState(probe_time=t).step * t for t in taus]
    assert np.ptp(products) <= 1e-12 * products[0]


def test_update_direction_and_symmetry():
    state = ServoState(estimate=0.0, alpha=0.05, probe_time=5e-3)
    up = servo_update(state, 1)
    assert up.estimate == pytest.approx(7.1449e-6, rel=1e-4)
    down = servo_update(state, 0)
    assert down.estimate == -up.estimate
    # outcome 0 then 1 returns to the start exactly
    assert servo_update(down, 1).estimate == state.estimate


def test_update_preserves_other_fields():
    state = ServoState(estimate=1e-5, alpha=0.03, probe_time=2e-3)
    new = servo_update(state, 1)
    assert (new.alpha, new.probe_time) == (state.alpha, state.probe_time)
    assert abs(new.estimate - state.estimate) == pytest.approx(state.step, rel=1e-15)


def test_feedforward_static_field():
    drives = feedforward(ServoState(estimate=0.0), b_static=5.0)
    assert isinstance(drives, DriveFrequencies)
    assert drives.data_hz == pytest.approx(1.39962450e7, rel=1e-9)
    assert drives.monitor_hz == pytest.approx(3.3591e7, rel=1e-4)


def test_feedforward_estimate_only():
    drives = feedforward(ServoState(estimate=1e-4), b_static=0.0)
    assert drives.data_hz == pytest.approx(279.92, rel=1e-4)
    assert drives.monitor_hz == pytest.approx(671.82, rel=1e-4)


def test_feedforward_ratio_is_2p4():
    for est, b in [(0.0, 5.0), (1e-4, 0.0), (-3e-5, 2.2)]:
        drives = feedforward(ServoState(estimate=est), b_static=b)
        assert drives.monitor_hz / drives.data_hz == pytest.approx(2.4, rel=1e-12)


def deterministic_track(state, true_field, n_updates):
    """Zero-projection-noise limit: outcome is 1 iff the field is above the estimate."""
    history = []
    for _ in range(n_updates):
        state = servo_update(state, 1 if true_field > state.estimate else 0)
        history.append(state.estimate)
    return state, history


def test_bang_bang_convergence_to_static_offset():
    state = ServoState(estimate=0.0, alpha=0.05, probe_time=5e-3)
    offset = 13.7 * state.step
    n_converge = math.ceil(offset / state.step)
    _, history = deterministic_track(state, offset, n_converge + 200)
    tail = history[n_converge:]
    assert all(abs(e - offset) <= state.step * (1 + 1e-12) for e in tail)


def test_bang_bang_limit_cycle_is_bounded():
    state = ServoState(estimate=0.0, probe_time=1e-3)
    _, history = deterministic_track(state, 0.5 * state.step, 50)
    cycle = history[5:]
    assert max(cycle) - min(cycle) <= 2 * state.step * (1 + 1e-12)


def test_idle_random_walk_is_unbiased():
    rng = np.random.default_rng(11)
    finals = []
    n = 400
    for _ in range(200):
        state = ServoState(estimate=0.0, probe_time=5e-3)
        for outcome in rng.integers(0, 2, n):
            state = servo_update(state, int(outcome))
        finals.append(state.estimate)
    bound = 4 * state.step * math.sqrt(n) / 2
    assert abs(np.mean(finals)) < bound
