import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pslf import PidGains, init_pid, refine_errors
from pslf.errors import ConfigError, DimensionError


def pid_oracle(history, kp, ki, kd):
    """Closed evaluation of the PID-refined error at the last epoch of ``history``."""
    t = len(history)
    e_t = history[-1]
    e_prev = history[-2] if t > 1 else 0.0
    return kp * e_t + ki * sum(history) + kd * (e_t - e_prev)


def test_init_pid():
    pid = init_pid(3)
    assert pid.integral.tolist() == [0, 0, 0] and pid.prev_error.tolist() == [0, 0, 0]
    assert pid.epoch == 0
    with pytest.raises(ConfigError):
        init_pid(0)


def test_first_epoch_uses_zero_previous_error():
    e1 = np.array([2.0, -1.0])
    out = refine_errors(init_pid(2), e1, PidGains(1.5, 0.005, 0.05))
    np.testing.assert_allclose(out, (1.5 + 0.005 + 0.05) * e1, rtol=1e-15)


def test_worked_value():
    pid = init_pid(1)
    gains = PidGains(1.5, 0.005, 0.05)
    refine_errors(pid, np.array([2.0]), gains)
    out = refine_errors(pid, np.array([1.0]), gains)
    assert out[0] == pytest.approx(1.465, abs=1e-12)
    assert pid.epoch == 2


def test_proportional_only_is_identity():
    rng = np.random.default_rng(0)
    pid = init_pid(50)
    for _ in range(10):
        e = rng.normal(size=50)
        out = refine_errors(pid, e, PidGains(1.0, 0.0, 0.0))
        assert np.array_equal(out, e)


def test_integral_only_accumulates():
    pid = init_pid(1)
    for t in range(1, 8):
        out = refine_errors(pid, np.array([0.7]), PidGains(0.0, 1.0, 0.0))
        assert out[0] == pytest.approx(t * 0.7, rel=1e-14)


def test_length_mismatch():
    with pytest.raises(DimensionError):
        refine_errors(init_pid(3), np.zeros(2), PidGains())


def test_default_gains():
    assert PidGains() == PidGains(1.5, 0.005, 0.05)
    with pytest.raises(ConfigError):
        PidGains(np.inf, 0, 0)


@settings(max_examples=50, deadline=None)
@given(hist=st.lists(st.floats(-10, 10), min_size=1, max_size=12),
       kp=st.floats(-2, 2), ki=st.floats(-1, 1), kd=st.floats(-1, 1),
       alpha=st.floats(-5, 5))
def test_recurrence_matches_closed_form_and_is_linear(hist, kp, ki, kd, alpha):
    gains = PidGains(kp, ki, kd)
    pid, scaled = init_pid(1), init_pid(1)
    for t in range(1, len(hist) + 1):
        out = refine_errors(pid, np.array([hist[t - 1]]), gains)
        out_s = refine_errors(scaled, np.array([alpha * hist[t - 1]]), gains)
        expect = pid_oracle(hist[:t], kp, ki, kd)
        assert out[0] == pytest.approx(expect, rel=1e-12, abs=1e-12)
        assert out_s[0] == pytest.approx(alpha * out[0], rel=1e-12, abs=1e-11)
    assert pid.integral[0] == sum(hist)  # both sum left to right from 0.0
