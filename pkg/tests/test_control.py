import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from monofollow.control import ControlCommand, Controller, ControllerConfig, PidMemory, pid_speed, pure_pursuit_steer
from monofollow.errors import InvalidConfig, NonPositiveDepth, NonPositiveDt

CFG = ControllerConfig(wheelbase=0.2, expected_distance=1.0)


def test_steer_examples():
    assert pure_pursuit_steer(0.0, 3.0, CFG) == 0.0
    assert pure_pursuit_steer(0.5, 2.0, CFG) == pytest.approx(math.atan(0.2 / 3), abs=1e-12)
    assert pure_pursuit_steer(0.5, 2.0, CFG) == pytest.approx(0.06656, abs=1e-5)
    assert pure_pursuit_steer(0.3, 1.0, CFG) == CFG.delta_max
    assert pure_pursuit_steer(-0.3, 1.0, CFG) == -CFG.delta_max
    assert pure_pursuit_steer(0.0, 1.0, CFG) == 0.0
    # approaching the standoff distance drives the raw angle toward 90 degrees
    vals = [pure_pursuit_steer(0.3, 1.0 + e, CFG) for e in (0.5, 0.1, 1e-3)]
    assert vals == sorted(vals) and vals[-1] == CFG.delta_max
    with pytest.raises(NonPositiveDepth):
        pure_pursuit_steer(0.1, 0.0, CFG)


def test_pid_examples():
    cfg = ControllerConfig(kp=1.0, ki=0.0, kd=0.0, speed_max=2.0, stop_radius=0.1)
    assert pid_speed(0.5, 0.1, PidMemory(), cfg) == 0.5
    assert pid_speed(0.0, 0.1, PidMemory(), ControllerConfig()) == 0.0
    hot = ControllerConfig(kp=100.0, ki=100.0, kd=100.0, stop_radius=0.2)
    mem = PidMemory()
    pid_speed(2.0, 0.1, mem, hot)
    assert pid_speed(0.15, 0.1, mem, hot) == 0.0
    assert mem.integral == 0.0 and mem.prev_error is None
    with pytest.raises(NonPositiveDt):
        pid_speed(0.5, 0.0, PidMemory(), cfg)


def test_pid_integral_clamped_and_never_reverses():
    cfg = ControllerConfig(kp=0.0, ki=1.0, kd=0.0, integral_clamp=0.3, speed_max=5.0)
    mem = PidMemory()
    for _ in range(100):
        out = pid_speed(1.0, 0.1, mem, cfg)
    assert mem.integral == 0.3 and out == pytest.approx(0.3)
    assert pid_speed(-1.0, 0.1, PidMemory(), ControllerConfig()) == 0.0


def test_pid_derivative_term():
    cfg = ControllerConfig(kp=0.0, ki=0.0, kd=1.0, speed_max=10.0)
    mem = PidMemory()
    assert pid_speed(1.0, 0.5, mem, cfg) == 0.0  # no derivative on the first step
    assert pid_speed(2.0, 0.5, mem, cfg) == pytest.approx(2.0)


def test_config_validation():
    for bad in ({"wheelbase": 0}, {"delta_max": math.pi / 2}, {"kp": -1}, {"stop_radius": 0}):
        with pytest.raises(InvalidConfig):
            ControllerConfig(**bad)


def test_clamps_hold_over_random_inputs():
    rng = np.random.default_rng(0)
    n = 100_000
    xs = rng.normal(0, 3, n)
    ds = rng.uniform(1e-3, 20, n)
    errs = rng.normal(0, 5, n)
    dts = rng.uniform(1e-4, 1, n)
    cfg = ControllerConfig(kp=2.0, ki=1.0, kd=0.5)
    mem = PidMemory()
    for x, d, e, dt in zip(xs, ds, errs, dts):
        s = pure_pursuit_steer(x, d, cfg)
        v = pid_speed(e, dt, mem, cfg)
        assert -cfg.delta_max <= s <= cfg.delta_max
        assert 0.0 <= v <= cfg.speed_max
        assert -cfg.integral_clamp <= mem.integral <= cfg.integral_clamp


finite = st.floats(-10, 10, allow_nan=False)
depth = st.floats(1e-3, 30, allow_nan=False)


@settings(max_examples=500, deadline=None)
@given(finite, depth)
def test_steering_is_odd(x, d):
    assert pure_pursuit_steer(-x, d, CFG) == -pure_pursuit_steer(x, d, CFG)


@settings(max_examples=500, deadline=None)
@given(finite, finite, st.floats(1.001, 30, allow_nan=False))
def test_steering_monotone_beyond_standoff(x1, x2, d):
    a, b = sorted((abs(x1), abs(x2)))
    assert pure_pursuit_steer(a, d, CFG) <= pure_pursuit_steer(b, d, CFG)


def test_controller_combines_both_laws():
    ctl = Controller(CFG)
    cmd = ctl.command(0.5, 2.0, 0.1)
    assert isinstance(cmd, ControlCommand)
    assert cmd.steering == pytest.approx(math.atan(0.2 / 3))
    assert cmd.speed > 0
    assert ctl.command(0.0, 1.05, 0.1).speed == 0.0
