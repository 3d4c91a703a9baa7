"""Pure-pursuit steering and PID speed control for an Ackermann follower."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidConfig, NonPositiveDepth, NonPositiveDt

_DENOM_EPS = 1e-9


@dataclass(frozen=True)
class ControllerConfig:
    wheelbase: float = 0.25
    expected_distance: float = 1.5
    delta_max: float = math.radians(30.0)
    kp: float = 0.8
    ki: float = 0.1
    kd: float = 0.05
    stop_radius: float = 0.1
    speed_max: float = 1.5
    integral_clamp: float = 2.0

    def __post_init__(self):
        if not self.wheelbase > 0:
            raise InvalidConfig("wheelbase must be positive")
        if not self.expected_distance > 0:
            raise InvalidConfig("expected_distance must be positive")
        if not 0 < self.delta_max < math.pi / 2:
            raise InvalidConfig("delta_max must be in (0, pi/2)")
        if min(self.kp, self.ki, self.kd) < 0:
            raise InvalidConfig("PID gains must be >= 0")
        if not (self.stop_radius > 0 and self.speed_max > 0 and self.integral_clamp > 0):
            raise InvalidConfig("stop_radius, speed_max and integral_clamp must be positive")


@dataclass(frozen=True)
class ControlCommand:
    steering: float
    speed: float


def pure_pursuit_steer(x: float, d: float, cfg: ControllerConfig) -> float:
    """Steering angle toward a target ``x`` m right of the axis at depth ``d``.

    Positive ``x`` gives positive steering.  When ``d`` reaches the expected
    distance the raw angle tends to 90 degrees; the result is clamped to
    ``delta_max``.
    """
    if not d > 0:
        raise NonPositiveDepth(f"target depth must be positive, got {d}")
    denom = d * d - cfg.expected_distance**2
    if abs(denom) < _DENOM_EPS:
        delta = math.copysign(cfg.delta_max, x) if x != 0 else 0.0
    else:
        delta = math.atan(2.0 * x * cfg.wheelbase / denom)
    return max(-cfg.delta_max, min(cfg.delta_max, delta))


class PidMemory:
    """Integral and previous error carried between PID steps."""

    __slots__ = ("integral", "prev_error")

    def __init__(self):
        self.integral = 0.0
        self.prev_error: float | None = None

    def reset(self) -> None:
        self.integral = 0.0
        self.prev_error = None


def pid_speed(depth_error: float, dt: float, memory: PidMemory, cfg: ControllerConfig) -> float:
    """Forward speed from the depth error (current depth minus expected distance).

    Inside the stop band ``|depth_error| <= stop_radius`` the speed is 0 and
    the controller memory is cleared.
    """
    if not dt > 0:
        raise NonPositiveDt(f"dt must be positive, got {dt}")
    if abs(depth_error) <= cfg.stop_radius:
        memory.reset()
        return 0.0
    memory.integral = max(-cfg.integral_clamp, min(cfg.integral_clamp, memory.integral + depth_error * dt))
    deriv = 0.0 if memory.prev_error is None else (depth_error - memory.prev_error) / dt
    memory.prev_error = depth_error
    out = cfg.kp * depth_error + cfg.ki * memory.integral + cfg.kd * deriv
    return max(0.0, min(cfg.speed_max, out))


class Controller:
    """Steering plus speed from a target position in camera coordinates."""

    def __init__(self, cfg: ControllerConfig | None = None):
        self.cfg = cfg or ControllerConfig()
        self.memory = PidMemory()

    def command(self, x: float, depth: float, dt: float) -> ControlCommand:
        steer = pure_pursuit_steer(x, depth, self.cfg)
        speed = pid_speed(depth - self.cfg.expected_distance, dt, self.memory, self.cfg)
        return ControlCommand(steer, speed)
