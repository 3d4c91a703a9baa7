"""Asynchronous fusion of slow network depth and fast PnP estimates.

A constant-velocity Kalman filter observes target position from both
sources.  PnP estimates are also kept in a short trajectory buffer; each
network estimate is registered against the buffered PnP entry of the same
frame and the resulting offset is propagated to every later entry.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np

from .depth_target import Source, TargetEstimate
from .errors import (
    EmptyBuffer,
    IllConditioned,
    InsufficientSamples,
    InvalidConfig,
    NoMatchingFrame,
    NumericalBreakdown,
    TimeReversal,
    Uninitialized,
)
from .geometry import Point3

DEFAULT_PNP_PERIOD = 1.0 / 30.0
_H = np.hstack((np.eye(3), np.zeros((3, 3))))


def _psd(m, name) -> np.ndarray:
    """Accept a variance scalar, a diagonal of variances, or a full 3x3 matrix."""
    m = np.array(m, dtype=float)
    if m.ndim == 0:
        m = np.eye(3) * m
    elif m.ndim == 1:
        m = np.diag(m)
    if m.shape != (3, 3) or not np.allclose(m, m.T, atol=1e-12):
        raise InvalidConfig(f"{name} must be a symmetric 3x3 matrix")
    if np.linalg.eigvalsh(m).min() < -1e-12:
        raise InvalidConfig(f"{name} must be positive semidefinite")
    return m


@dataclass(frozen=True)
class FusionConfig:
    process_noise_scale: float = 0.5
    meas_noise_network: np.ndarray = field(default_factory=lambda: np.diag([0.02, 0.02, 0.02]) ** 2)
    meas_noise_pnp: np.ndarray = field(default_factory=lambda: np.diag([0.05, 0.05, 0.05]) ** 2)
    buffer_capacity: int = 32
    init_position_var: float = 0.25
    init_velocity_var: float = 1.0
    pnp_period: float = DEFAULT_PNP_PERIOD

    def __post_init__(self):
        if self.process_noise_scale < 0:
            raise InvalidConfig("process_noise_scale must be >= 0")
        if self.buffer_capacity < 4:
            raise InvalidConfig("buffer_capacity must be >= 4")
        if not (self.init_position_var > 0 and self.init_velocity_var > 0):
            raise InvalidConfig("initial variances must be positive")
        if not self.pnp_period > 0:
            raise InvalidConfig("pnp_period must be positive")
        object.__setattr__(self, "meas_noise_network", _psd(self.meas_noise_network, "meas_noise_network"))
        object.__setattr__(self, "meas_noise_pnp", _psd(self.meas_noise_pnp, "meas_noise_pnp"))

    def noise_for(self, source: Source) -> np.ndarray:
        return self.meas_noise_pnp if Source(source) is Source.PNP else self.meas_noise_network

    @property
    def match_tolerance(self) -> float:
        return 0.5 * self.pnp_period


@dataclass(frozen=True)
class TrackState:
    position: np.ndarray
    velocity: np.ndarray
    covariance: np.ndarray
    last_time: float

    def __post_init__(self):
        for name, shape in (("position", (3,)), ("velocity", (3,)), ("covariance", (6, 6))):
            arr = np.array(getattr(self, name), dtype=float).reshape(shape)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def mean(self) -> np.ndarray:
        return np.concatenate((self.position, self.velocity))


def transition(dt: float) -> np.ndarray:
    F = np.eye(6)
    F[:3, 3:] = dt * np.eye(3)
    return F


def process_noise(dt: float, q: float) -> np.ndarray:
    """Piecewise-constant white-acceleration noise with variance ``q``."""
    g = np.array([0.5 * dt * dt, dt])
    return q * np.kron(np.outer(g, g), np.eye(3))


def init_state(m: TargetEstimate, cfg: FusionConfig) -> TrackState:
    P = np.diag([cfg.init_position_var] * 3 + [cfg.init_velocity_var] * 3)
    return TrackState(np.asarray(m.position), np.zeros(3), P, m.timestamp)


def predict(s: TrackState, t: float, q: float = 0.0) -> TrackState:
    dt = t - s.last_time
    if dt < 0:
        raise TimeReversal(f"cannot predict back from {s.last_time} to {t}")
    F = transition(dt)
    x = F @ s.mean
    P = F @ s.covariance @ F.T + process_noise(dt, q)
    return TrackState(x[:3], x[3:], 0.5 * (P + P.T), t)


def update(s: TrackState, m: TargetEstimate, cfg: FusionConfig) -> TrackState:
    """Predict to the measurement time, then apply a Joseph-form position update."""
    if m.timestamp < s.last_time:
        raise TimeReversal(f"measurement at {m.timestamp} is older than state at {s.last_time}")
    s = predict(s, m.timestamp, cfg.process_noise_scale)
    R = cfg.noise_for(m.source)
    P = s.covariance
    S = _H @ P @ _H.T + R
    try:
        L = np.linalg.cholesky(0.5 * (S + S.T))
    except np.linalg.LinAlgError:
        raise NumericalBreakdown("innovation covariance is not positive definite") from None
    if np.min(np.diag(L)) < 1e-12 * max(1.0, np.max(np.diag(L))):
        raise NumericalBreakdown("innovation covariance is singular")
    K = np.linalg.solve(S, _H @ P).T
    innov = np.asarray(m.position) - s.position
    x = s.mean + K @ innov
    IKH = np.eye(6) - K @ _H
    P = IKH @ P @ IKH.T + K @ R @ K.T
    return TrackState(x[:3], x[3:], 0.5 * (P + P.T), s.last_time)


# --- trajectory buffer ------------------------------------------------------


@dataclass(frozen=True)
class TrajectoryBuffer:
    times: tuple = ()
    positions: tuple = ()
    capacity: int = 32

    def __post_init__(self):
        if len(self.times) != len(self.positions):
            raise InvalidConfig("times and positions differ in length")
        if len(self.times) > self.capacity:
            raise InvalidConfig("buffer exceeds its capacity")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise TimeReversal("buffer timestamps must strictly increase")
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        object.__setattr__(self, "positions", tuple(tuple(map(float, p)) for p in self.positions))

    def __len__(self) -> int:
        return len(self.times)

    def append(self, t: float, position) -> TrajectoryBuffer:
        if self.times and t <= self.times[-1]:
            raise TimeReversal(f"entry at {t} not after last buffered time {self.times[-1]}")
        times = (self.times + (t,))[-self.capacity :]
        positions = (self.positions + (tuple(position),))[-self.capacity :]
        return TrajectoryBuffer(times, positions, self.capacity)

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array(self.times), np.array(self.positions, dtype=float).reshape(-1, 3)

    @property
    def last(self) -> tuple[float, Point3]:
        if not self.times:
            raise EmptyBuffer("trajectory buffer is empty")
        return self.times[-1], Point3(*self.positions[-1])


@dataclass(frozen=True)
class TrajectoryFit:
    """Per-axis cubic ``p(t) = c0 + c1*tau + c2*tau^2 + c3*tau^3`` with ``tau = t - t_ref``."""

    coeffs: np.ndarray  # (3, 4), ascending powers
    t_ref: float
    residual_rms: float

    def position(self, t: float) -> np.ndarray:
        tau = t - self.t_ref
        return self.coeffs @ np.array([1.0, tau, tau * tau, tau**3])

    def velocity(self, t: float) -> np.ndarray:
        tau = t - self.t_ref
        return self.coeffs @ np.array([0.0, 1.0, 2.0 * tau, 3.0 * tau * tau])


def fit_trajectory(buf: TrajectoryBuffer) -> TrajectoryFit:
    t, p = buf.as_arrays()
    if len(np.unique(t)) < 4:
        raise InsufficientSamples(f"need 4 distinct timestamps, have {len(np.unique(t))}")
    spread = float(t.max() - t.min())
    if spread < 1e-9:
        raise IllConditioned(f"timestamp spread {spread} s too small")
    t_ref = float(t[-1])
    # fit in scaled time for conditioning, then map back to seconds
    s = (t - t_ref) / spread
    V = np.vander(s, 4, increasing=True)
    c_scaled, *_ = np.linalg.lstsq(V, p, rcond=None)
    coeffs = (c_scaled / spread ** np.arange(4)[:, None]).T
    resid = V @ c_scaled - p
    rms = float(np.sqrt(np.mean(np.sum(resid**2, axis=1))))
    return TrajectoryFit(coeffs, t_ref, rms)


def register_network_measurement(
    buf: TrajectoryBuffer, net: TargetEstimate, tolerance: float = 0.5 * DEFAULT_PNP_PERIOD
) -> tuple[TrajectoryBuffer, np.ndarray]:
    """Shift buffered PnP entries from the matching frame onward by the network offset."""
    if not len(buf):
        raise EmptyBuffer("no buffered PnP entries to register against")
    t, p = buf.as_arrays()
    k = int(np.argmin(np.abs(t - net.timestamp)))
    if abs(t[k] - net.timestamp) > tolerance:
        raise NoMatchingFrame(
            f"no buffered frame within {tolerance:.4g} s of network time {net.timestamp:.6g}"
        )
    err = np.asarray(net.position) - p[k]
    if not np.any(err):
        return buf, err
    p[k:] += err
    return TrajectoryBuffer(tuple(t), tuple(map(tuple, p)), buf.capacity), err


# --- stateful tracker -------------------------------------------------------


class Tracker:
    """Single-writer fusion state; ``fused_estimate`` reads a consistent snapshot."""

    def __init__(self, cfg: FusionConfig | None = None):
        self.cfg = cfg or FusionConfig()
        self._lock = threading.Lock()
        self._state: TrackState | None = None
        self.buffer = TrajectoryBuffer(capacity=self.cfg.buffer_capacity)
        self.fit: TrajectoryFit | None = None
        self.last_error = np.zeros(3)

    @property
    def state(self) -> TrackState | None:
        return self._state

    @property
    def initialized(self) -> bool:
        return self._state is not None

    def anchor(self) -> Point3:
        """Latest (corrected) buffered position: the starting point for the next PnP step."""
        return self.buffer.last[1]

    def _filter(self, m: TargetEstimate) -> None:
        new = init_state(m, self.cfg) if self._state is None else update(self._state, m, self.cfg)
        with self._lock:
            self._state = new

    def _refit(self) -> None:
        try:
            self.fit = fit_trajectory(self.buffer)
        except (InsufficientSamples, IllConditioned):
            self.fit = None

    def add_pnp(self, m: TargetEstimate) -> None:
        self._filter(m)
        self.buffer = self.buffer.append(m.timestamp, m.position)
        self._refit()

    def add_network(self, m: TargetEstimate) -> np.ndarray:
        """Filter a network estimate and register it on the PnP buffer; returns the offset.

        A late estimate (older than the filter state) skips the filter and only
        corrects the buffer, so the offset reaches the filter via later PnP steps.
        """
        if self._state is None or m.timestamp >= self._state.last_time:
            self._filter(m)
        tol = self.cfg.match_tolerance
        if not len(self.buffer) or m.timestamp > self.buffer.times[-1] + tol:
            # nothing to register against yet: the estimate becomes the new anchor
            self.buffer = self.buffer.append(m.timestamp, m.position)
            err = np.zeros(3)
        else:
            self.buffer, err = register_network_measurement(self.buffer, m, tol)
        self.last_error = err
        self._refit()
        return err

    def add(self, m: TargetEstimate):
        if m.source is Source.PNP:
            return self.add_pnp(m)
        return self.add_network(m)

    def snapshot(self) -> TrackState:
        with self._lock:
            s = self._state
        if s is None:
            raise Uninitialized("tracker has no measurements yet")
        return s

    def fused_estimate(self, query_time: float) -> TargetEstimate:
        return fused_estimate(self.snapshot(), query_time, self.cfg.process_noise_scale)[0]


def fused_estimate(state: TrackState | None, query_time: float, q: float = 0.0):
    """Predict ``state`` to ``query_time`` without mutating it.

    Returns ``(TargetEstimate, predicted TrackState)``.
    """
    if state is None:
        raise Uninitialized("tracker has no measurements yet")
    s = predict(state, query_time, q)
    return TargetEstimate(Point3(*s.position), query_time, Source.FUSED), s
