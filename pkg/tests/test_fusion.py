import threading

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import ScalarCVKalman

from monofollow.depth_target import Source, TargetEstimate
from monofollow.errors import (
    EmptyBuffer,
    IllConditioned,
    InsufficientSamples,
    InvalidConfig,
    NoMatchingFrame,
    NumericalBreakdown,
    TimeReversal,
    Uninitialized,
)
from monofollow.fusion import (
    FusionConfig,
    TrackState,
    Tracker,
    TrajectoryBuffer,
    fit_trajectory,
    fused_estimate,
    init_state,
    predict,
    process_noise,
    register_network_measurement,
    update,
)
from monofollow.geometry import Point3


def est(p, t, src=Source.PNP):
    return TargetEstimate(Point3(*p), t, src)


def random_psd(rng, n=6):
    A = rng.normal(size=(n, n))
    return A @ A.T


def state(pos=(0, 0, 3), vel=(0, 0, 0), P=None, t=0.0):
    return TrackState(np.array(pos, float), np.array(vel, float), np.eye(6) if P is None else P, t)


def assert_psd(P):
    assert np.allclose(P, P.T, atol=1e-9)
    assert np.linalg.eigvalsh(P).min() >= -1e-9


# --- predict ---------------------------------------------------------------


def test_predict_zero_dt_and_linear_motion():
    s = state(vel=(1, 0, 0), P=random_psd(np.random.default_rng(0)))
    same = predict(s, 0.0, q=3.0)
    assert np.array_equal(same.position, s.position) and np.allclose(same.covariance, s.covariance, atol=1e-12)
    moved = predict(s, 2.0)
    assert np.allclose(moved.position, (2, 0, 3)) and moved.last_time == 2.0
    with pytest.raises(TimeReversal):
        predict(moved, 1.0)


@pytest.mark.parametrize("seed", range(5))
def test_predict_covariance_hand_multiplied(seed):
    rng = np.random.default_rng(seed)
    P = random_psd(rng)
    dt, q = rng.uniform(0.01, 1), rng.uniform(0, 2)
    out = predict(state(P=P), dt, q).covariance
    # element-wise oracle: F has ones on the diagonal and dt at (i, i+3)
    F = [[1.0 if i == j else (dt if j == i + 3 else 0.0) for j in range(6)] for i in range(6)]
    FP = [[sum(F[i][k] * P[k][j] for k in range(6)) for j in range(6)] for i in range(6)]
    FPFt = [[sum(FP[i][k] * F[j][k] for k in range(6)) for j in range(6)] for i in range(6)]
    g = {0: dt * dt / 2, 1: dt}
    Q = [[q * g[i // 3] * g[j // 3] if i % 3 == j % 3 else 0.0 for j in range(6)] for i in range(6)]
    expect = np.array(FPFt) + np.array(Q)
    assert np.max(np.abs(out - expect)) < 1e-9
    assert np.allclose(process_noise(dt, q), Q)


# --- update ----------------------------------------------------------------


def _run_pair(zs, ts, r, q, cfg):
    s = init_state(est((zs[0], 0, 3), ts[0]), cfg)
    ora = ScalarCVKalman(zs[0], cfg.init_position_var, cfg.init_velocity_var, ts[0])
    for z, t in zip(zs[1:], ts[1:]):
        s = update(s, est((z, 0, 3), t), cfg)
        ora.update(z, r, t, q)
    return s, ora


def test_stationary_target_velocity_vanishes():
    r, q = 0.02**2, 0.5
    cfg = FusionConfig(process_noise_scale=q, meas_noise_pnp=r)
    ts = np.arange(21) / 30
    s, ora = _run_pair(np.full(21, 1.5), ts, r, q, cfg)
    assert np.linalg.norm(s.velocity) < 1e-3 and abs(ora.v) < 1e-3
    assert abs(s.position[0] - ora.p) < 1e-12


def test_constant_velocity_tracked():
    r, q, v = 1e-4, 0.5, 0.8
    cfg = FusionConfig(process_noise_scale=q, meas_noise_pnp=r)
    ts = np.arange(31) / 10
    s, ora = _run_pair(v * ts, ts, r, q, cfg)
    assert abs(ora.v - v) < 1e-3
    assert abs(s.velocity[0] - v) < 1e-3
    assert abs(s.velocity[0] - ora.v) < 1e-10 and abs(s.position[0] - ora.p) < 1e-10
    # the scalar covariance matches the x-axis block of the 6x6 covariance
    np.testing.assert_allclose(s.covariance[np.ix_([0, 3], [0, 3])], ora.P, atol=1e-12)


def test_exact_observation_limit():
    s = state(P=np.eye(6))
    gaps = []
    for r in (1e-2, 1e-6, 1e-12):
        out = update(s, est((0.4, -0.2, 2.5), 0.1), FusionConfig(meas_noise_pnp=r))
        gaps.append(np.linalg.norm(out.position - (0.4, -0.2, 2.5)))
    assert gaps == sorted(gaps, reverse=True) and gaps[-1] < 1e-9


def test_update_errors():
    s = state(t=1.0)
    with pytest.raises(TimeReversal):
        update(s, est((0, 0, 3), 0.5), FusionConfig())
    degenerate = state(P=np.zeros((6, 6)))
    with pytest.raises(NumericalBreakdown):
        update(degenerate, est((0, 0, 3), 0.0), FusionConfig(process_noise_scale=0.0, meas_noise_pnp=0.0))


def test_source_selects_noise():
    cfg = FusionConfig(meas_noise_network=1e-6, meas_noise_pnp=1.0)
    s = state(P=np.eye(6))
    net = update(s, est((1, 0, 3), 0.0, Source.NETWORK), cfg)
    pnp = update(s, est((1, 0, 3), 0.0, Source.PNP), cfg)
    assert net.position[0] > 0.99 and pnp.position[0] < 0.6


def test_config_validation():
    with pytest.raises(InvalidConfig):
        FusionConfig(meas_noise_pnp=np.diag([1.0, -1.0, 1.0]))
    with pytest.raises(InvalidConfig):
        FusionConfig(process_noise_scale=-1)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_covariance_psd_over_long_interleaving(seed):
    rng = np.random.default_rng(seed)
    cfg = FusionConfig(process_noise_scale=rng.uniform(0, 5))
    s = init_state(est((0, 0, 3), 0.0), cfg)
    t = 0.0
    for _ in range(1000):
        t += rng.exponential(0.03) if rng.random() < 0.9 else 0.0
        if rng.random() < 0.3:
            s = predict(s, t, cfg.process_noise_scale)
        else:
            src = Source.NETWORK if rng.random() < 0.2 else Source.PNP
            s = update(s, est(rng.normal(0, 1, 3) + (0, 0, 5), t, src), cfg)
    assert_psd(s.covariance)


# --- trajectory fitting ----------------------------------------------------


def _buffer(ts, ps, cap=32):
    buf = TrajectoryBuffer(capacity=cap)
    for t, p in zip(ts, ps):
        buf = buf.append(float(t), p)
    return buf


def test_fit_exact_cubic():
    ts = np.linspace(-1.0, 0.0, 12)
    p = ts**3 - 2 * ts
    fit = fit_trajectory(_buffer(ts, np.column_stack((p, 2 * p, np.zeros_like(p)))))
    assert fit.t_ref == 0.0
    np.testing.assert_allclose(fit.coeffs[0], (0, -2, 0, 1), atol=1e-9)
    np.testing.assert_allclose(fit.coeffs[1], (0, -4, 0, 2), atol=1e-9)
    for t, pt in zip(ts, p):
        assert abs(fit.position(t)[0] - pt) < 1e-9
    assert fit.residual_rms < 1e-9


def test_fit_interpolates_four_samples():
    rng = np.random.default_rng(3)
    ts = np.array([0.0, 0.1, 0.25, 0.3])
    fit = fit_trajectory(_buffer(ts, rng.normal(size=(4, 3))))
    assert fit.residual_rms < 1e-9


def test_fit_errors():
    with pytest.raises(InsufficientSamples):
        fit_trajectory(_buffer([0, 1, 2], np.zeros((3, 3))))
    with pytest.raises(IllConditioned):
        fit_trajectory(_buffer([0, 2e-10, 4e-10, 6e-10], np.zeros((4, 3))))


def test_buffer_capacity_and_order():
    buf = _buffer(range(40), np.zeros((40, 3)), cap=32)
    assert len(buf) == 32 and buf.times[0] == 8.0
    with pytest.raises(TimeReversal):
        buf.append(39.0, (0, 0, 0))
    with pytest.raises(EmptyBuffer):
        TrajectoryBuffer().last


def test_fitted_velocity_noise_band():
    ts = np.arange(32) / 30.0
    v, sigma = 0.5, 0.01
    # analytic standard deviation of the least-squares slope at the last sample
    s = ts - ts[-1]
    V = np.vander(s, 4, increasing=True)
    sd = sigma * np.sqrt(np.linalg.inv(V.T @ V)[1, 1])
    est_v = []
    for seed in range(300):
        noise = np.random.default_rng(seed).normal(0, sigma, 32)
        p = np.column_stack((v * ts + noise, np.zeros(32), np.full(32, 3.0)))
        est_v.append(fit_trajectory(_buffer(ts, p)).velocity(ts[-1])[0])
    err = np.array(est_v) - v
    assert np.mean(np.abs(err) <= 3 * sd) >= 0.98
    assert 0.85 < err.std() / sd < 1.15


# --- registration ----------------------------------------------------------


def test_register_agreeing_measurement():
    ts = np.arange(8) / 30
    buf = _buffer(ts, np.column_stack((ts, np.zeros(8), np.full(8, 3.0))))
    out, err = register_network_measurement(buf, est((ts[3], 0, 3), ts[3], Source.NETWORK))
    assert np.all(err == 0) and out == buf


def test_register_removes_constant_drift():
    ts = np.arange(20) / 30
    truth = np.column_stack((0.2 * ts, np.zeros(20), 3.0 - 0.4 * ts))
    buf = _buffer(ts, truth + (0.1, 0, 0))
    k = 6
    out, err = register_network_measurement(buf, est(truth[k], ts[k] + 0.004, Source.NETWORK))
    np.testing.assert_allclose(err, (-0.1, 0, 0), atol=1e-12)
    _, p = out.as_arrays()
    assert np.max(np.abs(p[k:] - truth[k:])) < 1e-9
    assert np.allclose(p[:k], truth[:k] + (0.1, 0, 0))
    # idempotent: the same measurement a second time is a no-op
    again, err2 = register_network_measurement(out, est(truth[k], ts[k] + 0.004, Source.NETWORK))
    assert np.all(err2 == 0) and again == out


def test_register_errors():
    ts = np.arange(1, 6) / 30
    buf = _buffer(ts, np.zeros((5, 3)) + (0, 0, 3))
    with pytest.raises(NoMatchingFrame):
        register_network_measurement(buf, est((0, 0, 3), 0.0, Source.NETWORK))
    with pytest.raises(EmptyBuffer):
        register_network_measurement(TrajectoryBuffer(), est((0, 0, 3), 0.0, Source.NETWORK))


# --- fused estimate and tracker ----------------------------------------------


def test_fused_estimate_examples():
    with pytest.raises(Uninitialized):
        fused_estimate(None, 0.0)
    with pytest.raises(Uninitialized):
        Tracker().fused_estimate(0.0)
    s = state(pos=(0.1, 0, 3), vel=(0, 0, -0.5), t=2.0)
    e, _ = fused_estimate(s, 2.0)
    assert e.position == Point3(0.1, 0, 3) and e.source is Source.FUSED
    e, _ = fused_estimate(s, 2.4)
    assert np.allclose(e.position, (0.1, 0, 2.8))
    traces = [np.trace(fused_estimate(s, 2.0 + h, 0.5)[1].covariance) for h in (0.0, 0.1, 1.0)]
    assert traces == sorted(traces)
    assert s.last_time == 2.0


def test_tracker_registration_flow():
    cfg = FusionConfig(pnp_period=0.1)
    tr = Tracker(cfg)
    tr.add(est((0, 0, 3), 0.0, Source.NETWORK))
    for k in range(1, 6):
        tr.add(est((0, 0, 3 + 0.05), 0.1 * k, Source.PNP))  # drifted PnP chain
    assert tr.fit is not None
    err = tr.add(est((0, 0, 3), 0.3, Source.NETWORK))
    np.testing.assert_allclose(err, (0, 0, -0.05), atol=1e-12)
    assert tr.anchor() == Point3(0, 0, 3.0)
    assert tr.fused_estimate(0.5).source is Source.FUSED
    assert tr.state.last_time == 0.5  # the late estimate bypassed the filter


def test_snapshot_reads_are_consistent():
    tr = Tracker()
    tr.add(est((0, 0, 3), 0.0))
    stop = threading.Event()
    seen = []

    def reader():
        while not stop.is_set():
            s = tr.snapshot()
            seen.append(s.last_time <= 10.0 and s.covariance.shape == (6, 6))

    th = threading.Thread(target=reader)
    th.start()
    for k in range(1, 300):
        tr.add(est((0, 0, 3), k / 30))
    stop.set()
    th.join()
    assert seen and all(seen)
