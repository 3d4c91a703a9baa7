"""Synthetic leader/follower scenes and the open- and closed-loop pipelines.

The scene replaces the neural detector and depth network: it renders noisy
depth maps (planar background plus a fronto-parallel target rectangle),
jittered detection boxes, and foreground/background PnP correspondences
from fixed 3D landmarks.

World frame: x right, y down, z forward (the initial camera orientation).
Vehicles move in the x-z plane; heading 0 looks along +z and positive
heading turns toward +x.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .boxes import BBox
from .control import Controller, ControllerConfig
from .depth_target import Source, TargetEstimate, histogram_peak_depth, target_position
from .errors import InvalidConfig, MonoFollowError
from .fusion import FusionConfig, Tracker
from .geometry import CameraIntrinsics, DepthMap, Pixel, Point3, intrinsics_from_mapping, read_config
from .pnp import Correspondence, pnp_interpolate_position

LOG_COLUMNS = ["t", "src", "gt_x", "gt_y", "gt_z", "est_x", "est_y", "est_z", "src_failed", "steering", "speed"]
_PERIOD_SLACK = 0.02  # periods may undercut the frame period by 2% (0.033 s at 30 Hz)
_TICK_EPS = 1e-9


# --- configuration ----------------------------------------------------------


@dataclass(frozen=True)
class Segment:
    """One leg of the leader trajectory, relative to where the previous leg ended.

    ``line``: constant ``velocity``.  ``arc``: constant ``speed`` and
    ``yaw_rate`` starting at ``heading``.  ``cubic``: per-axis offset
    ``c1*tau + c2*tau^2 + c3*tau^3`` with ``coeffs`` of shape (3, 3).
    """

    kind: str
    duration: float
    velocity: tuple = (0.0, 0.0, 0.0)
    speed: float = 0.0
    yaw_rate: float = 0.0
    heading: float = 0.0
    coeffs: tuple = ((0.0, 0.0, 0.0),) * 3

    def __post_init__(self):
        if self.kind not in ("line", "arc", "cubic"):
            raise InvalidConfig(f"unknown segment kind {self.kind!r}")
        if not self.duration > 0:
            raise InvalidConfig("segment duration must be positive")

    def offset(self, tau: float) -> np.ndarray:
        if self.kind == "line":
            return np.asarray(self.velocity, dtype=float) * tau
        if self.kind == "cubic":
            c = np.asarray(self.coeffs, dtype=float).reshape(3, 3)
            return c @ np.array([tau, tau * tau, tau**3])
        h0, w = self.heading, self.yaw_rate
        if abs(w) < 1e-12:
            dx, dz = self.speed * tau * math.sin(h0), self.speed * tau * math.cos(h0)
        else:
            dx = self.speed / w * (math.cos(h0) - math.cos(h0 + w * tau))
            dz = self.speed / w * (math.sin(h0 + w * tau) - math.sin(h0))
        return np.array([dx, 0.0, dz])


@dataclass(frozen=True)
class LeaderTrajectory:
    start: tuple = (0.0, 0.0, 3.0)
    segments: tuple = ()

    def position(self, t: float) -> np.ndarray:
        p = np.asarray(self.start, dtype=float).copy()
        t0 = 0.0
        for seg in self.segments:
            if t <= t0 + seg.duration:
                return p + seg.offset(max(t - t0, 0.0))
            p = p + seg.offset(seg.duration)
            t0 += seg.duration
        return p


@dataclass(frozen=True)
class ScenarioConfig:
    duration: float = 10.0
    frame_rate: float = 30.0
    network_depth_period: float = 0.3
    pnp_period: float = 0.033
    leader: LeaderTrajectory = field(default_factory=LeaderTrajectory)
    background_depth: float = 8.0
    target_size: tuple = (0.6, 0.4)
    depth_noise_sigma: float = 0.05
    pixel_noise_sigma: float = 0.5
    detection_jitter: float = 1.0
    intrinsics: CameraIntrinsics = field(default_factory=lambda: CameraIntrinsics(200.0, 200.0, 160.0, 120.0))
    image_size: tuple = (320, 240)
    seed: int = 0
    target_landmarks: int = 24
    background_landmarks: int = 80
    target_body_length: float = 0.5
    follower_start: tuple = (0.0, 0.0, 0.0)  # x, z, heading (closed loop only)

    def __post_init__(self):
        if not (self.duration > 0 and self.frame_rate > 0):
            raise InvalidConfig("duration and frame_rate must be positive")
        frame_dt = 1.0 / self.frame_rate
        for name in ("network_depth_period", "pnp_period"):
            period = getattr(self, name)
            if period < 0 or (0 < period < frame_dt * (1.0 - _PERIOD_SLACK)):
                raise InvalidConfig(f"{name}={period} shorter than the frame period {frame_dt:.4g}")
        if self.network_depth_period == 0 and self.pnp_period == 0:
            raise InvalidConfig("at least one measurement source must be enabled")
        if min(self.depth_noise_sigma, self.pixel_noise_sigma, self.detection_jitter) < 0:
            raise InvalidConfig("noise levels must be >= 0")
        if not self.background_depth > 0:
            raise InvalidConfig("background_depth must be positive")
        if min(self.target_size) <= 0 or min(self.image_size) <= 0:
            raise InvalidConfig("target_size and image_size must be positive")
        if self.target_landmarks < 6 or self.background_landmarks < 6:
            raise InvalidConfig("need at least 6 target and 6 background landmarks")

    @property
    def frame_count(self) -> int:
        return int(math.floor(self.duration * self.frame_rate + _TICK_EPS)) + 1

    def frame_times(self) -> np.ndarray:
        return np.arange(self.frame_count) / self.frame_rate


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.replace(",", " ").split())


def load_scenario(path, seed: int | None = None):
    """Read a scenario file.

    Returns ``(ScenarioConfig, FusionConfig, ControllerConfig)``; the
    ``[fusion]`` and ``[controller]`` sections are optional.
    """
    cp = read_config(path)
    sc = cp["scenario"] if cp.has_section("scenario") else cp["DEFAULT"]
    kw: dict = {}
    try:
        for key in ("duration", "frame_rate", "network_depth_period", "pnp_period", "background_depth",
                    "depth_noise_sigma", "pixel_noise_sigma", "detection_jitter", "target_body_length"):
            if key in sc:
                kw[key] = float(sc[key])
        for key in ("seed", "target_landmarks", "background_landmarks"):
            if key in sc:
                kw[key] = int(sc[key])
        if "target_size" in sc:
            kw["target_size"] = _floats(sc["target_size"])
        if "image_size" in sc:
            kw["image_size"] = tuple(int(v) for v in _floats(sc["image_size"]))
        if cp.has_section("camera"):
            kw["intrinsics"] = intrinsics_from_mapping(cp["camera"])
        if cp.has_section("follower") and "start" in cp["follower"]:
            kw["follower_start"] = _floats(cp["follower"]["start"])
        start = _floats(cp["leader"]["start"]) if cp.has_section("leader") else (0.0, 0.0, 3.0)
        segs = []
        names = sorted((s for s in cp.sections() if s.startswith("leader.segment.")),
                       key=lambda s: int(s.rsplit(".", 1)[1]))
        for name in names:
            s = cp[name]
            seg = {"kind": s.get("kind", "line"), "duration": float(s["duration"])}
            if "velocity" in s:
                seg["velocity"] = _floats(s["velocity"])
            for key in ("speed", "yaw_rate", "heading"):
                if key in s:
                    seg[key] = float(s[key])
            if "coeffs" in s:
                c = _floats(s["coeffs"])
                seg["coeffs"] = (c[0:3], c[3:6], c[6:9])
            segs.append(Segment(**seg))
        kw["leader"] = LeaderTrajectory(start, tuple(segs))
        if seed is not None:
            kw["seed"] = seed
        scen = ScenarioConfig(**kw)

        fk: dict = {}
        if cp.has_section("fusion"):
            f = cp["fusion"]
            for key in ("process_noise_scale", "init_position_var", "init_velocity_var"):
                if key in f:
                    fk[key] = float(f[key])
            if "buffer_capacity" in f:
                fk["buffer_capacity"] = int(f["buffer_capacity"])
            for key in ("meas_noise_network", "meas_noise_pnp"):
                if key in f:
                    vals = _floats(f[key])
                    fk[key] = np.array(vals).reshape(3, 3) if len(vals) == 9 else np.array(vals)
        fk.setdefault("pnp_period", scen.pnp_period or 1.0 / scen.frame_rate)
        fusion = FusionConfig(**fk)

        ck: dict = {}
        if cp.has_section("controller"):
            c = cp["controller"]
            for key in ControllerConfig.__dataclass_fields__:
                if key in c:
                    ck[key] = float(c[key])
        return scen, fusion, ControllerConfig(**ck)
    except (KeyError, ValueError, TypeError, IndexError) as exc:
        raise InvalidConfig(f"{path}: bad scenario config ({exc})") from None


# --- scene model ------------------------------------------------------------


def camera_rotation(heading: float) -> np.ndarray:
    """World-to-camera rotation for a camera yawed by ``heading``."""
    c, s = math.cos(heading), math.sin(heading)
    return np.array([[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]])


@dataclass(frozen=True)
class CameraPose:
    x: float = 0.0
    z: float = 0.0
    heading: float = 0.0

    def to_camera(self, pts: np.ndarray) -> np.ndarray:
        centre = np.array([self.x, 0.0, self.z])
        return (np.asarray(pts, dtype=float) - centre) @ camera_rotation(self.heading).T


@dataclass
class FrameRecord:
    timestamp: float
    ground_truth: np.ndarray  # target reference point in camera coordinates
    box: BBox | None
    depth_map: DepthMap | None = None
    fg: list | None = None
    bg: list | None = None
    pnp_tick: bool = False

    def to_json(self) -> str:
        def corr(cs):
            return None if cs is None else [[*c.world, *c.image] for c in cs]

        b = self.box
        return json.dumps(
            {
                "t": round(self.timestamp, 9),
                "gt": [float(f"{v:.9g}") for v in self.ground_truth],
                "box": None if b is None else [float(f"{v:.9g}") for v in (b.x1, b.y1, b.x2, b.y2)],
                "network": self.depth_map is not None,
                "pnp": self.pnp_tick,
                "fg": corr(self.fg),
                "bg": corr(self.bg),
            },
            separators=(",", ":"),
        )


class Scene:
    """Landmarks and rendering for one scenario; owns the noise stream."""

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.rng = np.random.default_rng(cfg.seed)
        w, h = cfg.target_size
        n = cfg.target_landmarks
        self.target_offsets = np.column_stack(
            (
                self.rng.uniform(-w / 2, w / 2, n),
                self.rng.uniform(-h / 2, h / 2, n),
                self.rng.uniform(0.0, cfg.target_body_length, n),
            )
        )
        m = cfg.background_landmarks
        half_w = 0.5 * cfg.image_size[0] / cfg.intrinsics.fx * cfg.background_depth
        half_h = 0.5 * cfg.image_size[1] / cfg.intrinsics.fy * cfg.background_depth
        self.background_points = np.column_stack(
            (
                self.rng.uniform(-half_w, half_w, m),
                self.rng.uniform(-half_h, half_h, m),
                cfg.background_depth + self.rng.uniform(-1.5, 20.0, m),
            )
        )

    def target_world(self, t: float) -> np.ndarray:
        return self.cfg.leader.position(t)

    def _visible(self, cam_pts: np.ndarray) -> np.ndarray:
        intr = self.cfg.intrinsics
        W, H = self.cfg.image_size
        ok = cam_pts[:, 2] > 0.1
        with np.errstate(divide="ignore", invalid="ignore"):
            u = intr.fx * cam_pts[:, 0] / cam_pts[:, 2] + intr.cx
            v = intr.fy * cam_pts[:, 1] / cam_pts[:, 2] + intr.cy
        return ok & (u >= 0) & (u <= W) & (v >= 0) & (v <= H)

    def target_rect(self, ref_cam: np.ndarray):
        """Projected front face ``(u1, v1, u2, v2)`` of a target at ``ref_cam``."""
        intr = self.cfg.intrinsics
        w, h = self.cfg.target_size
        x, y, z = ref_cam
        return (
            intr.fx * (x - w / 2) / z + intr.cx,
            intr.fy * (y - h / 2) / z + intr.cy,
            intr.fx * (x + w / 2) / z + intr.cx,
            intr.fy * (y + h / 2) / z + intr.cy,
        )

    def render_depth(self, ref_cam: np.ndarray) -> DepthMap:
        cfg = self.cfg
        W, H = cfg.image_size
        depth = np.full((H, W), cfg.background_depth)
        if ref_cam[2] > 0:
            u1, v1, u2, v2 = self.target_rect(ref_cam)
            cu = np.arange(W) + 0.5
            cv = np.arange(H) + 0.5
            inside = ((cv >= v1) & (cv <= v2))[:, None] & ((cu >= u1) & (cu <= u2))[None, :]
            depth[inside] = ref_cam[2]
        if cfg.depth_noise_sigma > 0:
            depth = depth + self.rng.normal(0.0, cfg.depth_noise_sigma, depth.shape)
        return DepthMap(depth)

    def detect(self, ref_cam: np.ndarray) -> BBox | None:
        if ref_cam[2] <= 0.1:
            return None
        j = self.cfg.detection_jitter
        jitter = self.rng.uniform(-j, j, 4) if j > 0 else np.zeros(4)
        u1, v1, u2, v2 = np.array(self.target_rect(ref_cam)) + jitter
        if u2 <= u1 or v2 <= v1:
            return None
        return BBox(float(u1), float(v1), float(u2), float(v2))

    def correspondences(self, prev_world, cur_world, prev_pose: CameraPose, pose: CameraPose) -> list:
        """Landmarks in the previous camera frame matched to their noisy current pixels."""
        intr = self.cfg.intrinsics
        prev_cam = prev_pose.to_camera(prev_world)
        cur_cam = pose.to_camera(cur_world)
        sigma = self.cfg.pixel_noise_sigma
        # one draw per landmark whether visible or not keeps the stream aligned
        noise = self.rng.normal(0.0, sigma, (len(prev_cam), 2)) if sigma > 0 else np.zeros((len(prev_cam), 2))
        keep = self._visible(prev_cam) & self._visible(cur_cam)
        out = []
        for i in np.nonzero(keep)[0]:
            c = cur_cam[i]
            u = intr.fx * c[0] / c[2] + intr.cx + noise[i, 0]
            v = intr.fy * c[1] / c[2] + intr.cy + noise[i, 1]
            out.append(Correspondence(Point3(*map(float, prev_cam[i])), Pixel(float(u), float(v))))
        return out

    def observe(self, t: float, pose: CameraPose, network_tick: bool, pnp_prev=None) -> FrameRecord:
        """Render one frame; ``pnp_prev`` is ``(t_prev, pose_prev)`` on PnP ticks that have history."""
        ref_cam = pose.to_camera(self.target_world(t)[None, :])[0]
        rec = FrameRecord(t, ref_cam, self.detect(ref_cam))
        if network_tick:
            rec.depth_map = self.render_depth(ref_cam)
        if pnp_prev is not None:
            t_prev, pose_prev = pnp_prev
            rec.pnp_tick = True
            rec.fg = self.correspondences(
                self.target_world(t_prev) + self.target_offsets,
                self.target_world(t) + self.target_offsets,
                pose_prev,
                pose,
            )
            rec.bg = self.correspondences(self.background_points, self.background_points, pose_prev, pose)
        return rec


def tick_schedule(cfg: ScenarioConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Frame times plus boolean network/PnP tick masks.

    A source fires on the first frame at or after each multiple of its period.
    """
    times = cfg.frame_times()

    def ticks(period):
        if period <= 0:
            return np.zeros(len(times), dtype=bool)
        slot = np.floor(times / period + _TICK_EPS)
        fire = np.ones(len(times), dtype=bool)
        fire[1:] = slot[1:] > slot[:-1]
        return fire

    return times, ticks(cfg.network_depth_period), ticks(cfg.pnp_period)


def generate_scenario(cfg: ScenarioConfig) -> list[FrameRecord]:
    """Frames seen by a static camera at the world origin."""
    scene = Scene(cfg)
    times, net, pnp = tick_schedule(cfg)
    pose = CameraPose()
    frames = []
    last_pnp = None
    for t, is_net, is_pnp in zip(times, net, pnp):
        prev = (last_pnp, pose) if (is_pnp and last_pnp is not None) else None
        frames.append(scene.observe(float(t), pose, bool(is_net), prev))
        if is_pnp:
            last_pnp = float(t)
    return frames


# --- run logs ---------------------------------------------------------------


@dataclass(frozen=True)
class LogRow:
    t: float
    src: str
    gt: tuple
    est: tuple | None
    failed: bool = False
    steering: float | None = None
    speed: float | None = None

    def cells(self) -> list[str]:
        def g(v):
            return "" if v is None else f"{v:.9g}"

        est = self.est if self.est is not None else (None, None, None)
        return [g(self.t), self.src, *(g(v) for v in self.gt), *(g(v) for v in est),
                "1" if self.failed else "0", g(self.steering), g(self.speed)]


@dataclass
class RunLog:
    rows: list = field(default_factory=list)
    follower: list = field(default_factory=list)  # (t, x, z, heading) per frame, closed loop only

    def add(self, row: LogRow) -> None:
        self.rows.append(row)

    def select(self, src: str, include_failed: bool = False) -> list[LogRow]:
        return [r for r in self.rows if r.src == src and (include_failed or not r.failed)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(LOG_COLUMNS)
        for r in self.rows:
            w.writerow(r.cells())
        return buf.getvalue()

    def write_csv(self, path) -> None:
        Path(path).write_text(self.to_csv(), encoding="utf-8")

    @classmethod
    def read_csv(cls, path) -> RunLog:
        log = cls()
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            missing = [c for c in LOG_COLUMNS[:8] if c not in (reader.fieldnames or [])]
            if missing:
                raise InvalidConfig(f"{path}: missing columns {missing}")
            for rec in reader:
                def f(key):
                    v = rec.get(key, "")
                    return None if v in ("", None) else float(v)

                est = tuple(f(k) for k in ("est_x", "est_y", "est_z"))
                log.add(
                    LogRow(
                        f("t"),
                        rec["src"],
                        tuple(f(k) for k in ("gt_x", "gt_y", "gt_z")),
                        None if None in est else est,
                        rec.get("src_failed", "0") == "1",
                        f("steering"),
                        f("speed"),
                    )
                )
        return log


# --- pipelines --------------------------------------------------------------


class Pipeline:
    """Per-frame processing shared by the open- and closed-loop runs."""

    def __init__(self, intr: CameraIntrinsics, fusion_cfg: FusionConfig, use_network: bool = True):
        self.intr = intr
        self.tracker = Tracker(fusion_cfg)
        self.use_network = use_network

    def seed(self, position, t: float) -> None:
        """Initialize from a known position (used when the network source is off)."""
        self.tracker.add_network(TargetEstimate(Point3(*position), t, Source.NETWORK))

    def process(self, rec: FrameRecord, log: RunLog) -> None:
        gt = tuple(float(v) for v in rec.ground_truth)
        t = rec.timestamp
        if rec.pnp_tick:
            try:
                if not self.tracker.initialized:
                    raise MonoFollowError("no anchor position yet")
                p = pnp_interpolate_position(self.tracker.anchor(), rec.fg, rec.bg, self.intr)
                est = TargetEstimate(p, t, Source.PNP)
                self.tracker.add_pnp(est)
                log.add(LogRow(t, "pnp", gt, tuple(est.position)))
            except MonoFollowError:
                log.add(LogRow(t, "pnp", gt, None, failed=True))
        if rec.depth_map is not None and self.use_network:
            try:
                if rec.box is None:
                    raise MonoFollowError("no detection")
                peak = histogram_peak_depth(rec.depth_map, rec.box)
                est = target_position(self.intr, rec.box, peak.depth, t)
                self.tracker.add_network(est)
                log.add(LogRow(t, "network", gt, tuple(est.position)))
            except MonoFollowError:
                log.add(LogRow(t, "network", gt, None, failed=True))

    def fused(self, t: float) -> TargetEstimate | None:
        if not self.tracker.initialized:
            return None
        return self.tracker.fused_estimate(t)


def run_open_loop(frames, cfg: ScenarioConfig, fusion_cfg: FusionConfig | None = None,
                  use_network: bool = True) -> RunLog:
    """Fuse a pre-generated frame sequence from a static camera."""
    fusion_cfg = fusion_cfg or FusionConfig(pnp_period=cfg.pnp_period or 1.0 / cfg.frame_rate)
    pipe = Pipeline(cfg.intrinsics, fusion_cfg, use_network and cfg.network_depth_period > 0)
    log = RunLog()
    for i, rec in enumerate(frames):
        if i == 0 and not pipe.use_network:
            pipe.seed(rec.ground_truth, rec.timestamp)
        pipe.process(rec, log)
        fused = pipe.fused(rec.timestamp)
        if fused is not None:
            log.add(LogRow(rec.timestamp, "fused", tuple(map(float, rec.ground_truth)), tuple(fused.position)))
    return log


def run_closed_loop(cfg: ScenarioConfig, fusion_cfg: FusionConfig | None = None,
                    ctrl_cfg: ControllerConfig | None = None) -> RunLog:
    """Follow the leader with a kinematic-bicycle follower carrying the camera."""
    fusion_cfg = fusion_cfg or FusionConfig(pnp_period=cfg.pnp_period or 1.0 / cfg.frame_rate)
    ctrl = Controller(ctrl_cfg)
    L = ctrl.cfg.wheelbase
    scene = Scene(cfg)
    times, net, pnp = tick_schedule(cfg)
    dt = 1.0 / cfg.frame_rate
    pipe = Pipeline(cfg.intrinsics, fusion_cfg, cfg.network_depth_period > 0)
    x, z, heading = (float(v) for v in cfg.follower_start)
    log = RunLog()
    last_pnp = None
    for i, (t, is_net, is_pnp) in enumerate(zip(times, net, pnp)):
        t = float(t)
        pose = CameraPose(x, z, heading)
        prev = last_pnp if (is_pnp and last_pnp is not None) else None
        rec = scene.observe(t, pose, bool(is_net), prev)
        if is_pnp:
            last_pnp = (t, pose)
        if i == 0 and not pipe.use_network:
            pipe.seed(rec.ground_truth, t)
        pipe.process(rec, log)
        log.follower.append((t, x, z, heading))
        fused = pipe.fused(t)
        gt = tuple(map(float, rec.ground_truth))
        if fused is None:
            continue
        try:
            cmd = ctrl.command(fused.position.x, fused.position.z, dt)
        except MonoFollowError:
            log.add(LogRow(t, "fused", gt, tuple(fused.position), failed=True, steering=0.0, speed=0.0))
            continue
        log.add(LogRow(t, "fused", gt, tuple(fused.position), steering=cmd.steering, speed=cmd.speed))
        # explicit Euler step of the kinematic bicycle
        x += cmd.speed * math.sin(heading) * dt
        z += cmd.speed * math.cos(heading) * dt
        heading += cmd.speed * math.tan(cmd.steering) / L * dt
    return log


def write_frames(path, frames) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in frames:
            fh.write(rec.to_json() + "\n")


# --- log analysis -----------------------------------------------------------


def _z_series(rows):
    return np.array([r.t for r in rows]), np.array([r.est[2] for r in rows]), np.array([r.gt[2] for r in rows])


def jitter(log: RunLog) -> tuple[float, float]:
    """Std of frame-to-frame depth differences: ``(fused, raw interleaved)``."""
    _, fz, _ = _z_series(log.select("fused"))
    raw = [r for r in log.rows if r.src in ("network", "pnp") and not r.failed]
    rz = np.array([r.est[2] for r in raw])
    return float(np.std(np.diff(fz))), float(np.std(np.diff(rz)))


def depth_rms_by_source(log: RunLog) -> dict[str, float]:
    """Depth RMS error of each source over every frame, holding its latest estimate.

    Only frames at which all three sources already have an estimate count.
    """
    fused = log.select("fused")
    frame_t = np.array([r.t for r in fused])
    gt_z = np.array([r.gt[2] for r in fused])
    held = {}
    for src in ("network", "pnp", "fused"):
        t, z, _ = _z_series(log.select(src))
        if not len(t):
            continue
        k = np.searchsorted(t, frame_t + _TICK_EPS, side="right") - 1
        vals = np.where(k >= 0, z[np.clip(k, 0, None)], np.nan)
        held[src] = vals
    ok = np.all([~np.isnan(v) for v in held.values()], axis=0)
    return {src: float(np.sqrt(np.mean((v[ok] - gt_z[ok]) ** 2))) for src, v in held.items()}


def standard_scenario(**overrides) -> ScenarioConfig:
    """The reference open-loop scene: 30 Hz, network every 0.3 s, PnP every 0.033 s."""
    leader = LeaderTrajectory(
        (0.2, 0.0, 3.0),
        (
            Segment("line", 4.0, velocity=(0.05, 0.0, 0.4)),
            Segment("cubic", 4.0, coeffs=((-0.1, 0.0, 0.0), (0.0, 0.0, 0.0), (0.4, -0.3, 0.02))),
            Segment("line", 4.0, velocity=(0.0, 0.0, -0.35)),
        ),
    )
    base = dict(duration=12.0, frame_rate=30.0, network_depth_period=0.3, pnp_period=0.033,
                depth_noise_sigma=0.05, pixel_noise_sigma=0.5, seed=0, leader=leader)
    base.update(overrides)
    return ScenarioConfig(**base)


def replace_config(cfg, **changes):
    return replace(cfg, **changes)
