"""Direct linear transform PnP and two-set target-motion interpolation."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import (
    CheiralityFailure,
    DegenerateConfiguration,
    InsufficientPoints,
    InvalidConfig,
    NumericalError,
    PointSetFailure,
)
from .geometry import CameraIntrinsics, Pixel, Point3, Pose

MIN_POINTS = 6
# smallest-but-one singular value relative to the largest; below this the
# stacked system has rank < 11
_RANK_TOL = 1e-10


@dataclass(frozen=True)
class Correspondence:
    world: Point3
    image: Pixel

    def __post_init__(self):
        if not self.world[2] > 0:
            raise InvalidConfig(f"correspondence world point must have z > 0, got {self.world}")


@dataclass(frozen=True)
class PnPSolution:
    pose: Pose
    reprojection_rms: float
    points_used: int


def _as_arrays(corrs) -> tuple[np.ndarray, np.ndarray]:
    world = np.array([c.world for c in corrs], dtype=float).reshape(-1, 3)
    image = np.array([c.image for c in corrs], dtype=float).reshape(-1, 2)
    return world, image


def _nearest_rotation(M: np.ndarray) -> np.ndarray:
    U, _, Vt = np.linalg.svd(M)
    return U @ Vt


def solve_pnp_arrays(world: np.ndarray, image: np.ndarray, intr: CameraIntrinsics) -> PnPSolution:
    """DLT pose from (N, 3) points and their (N, 2) pixel observations."""
    world = np.asarray(world, dtype=float)
    image = np.asarray(image, dtype=float)
    n = len(world)
    if n < MIN_POINTS:
        raise InsufficientPoints(f"insufficient points ({n} < {MIN_POINTS})")

    xy_cam = intr.normalize(image)
    # isotropic 2D conditioning: x' = k2 (x - m2)
    m2 = xy_cam.mean(axis=0)
    spread2 = np.mean(np.linalg.norm(xy_cam - m2, axis=1))
    if spread2 <= 0:
        raise DegenerateConfiguration("all image points coincide")
    k2 = np.sqrt(2.0) / spread2
    xy = (xy_cam - m2) * k2
    centroid = world.mean(axis=0)
    spread = np.mean(np.linalg.norm(world - centroid, axis=1))
    if spread <= 0:
        raise DegenerateConfiguration("all world points coincide")
    k = np.sqrt(3.0) / spread
    P = np.column_stack(((world - centroid) * k, np.ones(n)))

    A = np.zeros((2 * n, 12))
    A[0::2, 0:4] = P
    A[0::2, 8:12] = -xy[:, 0:1] * P
    A[1::2, 4:8] = P
    A[1::2, 8:12] = -xy[:, 1:2] * P
    _, s, Vt = np.linalg.svd(A)
    if s[10] < _RANK_TOL * s[0]:
        raise DegenerateConfiguration(
            f"stacked system rank < 11 (sigma_11/sigma_1 = {s[10] / s[0]:.3g}); "
            "points collinear or coplanar"
        )
    T = Vt[-1].reshape(3, 4)
    # undo the image normalization: x = m2 + x'/k2
    N2inv = np.array([[1.0 / k2, 0.0, m2[0]], [0.0, 1.0 / k2, m2[1]], [0.0, 0.0, 1.0]])
    T = N2inv @ T

    # undo the point normalization: T [k(X - c); 1] = (k T3) X + (t - k T3 c)
    M = T[:, :3] * k
    t_raw = T[:, 3] - M @ centroid
    det = np.linalg.det(M)
    if det < 0:
        M, t_raw, det = -M, -t_raw, -det
    if det <= 0:
        raise DegenerateConfiguration("rotation block is singular")
    scale = np.cbrt(det)
    R = _nearest_rotation(M / scale)
    t = t_raw / scale

    cam = world @ R.T + t
    in_front = np.count_nonzero(cam[:, 2] > 0)
    if 2 * in_front <= n:
        # the sign fixed by det(R) = +1 is the only one yielding a proper rotation
        raise CheiralityFailure(f"only {in_front} of {n} points in front of the camera")

    return PnPSolution(Pose(R, t), reprojection_rms(world, image, intr, R, t), n)


def reprojection_rms(world, image, intr: CameraIntrinsics, R, t) -> float:
    cam = world @ R.T + t
    with np.errstate(divide="ignore", invalid="ignore"):
        proj = np.column_stack(
            (intr.fx * cam[:, 0] / cam[:, 2] + intr.cx, intr.fy * cam[:, 1] / cam[:, 2] + intr.cy)
        )
    err = float(np.sqrt(np.mean(np.sum((proj - image) ** 2, axis=1))))
    return err if np.isfinite(err) else float("inf")


def _skew(w):
    return np.array([[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]])


def _exp_so3(w):
    theta = np.linalg.norm(w)
    if theta < 1e-12:
        return np.eye(3) + _skew(w)
    K = _skew(w / theta)
    return np.eye(3) + np.sin(theta) * K + (1.0 - np.cos(theta)) * (K @ K)


def refine_pose(world, image, intr: CameraIntrinsics, R, t, iters: int = 20) -> tuple[np.ndarray, np.ndarray]:
    """Levenberg-Marquardt on pixel reprojection error over (rotation, translation)."""
    R = np.array(R, dtype=float)
    t = np.array(t, dtype=float)
    lam = 1e-3
    cost = reprojection_rms(world, image, intr, R, t)
    for _ in range(iters):
        RX = world @ R.T
        cam = RX + t
        z = cam[:, 2]
        if np.any(z <= 0):
            break
        u = intr.fx * cam[:, 0] / z + intr.cx
        v = intr.fy * cam[:, 1] / z + intr.cy
        r = np.concatenate((u - image[:, 0], v - image[:, 1]))
        # d(u, v)/d(cam) chained with d(cam)/d(omega) = -[RX]x and d(cam)/dt = I
        du = np.column_stack((intr.fx / z, np.zeros_like(z), -intr.fx * cam[:, 0] / z**2))
        dv = np.column_stack((np.zeros_like(z), intr.fy / z, -intr.fy * cam[:, 1] / z**2))
        skews = np.zeros((len(RX), 3, 3))
        skews[:, 0, 1], skews[:, 0, 2] = RX[:, 2], -RX[:, 1]
        skews[:, 1, 0], skews[:, 1, 2] = -RX[:, 2], RX[:, 0]
        skews[:, 2, 0], skews[:, 2, 1] = RX[:, 1], -RX[:, 0]
        Ju = np.hstack((np.einsum("ni,nij->nj", du, skews), du))
        Jv = np.hstack((np.einsum("ni,nij->nj", dv, skews), dv))
        J = np.vstack((Ju, Jv))
        A = J.T @ J
        g = J.T @ r
        improved = False
        for _ in range(10):
            step = -np.linalg.solve(A + lam * np.diag(np.diag(A) + 1e-12), g)
            R_new = _exp_so3(step[:3]) @ R
            t_new = t + step[3:]
            new_cost = reprojection_rms(world, image, intr, R_new, t_new)
            if new_cost < cost:
                R, t, cost = R_new, t_new, new_cost
                lam = max(lam / 10.0, 1e-12)
                improved = True
                break
            lam *= 10.0
        if not improved or np.linalg.norm(step) < 1e-12:
            break
    return _nearest_rotation(R), t


def solve_pnp(corrs, intr: CameraIntrinsics, refine: bool = False, initial: Pose | None = None) -> PnPSolution:
    """DLT pose; with ``refine`` it is polished by minimizing reprojection error.

    ``initial`` offers an alternative starting pose for the refinement (for
    example the identity between consecutive video frames); the start with
    the lower reprojection error wins.
    """
    world, image = _as_arrays(corrs)
    sol = solve_pnp_arrays(world, image, intr)
    if not refine:
        return sol
    R, t = sol.pose.rotation, sol.pose.translation
    if initial is not None:
        alt = reprojection_rms(world, image, intr, initial.rotation, initial.translation)
        if alt < sol.reprojection_rms:
            R, t = initial.rotation, initial.translation
    R, t = refine_pose(world, image, intr, R, t)
    return PnPSolution(Pose(R, t), reprojection_rms(world, image, intr, R, t), len(world))


def pnp_motion(fg, bg, intr: CameraIntrinsics, refine: bool = True) -> tuple[Pose, Pose]:
    """Solve ``(pose_fg, pose_cam)``: combined target+camera motion and camera ego-motion."""
    poses = []
    for which, corrs in (("fg", fg), ("bg", bg)):
        try:
            poses.append(solve_pnp(corrs, intr, refine=refine, initial=Pose.identity()).pose)
        except NumericalError as exc:
            raise PointSetFailure(which, exc) from exc
    return poses[0], poses[1]


def pnp_interpolate_position(prev_target, fg, bg, intr: CameraIntrinsics, refine: bool = True) -> Point3:
    """Carry the previous target position into the current camera frame.

    Foreground correspondences already combine the target's own motion with
    the camera's, so the new position is the foreground pose applied to
    ``prev_target``.  The background solve must still succeed: it validates
    the frame and provides the ego-motion (see :func:`pnp_motion`).
    """
    pose_fg, _ = pnp_motion(fg, bg, intr, refine)
    return Point3(*map(float, pose_fg.apply(np.asarray(prev_target, dtype=float))))


def load_correspondences(path) -> dict[str, list[Correspondence]]:
    """Read JSON-lines correspondences (keys X, Y, Z, u, v, set) grouped by set."""
    groups: dict[str, list[Correspondence]] = {"fg": [], "bg": []}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                which = rec.get("set", "fg")
                if which not in groups:
                    raise ValueError(f"unknown set {which!r}")
                groups[which].append(
                    Correspondence(
                        Point3(float(rec["X"]), float(rec["Y"]), float(rec["Z"])),
                        Pixel(float(rec["u"]), float(rec["v"])),
                    )
                )
            except (KeyError, ValueError, TypeError) as exc:
                raise InvalidConfig(f"{path}:{lineno}: bad correspondence ({exc})") from None
    return groups


def dump_correspondence(c: Correspondence, which: str) -> str:
    return json.dumps(
        {"X": c.world[0], "Y": c.world[1], "Z": c.world[2], "u": c.image[0], "v": c.image[1], "set": which}
    )
