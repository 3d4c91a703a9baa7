"""Virtual normals: constrained triplet sampling, plane normals and the VN loss."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateTriplet,
    InvalidConfig,
    LengthMismatch,
    SamplingExhausted,
    ShapeMismatch,
)
from .geometry import CameraIntrinsics, DepthMap, Point3

_CROSS_EPS = 1e-12
_BATCH = 256


@dataclass(frozen=True)
class TripletConstraints:
    beta_min: float = math.radians(30.0)
    alpha_max: float = math.radians(120.0)
    theta_min: float = 0.6
    max_attempts_per_triplet: int = 200

    def __post_init__(self):
        if not 0 < self.beta_min < self.alpha_max < math.pi:
            raise InvalidConfig("need 0 < beta_min < alpha_max < pi")
        if not self.theta_min > 0:
            raise InvalidConfig("theta_min must be positive")
        if self.max_attempts_per_triplet < 1:
            raise InvalidConfig("max_attempts_per_triplet must be >= 1")


@dataclass(frozen=True)
class PointTriplet:
    a: Point3
    b: Point3
    c: Point3
    indices: tuple  # pixel indices (row, col) of a, b, c


def _angles_between(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    nu = np.linalg.norm(u, axis=-1)
    nv = np.linalg.norm(v, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        cos = np.einsum("ij,ij->i", u, v) / (nu * nv)
    return np.arccos(np.clip(np.nan_to_num(cos, nan=1.0), -1.0, 1.0))


def _satisfies(A: np.ndarray, B: np.ndarray, C: np.ndarray, c: TripletConstraints) -> np.ndarray:
    ang_a = _angles_between(B - A, C - A)
    ang_b = _angles_between(C - B, A - B)
    ok = (ang_a >= c.beta_min) & (ang_a <= c.alpha_max)
    ok &= (ang_b >= c.beta_min) & (ang_b <= c.alpha_max)
    for P, Q in ((A, B), (B, C), (A, C)):
        ok &= np.linalg.norm(P - Q, axis=-1) > c.theta_min
    return ok


def sample_triplet_indices(
    points: np.ndarray, c: TripletConstraints, n_groups: int, rng: np.random.Generator
) -> np.ndarray:
    """Rejection-sample ``n_groups`` index triplets into ``points`` (N, 3)."""
    n = len(points)
    if n < 3:
        raise SamplingExhausted(f"need at least 3 points, got {n}")
    budget = c.max_attempts_per_triplet * n_groups
    rejections = 0
    accepted: list[np.ndarray] = []
    have = 0
    while have < n_groups:
        idx = rng.integers(0, n, size=(_BATCH, 3))
        distinct = (idx[:, 0] != idx[:, 1]) & (idx[:, 1] != idx[:, 2]) & (idx[:, 0] != idx[:, 2])
        ok = distinct & _satisfies(points[idx[:, 0]], points[idx[:, 1]], points[idx[:, 2]], c)
        # walk the batch in draw order: stop at the quota or at budget exhaustion
        acc = np.cumsum(ok)
        rej = rejections + np.cumsum(~ok)
        done = np.nonzero(acc == n_groups - have)[0]
        blown = np.nonzero(rej > budget)[0]
        stop_done = done[0] if done.size else _BATCH
        stop_blown = blown[0] if blown.size else _BATCH
        if stop_done < stop_blown:
            accepted.append(idx[: stop_done + 1][ok[: stop_done + 1]])
            return np.concatenate(accepted)
        if stop_blown < _BATCH:
            have += int(acc[stop_blown])
            break
        accepted.append(idx[ok])
        have += int(acc[-1])
        rejections = int(rej[-1])
    raise SamplingExhausted(
        f"exceeded {budget} rejected draws while sampling {n_groups} triplets "
        f"(filled {have}); cloud too small/degenerate or constraints too tight"
    )


def sample_triplets(
    cloud, c: TripletConstraints, n_groups: int, seed: int, pixel_indices=None
) -> list[PointTriplet]:
    """Sample constrained point triplets from ``cloud``.

    ``cloud`` is a sequence of 3D points; ``pixel_indices`` optionally gives
    the (row, col) each point came from (defaults to the point's list index).
    """
    pts = np.asarray(cloud, dtype=float).reshape(-1, 3)
    if pixel_indices is None:
        pixel_indices = [(i,) for i in range(len(pts))]
    rng = np.random.default_rng(seed)
    idx = sample_triplet_indices(pts, c, n_groups, rng)
    out = []
    for i, j, k in idx:
        out.append(
            PointTriplet(
                Point3(*map(float, pts[i])),
                Point3(*map(float, pts[j])),
                Point3(*map(float, pts[k])),
                (tuple(pixel_indices[i]), tuple(pixel_indices[j]), tuple(pixel_indices[k])),
            )
        )
    return out


def _canonical_sign(n: np.ndarray) -> np.ndarray:
    """Per-row sign making z >= 0, falling back to y then x on ties."""
    sign = np.ones(len(n))
    undecided = np.ones(len(n), dtype=bool)
    for axis in (2, 1, 0):
        comp = n[:, axis]
        decide = undecided & (np.abs(comp) > _CROSS_EPS)
        sign[decide & (comp < 0)] = -1.0
        undecided &= ~decide
    return sign


def normals_of(A: np.ndarray, B: np.ndarray, C: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized canonical normals of the planes through rows of A, B, C.

    Returns ``(normals, ok)``; rows where the cross product vanishes have
    ``ok`` False and a zero normal.
    """
    cr = np.cross(C - A, B - A)
    norm = np.linalg.norm(cr, axis=-1)
    ok = norm > _CROSS_EPS
    n = np.zeros_like(cr)
    n[ok] = cr[ok] / norm[ok, None]
    n *= _canonical_sign(n)[:, None]
    return n, ok


def triplet_normal(t: PointTriplet) -> np.ndarray:
    n, ok = normals_of(
        np.asarray([t.a], dtype=float), np.asarray([t.b], dtype=float), np.asarray([t.c], dtype=float)
    )
    if not ok[0]:
        raise DegenerateTriplet("triplet points are (near-)collinear")
    return n[0]


def vnl_loss(pred, gt) -> float:
    """Mean Euclidean distance between index-aligned unit normals."""
    p = np.asarray(pred, dtype=float).reshape(-1, 3)
    g = np.asarray(gt, dtype=float).reshape(-1, 3)
    if len(p) != len(g) or len(p) == 0:
        raise LengthMismatch(f"normal lists must be equal and non-empty ({len(p)} vs {len(g)})")
    return float(np.mean(np.linalg.norm(p - g, axis=1)))


def vnl_between_depth_maps(
    intr: CameraIntrinsics,
    pred_dm: DepthMap,
    gt_dm: DepthMap,
    c: TripletConstraints | None = None,
    n_groups: int = 100,
    seed: int = 0,
) -> float:
    """VN loss of ``pred_dm`` against ``gt_dm`` over triplets anchored on the gt cloud.

    Triplets that collapse in the predicted cloud contribute the maximal loss 2.
    """
    c = c or TripletConstraints()
    if pred_dm.shape != gt_dm.shape:
        raise ShapeMismatch(f"depth map shapes differ: {pred_dm.shape} vs {gt_dm.shape}")
    shared = pred_dm.valid & gt_dm.valid
    rows, cols = np.nonzero(shared)
    if rows.size < 3:
        raise SamplingExhausted(f"only {rows.size} shared valid cells")
    u = cols + 0.5
    v = rows + 0.5

    def cloud(dm):
        d = dm.values[rows, cols]
        return np.column_stack((d * (u - intr.cx) / intr.fx, d * (v - intr.cy) / intr.fy, d))

    gt_pts = cloud(gt_dm)
    pred_pts = cloud(pred_dm)
    idx = sample_triplet_indices(gt_pts, c, n_groups, np.random.default_rng(seed))
    n_gt, _ = normals_of(gt_pts[idx[:, 0]], gt_pts[idx[:, 1]], gt_pts[idx[:, 2]])
    n_pred, ok = normals_of(pred_pts[idx[:, 0]], pred_pts[idx[:, 1]], pred_pts[idx[:, 2]])
    dist = np.linalg.norm(n_pred - n_gt, axis=1)
    dist[~ok] = 2.0
    return float(dist.mean())
