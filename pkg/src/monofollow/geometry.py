"""Pinhole camera model, poses and depth maps.

Pixel coordinates are continuous: grid cell ``(r, c)`` is sampled at pixel
``(c + 0.5, r + 0.5)``.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import EmptyDepthMap, InvalidConfig, InvalidPose, NonPositiveDepth, ShapeMismatch


class Pixel(NamedTuple):
    u: float
    v: float


class Point3(NamedTuple):
    x: float
    y: float
    z: float


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise InvalidConfig(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])

    def normalize(self, uv: np.ndarray) -> np.ndarray:
        """Map an (N, 2) array of pixels to normalized image coordinates."""
        uv = np.asarray(uv, dtype=float)
        return np.column_stack(((uv[:, 0] - self.cx) / self.fx, (uv[:, 1] - self.cy) / self.fy))


@dataclass(frozen=True)
class Pose:
    """Rigid transform ``x_cam = rotation @ x + translation``."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        R = np.array(self.rotation, dtype=float).reshape(3, 3)
        t = np.array(self.translation, dtype=float).reshape(3)
        if not np.allclose(R.T @ R, np.eye(3), atol=1e-9, rtol=0):
            raise InvalidPose("rotation is not orthonormal")
        if abs(np.linalg.det(R) - 1.0) > 1e-9:
            raise InvalidPose("rotation determinant is not +1")
        R.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> Pose:
        return cls(np.eye(3), np.zeros(3))

    def apply(self, points) -> np.ndarray:
        """Transform a single point or an (N, 3) array."""
        p = np.asarray(points, dtype=float)
        return p @ self.rotation.T + self.translation

    def compose(self, other: Pose) -> Pose:
        """``self ∘ other``: apply ``other`` first."""
        return Pose(self.rotation @ other.rotation, self.rotation @ other.translation + self.translation)

    def inverse(self) -> Pose:
        Rt = self.rotation.T
        return Pose(Rt, -Rt @ self.translation)


def rotation_angle(R: np.ndarray) -> float:
    """Angle of a rotation matrix in radians."""
    c = (np.trace(R) - 1.0) / 2.0
    s = np.linalg.norm([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]]) / 2.0
    return float(np.arctan2(s, np.clip(c, -1.0, 1.0)))


def rotation_from_axis_angle(axis, angle: float) -> np.ndarray:
    k = np.asarray(axis, dtype=float)
    k = k / np.linalg.norm(k)
    K = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * (K @ K)


@dataclass(frozen=True)
class DepthMap:
    """Dense metric depth with an explicit validity mask (row-major, shape ``(height, width)``)."""

    values: np.ndarray
    valid: np.ndarray = field(default=None)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 2 or vals.size == 0:
            raise ShapeMismatch(f"depth map must be a non-empty 2D grid, got shape {vals.shape}")
        if self.valid is None:
            valid = np.isfinite(vals) & (vals > 0)
        else:
            valid = np.array(self.valid, dtype=bool)
            if valid.shape != vals.shape:
                raise ShapeMismatch(f"mask shape {valid.shape} != values shape {vals.shape}")
            # a cell flagged valid must still hold a positive finite depth
            valid &= np.isfinite(vals) & (vals > 0)
        vals.setflags(write=False)
        valid.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "valid", valid)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def valid_count(self) -> int:
        return int(self.valid.sum())


def project(intr: CameraIntrinsics, p) -> Pixel:
    x, y, z = (float(c) for c in p)
    if not z > 0:
        raise NonPositiveDepth(f"cannot project point with z={z}")
    return Pixel(intr.fx * x / z + intr.cx, intr.fy * y / z + intr.cy)


def back_project(intr: CameraIntrinsics, px, d: float) -> Point3:
    u, v = (float(c) for c in px)
    if not d > 0:
        raise NonPositiveDepth(f"depth must be positive, got {d}")
    return Point3(d * (u - intr.cx) / intr.fx, d * (v - intr.cy) / intr.fy, float(d))


def project_points(intr: CameraIntrinsics, pts: np.ndarray) -> np.ndarray:
    """Vectorized ``project`` over an (N, 3) array."""
    pts = np.asarray(pts, dtype=float)
    if np.any(pts[:, 2] <= 0):
        raise NonPositiveDepth("point behind the camera")
    return np.column_stack(
        (intr.fx * pts[:, 0] / pts[:, 2] + intr.cx, intr.fy * pts[:, 1] / pts[:, 2] + intr.cy)
    )


def cloud_with_indices(intr: CameraIntrinsics, dm: DepthMap) -> tuple[np.ndarray, np.ndarray]:
    """Back-project every valid cell.

    Returns ``(points, indices)`` where ``points`` is (N, 3) and ``indices``
    holds the (row, col) of each point, both in row-major order.
    """
    rows, cols = np.nonzero(dm.valid)
    if rows.size == 0:
        raise EmptyDepthMap("depth map has no valid cells")
    d = dm.values[rows, cols]
    u = cols + 0.5
    v = rows + 0.5
    pts = np.column_stack((d * (u - intr.cx) / intr.fx, d * (v - intr.cy) / intr.fy, d))
    return pts, np.column_stack((rows, cols))


def depth_map_to_cloud(intr: CameraIntrinsics, dm: DepthMap) -> list[Point3]:
    pts, _ = cloud_with_indices(intr, dm)
    return [Point3(*map(float, p)) for p in pts]


# --- file formats -----------------------------------------------------------


def load_depth_txt(path) -> DepthMap:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise InvalidConfig(f"{path}: first line must be 'width height'")
        width, height = int(header[0]), int(header[1])
        data = np.loadtxt(fh, dtype=float, ndmin=2)
    if data.shape != (height, width):
        raise ShapeMismatch(f"{path}: expected {height}x{width} values, got {data.shape}")
    return DepthMap(data)


def save_depth_txt(path, dm: DepthMap) -> None:
    vals = np.where(dm.valid, dm.values, 0.0)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{dm.width} {dm.height}\n")
        for row in vals:
            fh.write(" ".join(f"{v:.9g}" for v in row) + "\n")


def load_pfm(path) -> DepthMap:
    with open(path, "rb") as fh:
        magic = fh.readline().strip()
        if magic != b"Pf":
            raise InvalidConfig(f"{path}: only single-channel 'Pf' PFM is supported")
        dims = fh.readline().split()
        width, height = int(dims[0]), int(dims[1])
        scale = float(fh.readline().strip())
        dtype = "<f4" if scale < 0 else ">f4"
        data = np.frombuffer(fh.read(width * height * 4), dtype=dtype)
    if data.size != width * height:
        raise ShapeMismatch(f"{path}: truncated PFM payload")
    # PFM rows run bottom to top
    return DepthMap(np.flipud(data.reshape(height, width)).astype(float))


def save_pfm(path, dm: DepthMap) -> None:
    vals = np.where(dm.valid, dm.values, 0.0).astype("<f4")
    with open(path, "wb") as fh:
        fh.write(b"Pf\n")
        fh.write(f"{dm.width} {dm.height}\n".encode())
        fh.write(b"-1.0\n")
        fh.write(np.flipud(vals).tobytes())


def load_depth(path) -> DepthMap:
    """Load a depth map, picking the format from the file extension."""
    if Path(path).suffix.lower() == ".pfm":
        return load_pfm(path)
    return load_depth_txt(path)


def save_depth(path, dm: DepthMap) -> None:
    if Path(path).suffix.lower() == ".pfm":
        save_pfm(path, dm)
    else:
        save_depth_txt(path, dm)


def read_config(path) -> configparser.ConfigParser:
    """Read an INI-style file; keys before any section land in ``[DEFAULT]``."""
    text = Path(path).read_text(encoding="utf-8")
    parser = configparser.ConfigParser()
    try:
        try:
            parser.read_string(text)
        except configparser.MissingSectionHeaderError:
            parser = configparser.ConfigParser()
            parser.read_string("[DEFAULT]\n" + text)
    except configparser.Error as exc:
        raise InvalidConfig(f"{path}: {exc}".splitlines()[0]) from None
    return parser


def intrinsics_from_mapping(m) -> CameraIntrinsics:
    try:
        return CameraIntrinsics(*(float(m[k]) for k in ("fx", "fy", "cx", "cy")))
    except KeyError as exc:
        raise InvalidConfig(f"intrinsics missing key {exc}") from None
    except ValueError as exc:
        raise InvalidConfig(f"bad intrinsics value: {exc}") from None


def load_intrinsics(path) -> CameraIntrinsics:
    parser = read_config(path)
    section = parser["camera"] if parser.has_section("camera") else parser["DEFAULT"]
    return intrinsics_from_mapping(section)
