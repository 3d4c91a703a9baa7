"""Shi-Tomasi corners, pyramidal Lucas-Kanade tracking and box-based point splitting."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .boxes import BBox
from .errors import ImageTooSmall, InvalidConfig, ShapeMismatch
from .geometry import Pixel

_FLAT = 1e-12


@dataclass(frozen=True)
class GrayImage:
    intensities: np.ndarray

    def __post_init__(self):
        arr = np.array(self.intensities, dtype=float)
        if arr.ndim != 2 or arr.size == 0:
            raise ShapeMismatch(f"gray image must be 2D, got shape {arr.shape}")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise InvalidConfig("intensities must lie in [0, 1]")
        arr.setflags(write=False)
        object.__setattr__(self, "intensities", arr)

    @property
    def height(self) -> int:
        return self.intensities.shape[0]

    @property
    def width(self) -> int:
        return self.intensities.shape[1]


@dataclass(frozen=True)
class Corner:
    position: Pixel
    quality: float


@dataclass(frozen=True)
class FlowMatch:
    prev: Pixel
    next: Pixel
    converged: bool

    @property
    def flow(self) -> tuple[float, float]:
        return (self.next.u - self.prev.u, self.next.v - self.prev.v)


def gradients(img: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Central-difference gradients; border rows/columns are zero."""
    gx = np.zeros_like(img, dtype=float)
    gy = np.zeros_like(img, dtype=float)
    gx[:, 1:-1] = 0.5 * (img[:, 2:] - img[:, :-2])
    gy[1:-1, :] = 0.5 * (img[2:, :] - img[:-2, :])
    return gx, gy


def _check_window(window: int) -> int:
    if window < 1 or window % 2 == 0:
        raise InvalidConfig(f"window must be a positive odd integer, got {window}")
    return window // 2


def shi_tomasi(
    img: GrayImage,
    max_corners: int = 200,
    quality_level: float = 0.01,
    min_distance: float = 5.0,
    window: int = 3,
) -> list[Corner]:
    half = _check_window(window)
    if not 0.0 < quality_level <= 1.0:
        raise InvalidConfig("quality_level must be in (0, 1]")
    I = img.intensities
    if img.height <= window or img.width <= window:
        raise ImageTooSmall(f"image {img.width}x{img.height} not larger than window {window}")
    resp = _kernels.min_eig_response(*gradients(I), half)
    peak = resp.max()
    if peak <= _FLAT:
        return []

    padded = np.pad(resp, 1, constant_values=-np.inf)
    h, w = resp.shape
    local_max = np.ones_like(resp, dtype=bool)
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            local_max &= resp >= padded[1 + dr : 1 + dr + h, 1 + dc : 1 + dc + w]
    cand = local_max & (resp >= quality_level * peak) & (resp > _FLAT)
    rows, cols = np.nonzero(cand)
    order = np.argsort(-resp[rows, cols], kind="stable")

    kept: list[Corner] = []
    kept_xy = np.empty((0, 2))
    min_d2 = float(min_distance) ** 2
    for k in order:
        xy = np.array([cols[k] + 0.5, rows[k] + 0.5])
        if len(kept_xy) and np.min(np.sum((kept_xy - xy) ** 2, axis=1)) < min_d2:
            continue
        kept.append(Corner(Pixel(float(xy[0]), float(xy[1])), float(resp[rows[k], cols[k]])))
        kept_xy = np.vstack((kept_xy, xy))
        if len(kept) >= max_corners:
            break
    return kept


def build_pyramid(img: np.ndarray, levels: int) -> list[np.ndarray]:
    """2x2 box-averaged pyramid; level ``k`` halves continuous coordinates ``k`` times."""
    pyr = [np.asarray(img, dtype=float)]
    for _ in range(1, levels):
        prev = pyr[-1]
        h, w = prev.shape[0] // 2, prev.shape[1] // 2
        if h < 2 or w < 2:
            break
        p = prev[: 2 * h, : 2 * w]
        pyr.append(0.25 * (p[0::2, 0::2] + p[1::2, 0::2] + p[0::2, 1::2] + p[1::2, 1::2]))
    return pyr


def lk_track(
    prev: GrayImage,
    next: GrayImage,
    corners,
    window: int = 21,
    max_iters: int = 30,
    eps: float = 0.01,
    levels: int = 3,
) -> list[FlowMatch]:
    """Track ``corners`` (Corner or Pixel items) from ``prev`` into ``next``."""
    half = _check_window(window)
    if prev.intensities.shape != next.intensities.shape:
        raise ShapeMismatch(f"{prev.intensities.shape} vs {next.intensities.shape}")
    starts = [c.position if isinstance(c, Corner) else Pixel(*c) for c in corners]
    if not starts:
        return []
    uv = np.array(starts, dtype=float)
    pyr_i = build_pyramid(prev.intensities, max(levels, 1))
    pyr_j = build_pyramid(next.intensities, len(pyr_i))

    guess = np.zeros_like(uv)
    status = np.zeros(len(uv), dtype=np.int8)
    for level in range(len(pyr_i) - 1, -1, -1):
        scale = 2.0**level
        I = pyr_i[level]
        gx, gy = gradients(I)
        pts = uv / scale - 0.5
        flow, status = _kernels.lk_track_level(I, pyr_j[level], gx, gy, pts, guess, half, max_iters, eps)
        total = guess + flow
        guess = 2.0 * total if level > 0 else total

    out = []
    h, w = prev.height, prev.width
    for (u, v), (du, dv), st in zip(uv, guess, status):
        nu, nv = u + du, v + dv
        ok = st == _kernels.CONVERGED and 0.0 <= nu <= w and 0.0 <= nv <= h
        out.append(FlowMatch(Pixel(float(u), float(v)), Pixel(float(nu), float(nv)), bool(ok)))
    return out


def split_foreground(matches, box: BBox) -> tuple[list, list]:
    """Partition matches by whether their previous position lies in ``box`` (edges inclusive)."""
    fg, bg = [], []
    for m in matches:
        (fg if box.contains(m.prev.u, m.prev.v) else bg).append(m)
    return fg, bg


def load_pgm(path) -> GrayImage:
    """Read a binary (P5) 8-bit PGM, normalized to [0, 1]."""
    with open(path, "rb") as fh:
        data = fh.read()
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    if tokens[0] != b"P5":
        raise InvalidConfig(f"{path}: not a binary PGM (P5)")
    width, height, maxval = (int(t) for t in tokens[1:])
    if maxval > 255:
        raise InvalidConfig(f"{path}: only 8-bit PGM is supported")
    pos += 1
    pixels = np.frombuffer(data[pos : pos + width * height], dtype=np.uint8)
    if pixels.size != width * height:
        raise ShapeMismatch(f"{path}: truncated PGM payload")
    return GrayImage(pixels.reshape(height, width) / float(maxval))


def save_pgm(path, img: GrayImage) -> None:
    arr = np.clip(np.rint(img.intensities * 255.0), 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.width} {img.height}\n255\n".encode())
        fh.write(arr.tobytes())
