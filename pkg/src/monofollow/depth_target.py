"""Target depth from a detection box: 50-bin histogram peak, sigma split, back-projection."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .boxes import BBox
from .errors import EmptyIntersection, InvalidConfig, NonPositiveDepth, TooFewPixels
from .geometry import CameraIntrinsics, DepthMap, Point3, back_project

BIN_COUNT = 50
EXPAND_FRACTION = 0.5
SIGMA_MULTIPLIER = 2.0
_SIGMA_FLOOR = 1e-6
_FLAT_HALF_WIDTH = 1e-6


class Source(str, enum.Enum):
    NETWORK = "network"
    PNP = "pnp"
    FUSED = "fused"


@dataclass(frozen=True)
class DepthHistogram:
    edges: np.ndarray
    counts: np.ndarray

    @property
    def bin_count(self) -> int:
        return len(self.counts)

    @property
    def bin_width(self) -> float:
        return float(self.edges[1] - self.edges[0])


@dataclass(frozen=True)
class TargetEstimate:
    position: Point3
    timestamp: float
    source: Source = Source.NETWORK

    def __post_init__(self):
        p = Point3(*map(float, self.position))
        if not p.z > 0:
            raise NonPositiveDepth(f"target depth must be positive, got {p.z}")
        object.__setattr__(self, "position", p)
        object.__setattr__(self, "source", Source(self.source))

    @property
    def depth(self) -> float:
        return self.position.z


@dataclass(frozen=True)
class PeakDepth:
    depth: float
    hist: DepthHistogram
    range: tuple[float, float]
    bins: tuple[int, int]  # inclusive index range of the expanded peak

    def __iter__(self):
        return iter((self.depth, self.hist, self.range))


def box_cells(dm: DepthMap, box: BBox) -> tuple[slice, slice]:
    """Row/column slices of grid cells whose centers lie inside ``box``."""
    c0 = max(int(np.ceil(box.x1 - 0.5)), 0)
    c1 = min(int(np.floor(box.x2 - 0.5)), dm.width - 1)
    r0 = max(int(np.ceil(box.y1 - 0.5)), 0)
    r1 = min(int(np.floor(box.y2 - 0.5)), dm.height - 1)
    if c0 > c1 or r0 > r1:
        raise EmptyIntersection(f"box {box} does not intersect the {dm.width}x{dm.height} image")
    return slice(r0, r1 + 1), slice(c0, c1 + 1)


def _box_depths(dm: DepthMap, box: BBox) -> np.ndarray:
    rs, cs = box_cells(dm, box)
    return dm.values[rs, cs][dm.valid[rs, cs]]


def _bin_index(depths: np.ndarray, edges: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(edges, depths, side="right") - 1
    return np.clip(idx, 0, len(edges) - 2)


def histogram_peak_depth(dm: DepthMap, box: BBox, average_over: str = "range") -> PeakDepth:
    """Depth of the dominant mode of valid depths inside ``box``.

    The peak bin (ties go to the nearer bin) is widened while a neighbour
    holds at least half the peak count.  ``average_over="range"`` averages
    the depths in the widened range; ``"foreground"`` averages the sigma-split
    foreground instead.
    """
    depths = _box_depths(dm, box)
    if depths.size < BIN_COUNT:
        raise TooFewPixels(f"{depths.size} valid pixels in box, need {BIN_COUNT}")
    lo, hi = float(depths.min()), float(depths.max())
    if hi - lo < 2 * _FLAT_HALF_WIDTH:
        lo, hi = lo - _FLAT_HALF_WIDTH, hi + _FLAT_HALF_WIDTH
    edges = np.linspace(lo, hi, BIN_COUNT + 1)
    idx = _bin_index(depths, edges)
    counts = np.bincount(idx, minlength=BIN_COUNT)

    peak = int(np.argmax(counts))  # argmax picks the first, i.e. nearest, maximum
    need = EXPAND_FRACTION * counts[peak]
    left = right = peak
    while left > 0 and counts[left - 1] >= need:
        left -= 1
    while right < BIN_COUNT - 1 and counts[right + 1] >= need:
        right += 1
    inside = (idx >= left) & (idx <= right)
    depth = float(depths[inside].mean())
    # keep the mean inside the data range despite rounding
    depth = min(max(depth, float(depths.min())), float(depths.max()))
    result = PeakDepth(depth, DepthHistogram(edges, counts), (float(edges[left]), float(edges[right + 1])), (left, right))
    if average_over == "foreground":
        mask = sigma_split(dm, box, depth, result.range)
        fg = dm.values[mask]
        if fg.size:
            result = PeakDepth(float(fg.mean()), result.hist, result.range, result.bins)
    elif average_over != "range":
        raise InvalidConfig(f"average_over must be 'range' or 'foreground', got {average_over!r}")
    return result


def sigma_split(dm: DepthMap, box: BBox, peak_depth: float, peak_range) -> np.ndarray:
    """Full-image boolean mask of in-box foreground pixels (within 2 sigma of the peak)."""
    lo, hi = peak_range
    if not lo <= hi:
        raise InvalidConfig(f"invalid peak range {peak_range}")
    rs, cs = box_cells(dm, box)
    vals = dm.values[rs, cs]
    valid = dm.valid[rs, cs]
    in_range = valid & (vals >= lo) & (vals <= hi)
    sigma = float(vals[in_range].std()) if in_range.any() else 0.0
    sigma = max(sigma, _SIGMA_FLOOR)
    mask = np.zeros(dm.shape, dtype=bool)
    mask[rs, cs] = valid & (np.abs(vals - peak_depth) <= SIGMA_MULTIPLIER * sigma)
    return mask


def target_position(intr: CameraIntrinsics, box: BBox, depth: float, t: float) -> TargetEstimate:
    """Back-project the box center at ``depth``."""
    return TargetEstimate(back_project(intr, box.center, depth), t, Source.NETWORK)
