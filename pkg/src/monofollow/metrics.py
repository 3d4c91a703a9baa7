"""Depth-map error metrics."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import InvalidConfig, NoValidPixels, ShapeMismatch
from .geometry import DepthMap


@dataclass(frozen=True)
class DepthMetrics:
    abs_rel: float
    sq_rel: float
    rms: float
    log_rms: float
    accuracy: float

    def as_dict(self) -> dict:
        return asdict(self)


def depth_metrics(
    gt: DepthMap, pred: DepthMap, accuracy_threshold: float = 1.25, conventional_sq_rel: bool = False
) -> DepthMetrics:
    """Errors over cells valid (and positive) in both maps.

    ``sq_rel`` is the mean squared relative error ``((gt - pred) / gt)**2``;
    pass ``conventional_sq_rel=True`` for the common ``(gt - pred)**2 / gt``.
    ``accuracy`` is the fraction of cells with ``max(gt/pred, pred/gt)``
    below the threshold.
    """
    if not accuracy_threshold > 1:
        raise InvalidConfig("accuracy_threshold must exceed 1")
    if gt.shape != pred.shape:
        raise ShapeMismatch(f"depth map shapes differ: {gt.shape} vs {pred.shape}")
    mask = gt.valid & pred.valid
    if not mask.any():
        raise NoValidPixels("no cell is valid in both maps")
    g = gt.values[mask]
    p = pred.values[mask]
    diff = g - p
    rel = np.abs(diff) / g
    sq = diff**2 / g if conventional_sq_rel else rel**2
    ratio = np.maximum(g / p, p / g)
    return DepthMetrics(
        abs_rel=float(rel.mean()),
        sq_rel=float(sq.mean()),
        rms=float(np.sqrt(np.mean(diff**2))),
        log_rms=float(np.sqrt(np.mean((np.log(g) - np.log(p)) ** 2))),
        accuracy=float(np.mean(ratio < accuracy_threshold)),
    )
