"""Axis-aligned boxes, detections, IoU and generalized IoU."""
from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import InvalidConfig


@dataclass(frozen=True)
class BBox:
    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise InvalidConfig(f"degenerate box {self}")

    @property
    def area(self) -> float:
        return (self.x2 - self.x1) * (self.y2 - self.y1)

    @property
    def center(self) -> tuple[float, float]:
        return ((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)

    def contains(self, u: float, v: float) -> bool:
        """Closed-boundary membership test."""
        return self.x1 <= u <= self.x2 and self.y1 <= v <= self.y2

    def shifted(self, dx: float, dy: float) -> BBox:
        return BBox(self.x1 + dx, self.y1 + dy, self.x2 + dx, self.y2 + dy)


@dataclass(frozen=True)
class Detection:
    bbox: BBox
    class_id: int = 0
    confidence: float = 1.0
    timestamp: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise InvalidConfig(f"confidence {self.confidence} outside [0, 1]")


def _intersection(a: BBox, b: BBox) -> float:
    w = min(a.x2, b.x2) - max(a.x1, b.x1)
    h = min(a.y2, b.y2) - max(a.y1, b.y1)
    return max(w, 0.0) * max(h, 0.0)


def iou(a: BBox, b: BBox) -> float:
    inter = _intersection(a, b)
    return inter / (a.area + b.area - inter)


def giou(a: BBox, b: BBox) -> float:
    """Generalized IoU; the training loss is ``1 - giou``."""
    inter = _intersection(a, b)
    union = a.area + b.area - inter
    # smallest enclosing box: min of the low corners, max of the high corners
    enclose = (max(a.x2, b.x2) - min(a.x1, b.x1)) * (max(a.y2, b.y2) - min(a.y1, b.y1))
    # enclose >= union exactly; rounding can flip the sign when one box holds the other
    return inter / union - max(enclose - union, 0.0) / enclose


def giou_loss(a: BBox, b: BBox) -> float:
    return 1.0 - giou(a, b)


def load_detections(path) -> list[Detection]:
    """Read JSON-lines detections with keys t, x1, y1, x2, y2, class, conf."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                out.append(
                    Detection(
                        BBox(float(rec["x1"]), float(rec["y1"]), float(rec["x2"]), float(rec["y2"])),
                        int(rec.get("class", 0)),
                        float(rec.get("conf", 1.0)),
                        float(rec["t"]),
                    )
                )
            except (KeyError, ValueError, TypeError) as exc:
                raise InvalidConfig(f"{path}:{lineno}: bad detection record ({exc})") from None
    return out


def dump_detection(det: Detection) -> str:
    b = det.bbox
    return json.dumps(
        {"t": det.timestamp, "x1": b.x1, "y1": b.y1, "x2": b.x2, "y2": b.y2,
         "class": det.class_id, "conf": det.confidence}
    )
